"""Command-line driver: ``dgff {green,sample,maxima,tails,verify}``.

Every run writes its outputs plus ``<command>_manifest.json`` into ``--out``.
``dgff --replay manifest.json`` re-executes the recorded arguments and
reproduces every output byte for byte.  Exit codes: 0 pass, 1 failed check,
2 usage error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InsufficientDataError, ResourceLimitError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
SAMPLE_CAP = 2**27  # float64 values per dump


class UsageError(Exception):
    pass


def _grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:step, got {text!r}")
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs step > 0 and hi >= lo")
    return np.round(np.arange(lo, hi + step / 2, step), 12)


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be lo:hi, got {text!r}")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="worker cap (default: $GFF_THREADS or 1)")
    common.add_argument("--config", help="flat key = value file mirroring the flags")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="dgff", description=__doc__.splitlines()[0])
    p.add_argument("--replay", metavar="MANIFEST", help="re-run a recorded manifest")
    sub = p.add_subparsers(dest="command")

    g = sub.add_parser("green", parents=[common], help="variance profile and covariances")
    shape = g.add_mutually_exclusive_group(required=True)
    shape.add_argument("--box", type=int, help="box side length n ((n+1)^2 vertices)")
    shape.add_argument("--ball", type=int, help="discrete ball radius (centred at the origin)")
    g.add_argument("--pairs", default="", help="'center:center;x,y:x,y;...'")

    s = sub.add_parser("sample", parents=[common], help="binary dump of box fields")
    s.add_argument("--box", type=int, required=True)
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--first", type=int, default=0, help="first replicate index")

    m = sub.add_parser("maxima", parents=[common], help="raw maxima and moments")
    m.add_argument("--box", type=int, nargs="+", required=True)
    m.add_argument("--reps", type=int, required=True)

    t = sub.add_parser("tails", parents=[common], help="empirical tails and rate fits")
    t.add_argument("--box", type=int, required=True)
    t.add_argument("--reps", type=int, required=True)
    t.add_argument("--side", choices=["right", "left", "both"], default="both")
    t.add_argument("--grid", type=_grid, default=_grid("0:4:0.25"))
    t.add_argument("--window", type=_window, default=(1.0, 3.0))
    t.add_argument("--centering", choices=["mean", "median"], default="mean")

    v = sub.add_parser("verify", parents=[common], help="comparison-inequality suite")
    v.add_argument("--level", choices=["fast", "full"], default="fast")
    return p


def read_config(path) -> list[str]:
    """``key = value`` lines to flag tokens; ``#`` starts a comment."""
    tokens = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"bad config line: {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        tokens.append("--" + key.replace("_", "-"))
        tokens.extend(val.split())
    return tokens


def expand_argv(argv: list[str]) -> list[str]:
    """Insert config-file tokens right after the subcommand so explicit flags win."""
    if "--config" not in argv:
        return list(argv)
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    return rest[:1] + read_config(path) + rest[1:]


def _parse_vertex(text: str, center):
    if text == "center":
        return center
    try:
        x, y = (int(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"bad vertex {text!r}")
    return (x, y)


def _manifest(args, argv, outputs: list[str]) -> dict:
    snapshot = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in vars(args).items() if k not in ("out", "replay", "config")}
    return {
        "command": args.command,
        "argv": argv,
        "config": snapshot,
        "seed": args.seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": outputs,
    }


def _write_manifest(out: Path, args, argv, outputs) -> Path:
    path = out / f"{args.command}_manifest.json"
    path.write_text(json.dumps(_manifest(args, argv, outputs), indent=2, sort_keys=True) + "\n")
    return path


def cmd_green(args, out: Path) -> tuple[int, list[str]]:
    from .green import (correlation, green_dense, green_operator, variance_profile,
                        write_pairs_csv, write_variance_csv)
    from .lattice import box_center, build_ball, build_box

    if args.box is not None:
        if args.box < 2:
            raise UsageError("--box must be >= 2")
        region, center = build_box(args.box), box_center(args.box)
        g = green_operator(region)
    else:
        if args.ball < 2:
            raise UsageError("--ball must be >= 2")
        region, center = build_ball((0, 0), args.ball).region, (0, 0)
        g = green_dense(region)
    pairs = []
    for item in filter(None, (s.strip() for s in args.pairs.split(";"))):
        if item.count(":") != 1:
            raise UsageError(f"bad pair {item!r}; expected u:w")
        u, w = (_parse_vertex(s, center) for s in item.split(":"))
        if not (region.is_interior(u) and region.is_interior(w)):
            raise UsageError(f"pair {item!r} is not interior")
        pairs.append((u, w))
    write_variance_csv(out / "green_variance.csv", variance_profile(g))
    write_pairs_csv(out / "green_pairs.csv", correlation(g, pairs))
    return EXIT_OK, ["green_variance.csv", "green_pairs.csv"]


def cmd_sample(args, out: Path) -> tuple[int, list[str]]:
    from .sampler import map_chunks, spectral_sampler, write_samples

    if args.box < 2 or args.reps < 1:
        raise UsageError("need --box >= 2 and --reps >= 1")
    if args.reps * (args.box - 1) ** 2 > SAMPLE_CAP:
        raise ResourceLimitError(f"dump of {args.reps} fields exceeds {SAMPLE_CAP} values")
    samp = spectral_sampler(args.box)
    chunks = map_chunks(lambda lo, hi: samp.batch(args.seed, lo, hi - lo).reshape(hi - lo, -1),
                        args.first, args.first + args.reps, samp.chunk, args.threads)
    write_samples(out / "samples.bin", args.box, args.seed, args.first, np.concatenate(chunks))
    return EXIT_OK, ["samples.bin"]


def cmd_maxima(args, out: Path) -> tuple[int, list[str]]:
    import csv

    from .maxima import estimate_moments, run_maxima, write_maxima_csv
    from .rng import derive_seed

    stats = [run_maxima(n, args.reps, derive_seed(args.seed, n), args.threads) for n in args.box]
    write_maxima_csv(out / "maxima_raw.csv", stats)
    with open(out / "maxima_summary.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "replicates", "mean", "mean_se", "variance", "variance_se"])
        for st in stats:
            e = estimate_moments(st)
            wr.writerow([st.n, e.replicates] + [f"{x:.17g}" for x in
                                                (e.mean, e.mean_se, e.variance, e.variance_se)])
    return EXIT_OK, ["maxima_raw.csv", "maxima_summary.csv"]


def cmd_tails(args, out: Path) -> tuple[int, list[str]]:
    from .maxima import (empirical_tail, fit_rate, run_maxima, write_fit_csv,
                         write_maxima_csv, write_tail_csv)
    from .rng import derive_seed

    stat = run_maxima(args.box, args.reps, derive_seed(args.seed, args.box), args.threads)
    write_maxima_csv(out / "tails_raw.csv", [stat])
    outputs, fits = ["tails_raw.csv"], []
    for side in (("right", "left") if args.side == "both" else (args.side,)):
        tail = empirical_tail(stat, side, args.grid, centering=args.centering)
        name = f"tails_{side}.csv"
        write_tail_csv(out / name, tail)
        outputs.append(name)
        try:
            fits.append(fit_rate(tail, args.window))
        except InsufficientDataError as exc:
            print(f"{side} fit skipped: {exc}", file=sys.stderr)
    write_fit_csv(out / "tails_fit.csv", fits)
    outputs.append("tails_fit.csv")
    return EXIT_OK, outputs


def cmd_verify(args, out: Path) -> tuple[int, list[str]]:
    from .compare import run_suite

    reports = run_suite(args.level, args.seed, args.threads)
    width = max(len(r.check) for r in reports)
    for r in reports:
        print(f"{r.check:<{width}}  lhs={r.lhs:.6g}  rhs={r.rhs:.6g}  "
              f"{'PASS' if r.passed else 'FAIL'}")
    (out / "verify_report.json").write_text(
        json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n")
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print("FAILED:", json.dumps(r.to_dict(), sort_keys=True), file=sys.stderr)
    return (EXIT_FAIL if failed else EXIT_OK), ["verify_report.json"]


COMMANDS = {"green": cmd_green, "sample": cmd_sample, "maxima": cmd_maxima,
            "tails": cmd_tails, "verify": cmd_verify}


def _replay_argv(argv: list[str]) -> list[str]:
    i = argv.index("--replay")
    if i + 1 >= len(argv):
        raise UsageError("--replay needs a manifest path")
    manifest = json.loads(Path(argv[i + 1]).read_text())
    recorded = list(manifest["argv"])
    extra = argv[:i] + argv[i + 2:]
    return recorded + extra  # e.g. a different --out or --threads


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if "--replay" in argv:
            argv = _replay_argv(argv)
        argv = expand_argv(argv)
    except (UsageError, OSError, KeyError, json.JSONDecodeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"dgff: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.threads is None:
        args.threads = int(os.environ.get("GFF_THREADS", "1"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code, outputs = COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dgff: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"dgff: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    # the recorded argv omits --out/--threads so a replay can redirect them
    _write_manifest(out, args, _strip(argv, ("--out", "--threads")), outputs)
    return code


def _strip(argv: list[str], flags) -> list[str]:
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok in flags:
            skip = True
            continue
        if any(tok.startswith(f + "=") for f in flags):
            continue
        out.append(tok)
    return out


if __name__ == "__main__":
    sys.exit(main())
