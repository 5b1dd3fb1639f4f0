"""Comparison-inequality checks plus the small-ball hitting bound for the walk."""

import argparse
import json
import math
from dataclasses import dataclass
from pathlib import Path

from dgff.compare import run_suite
from dgff.walk import hitting_geometry, mc_hit_before_exit


@dataclass
class Config:
    level: str = "full"
    seed: int = 0
    hitting: tuple = ((8, 64, 512),)  # (r, ell, box side)
    walk_replicates: int = 10_000
    threads: int | None = None
    out: str = "results/compare"


def run(cfg: Config) -> list[dict]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r.to_dict() for r in run_suite(cfg.level, cfg.seed, cfg.threads)]
    for r, ell, n in cfg.hitting:
        box, start, target = hitting_geometry(r, ell, n)
        est = mc_hit_before_exit(box, start, target, cfg.walk_replicates, cfg.seed, cfg.threads)
        bound = 10 * math.sqrt(r / ell)
        rows.append({"check": f"hitting(r={r}, ell={ell}, n={n})", "lhs": est.probability,
                     "rhs": bound, "mc_error": est.std_error,
                     "pass": est.probability <= bound + 3 * est.std_error})
    (out / "compare.json").write_text(json.dumps(rows, indent=2))
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--level", choices=["fast", "full"], default=Config.level)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--walk-replicates", type=int, default=Config.walk_replicates)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out", default=Config.out)
    for row in run(Config(**vars(ap.parse_args()))):
        print(f"{row['check']:40s} lhs={row['lhs']:.6g} rhs={row['rhs']:.6g} "
              f"{'PASS' if row['pass'] else 'FAIL'}")
