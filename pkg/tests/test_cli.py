import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from dgff.cli import main
from dgff.sampler import read_samples, spectral_sampler


def outputs_of(d):
    m = json.loads(next(d.glob("*_manifest.json")).read_text())
    return {name: (d / name).read_bytes() for name in m["outputs"]}


def test_green_box4_center(tmp_path):
    assert main(["green", "--box", "4", "--pairs", "center:center;1,1:3,3", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "green_pairs.csv")))
    assert float(rows[0]["covariance"]) == pytest.approx(1.5, abs=1e-10)
    assert float(rows[0]["correlation"]) == pytest.approx(1.0)
    assert len(list(csv.DictReader(open(tmp_path / "green_variance.csv")))) == 9
    m = json.loads((tmp_path / "green_manifest.json").read_text())
    assert m["command"] == "green" and m["seed"] == 0
    assert "--out" not in m["argv"]


def test_green_ball(tmp_path):
    assert main(["green", "--ball", "4", "--pairs", "center:1,0", "--out", str(tmp_path)]) == 0


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["green"],
    ["green", "--box", "4", "--ball", "3"],
    ["green", "--box", "1"],
    ["green", "--box", "4", "--pairs", "0,0:2,2"],
    ["green", "--box", "4", "--pairs", "nonsense"],
    ["sample", "--box", "8"],
    ["tails", "--box", "8", "--reps", "200", "--grid", "3:1:0.5"],
    ["--replay", "/nonexistent/manifest.json"],
])
def test_usage_errors(tmp_path, argv):
    assert main(argv + (["--out", str(tmp_path)] if argv and argv[0] in
                        ("green", "sample", "tails") else [])) == 2


def test_resource_limit(tmp_path):
    assert main(["sample", "--box", "1000", "--reps", "200", "--out", str(tmp_path)]) == 3


def test_sample_dump_and_threads(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sample", "--box", "12", "--reps", "700", "--first", "5", "--seed", "4",
                 "--threads", "1", "--out", str(a)]) == 0
    assert main(["sample", "--box", "12", "--reps", "700", "--first", "5", "--seed", "4",
                 "--threads", "8", "--out", str(b)]) == 0
    assert (a / "samples.bin").read_bytes() == (b / "samples.bin").read_bytes()
    n, seed, first, data = read_samples(a / "samples.bin")
    assert (n, seed, first, data.shape) == (12, 4, 5, (700, 121))
    assert np.array_equal(data[10], spectral_sampler(12).batch(4, 15, 1)[0].ravel())


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# maxima run\nbox = 8 16\nreps = 300\nseed = 7\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["maxima", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["maxima", "--config", str(cfg), "--seed", "8", "--out", str(b)]) == 0
    ma = json.loads((a / "maxima_manifest.json").read_text())
    mb = json.loads((b / "maxima_manifest.json").read_text())
    assert ma["config"]["box"] == [8, 16] and ma["seed"] == 7
    assert mb["seed"] == 8
    rows = list(csv.DictReader(open(a / "maxima_summary.csv")))
    assert [r["n"] for r in rows] == ["8", "16"]
    bad = tmp_path / "bad.cfg"
    bad.write_text("box 8\n")
    assert main(["maxima", "--config", str(bad), "--out", str(a)]) == 2


@pytest.mark.parametrize("argv", [
    ["green", "--box", "10", "--pairs", "center:2,2"],
    ["sample", "--box", "9", "--reps", "300", "--seed", "3"],
    ["maxima", "--box", "8", "12", "--reps", "500", "--seed", "2"],
    ["tails", "--box", "16", "--reps", "2000", "--seed", "5", "--grid", "0:2:0.25", "--window", "0:2"],
    ["verify", "--level", "fast"],
])
def test_replay_bitwise_any_threads(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a), "--threads", "1"]) == 0
    manifest = next(a.glob("*_manifest.json"))
    assert main(["--replay", str(manifest), "--out", str(b), "--threads", "6"]) == 0
    assert outputs_of(a) == outputs_of(b)


def test_tails_outputs(tmp_path):
    assert main(["tails", "--box", "16", "--reps", "4000", "--seed", "1",
                 "--grid", "0:2:0.25", "--window", "0:2", "--out", str(tmp_path)]) == 0
    fits = list(csv.DictReader(open(tmp_path / "tails_fit.csv")))
    assert [f["model"] for f in fits] == ["log-linear", "loglog-linear"]
    assert float(fits[0]["slope"]) < 0


def test_verify_report(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report and all(r["pass"] for r in report)
    assert "PASS" in capsys.readouterr().out


def test_console_script(tmp_path):
    exe = shutil.which("dgff")
    if exe is None:
        pytest.skip("console script not installed")
    res = subprocess.run([exe, "green", "--box", "2", "--out", str(tmp_path)], capture_output=True)
    assert res.returncode == 0
