import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from subspec.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def load(path):
    return json.loads(Path(path).read_text())


def test_decide_poly_not_discrete(tmp_path, capsys):
    code, out = run(tmp_path, "decide-poly", "--group", "heisenberg:1", "--potential", "x^2+y^2")
    assert code == EXIT_FAIL
    rep = load(out / "report.json")
    assert rep["verdict"] == "NotDiscrete" and rep["kernel"] == ["T"]
    assert rep["witness"]["identity_holds"] and rep["leibman_degree"] == 2
    man = load(out / "manifest.json")
    assert man["exit_code"] == EXIT_FAIL and man["outputs"] == ["report.json"]
    assert len(man["group_hash"]) == 64
    assert "kernel: {T}" in capsys.readouterr().out


def test_decide_poly_discrete(tmp_path):
    code, out = run(tmp_path, "decide-poly", "--group", "heisenberg:1", "--potential", "t^2")
    assert code == EXIT_OK
    assert load(out / "report.json")["kernel"] == []


def test_decide_poly_from_definition_file(tmp_path):
    g = tmp_path / "r2.json"
    g.write_text(json.dumps({"dim": 2, "horizontal": [1, 2]}))
    code, out = run(tmp_path, "decide-poly", "--group", str(g), "--potential", "x1^2")
    assert code == EXIT_FAIL
    assert load(out / "report.json")["kernel"] == ["E2"]


def test_usage_errors(tmp_path, capsys):
    code, out = run(tmp_path, "decide-poly", "--group", "heisenberg:1", "--potential", "x + * y")
    assert code == EXIT_USAGE
    assert "column" in capsys.readouterr().err
    assert load(out / "manifest.json")["exit_code"] == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"group": "heisenberg:1", "potential": "t^2", "r": 1, "h": 0.25,
                               "centers": {"ray": [0, 0]}}))
    assert run(tmp_path, "eigen-scan", "--config", str(cfg))[0] == EXIT_USAGE
    assert main(["eigen-scan", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o2")]) == EXIT_USAGE


def test_eigen_scan_oscillator(tmp_path):
    code, out = run(tmp_path, "eigen-scan", "--config", str(CONFIGS / "oscillator_scan.json"))
    assert code == EXIT_OK
    with open(out / "scan.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["center_1", "sigma", "bc", "r", "h_1", "residual"]
    assert len(rows) == 8
    assert load(out / "scan.json")["verdict"] == "Growth"
    with open(out / "tail.csv") as fh:
        tail = [float(r["tail_mass_sup"]) for r in csv.DictReader(fh)]
    assert all(a > b for a, b in zip(tail, tail[1:]))
    man = load(out / "manifest.json")
    assert sorted(man["outputs"]) == ["scan.csv", "scan.json", "tail.csv"]


def test_muck_check_exit_codes(tmp_path):
    cfg = load(CONFIGS / "muck_exp.json")
    cfg["samples"] = 4096
    good = tmp_path / "good.json"
    good.write_text(json.dumps(cfg))
    assert run(tmp_path, "muck-check", "--config", str(good))[0] == EXIT_OK
    cfg["weight"] = "exp(x^2)"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(cfg))
    code, out = run(tmp_path, "muck-check", "--config", str(bad))
    assert code == EXIT_FAIL
    verdict = load(out / "verdict.json")
    assert any(not v["pass"] for v in verdict["certificates"].values())


def test_muck_check_deterministic_across_threads(tmp_path):
    cfg = load(CONFIGS / "muck_exp.json")
    cfg["samples"] = 4096
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    a = main(["muck-check", "--config", str(p), "--threads", "1", "--out", str(tmp_path / "a")])
    b = main(["muck-check", "--config", str(p), "--threads", "3", "--out", str(tmp_path / "b")])
    assert a == b
    assert (tmp_path / "a" / "balls.csv").read_bytes() == (tmp_path / "b" / "balls.csv").read_bytes()


def test_weight_transform(tmp_path):
    code, out = run(tmp_path, "weight-transform", "--config", str(CONFIGS / "weight_transform_ou.json"))
    assert code == EXIT_OK
    rep = load(out / "report.json")
    assert rep["potential"] == "x1**2 - 1"
    assert max(abs(d) for d in rep["differences"]) < 1e-3


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "subspec.cli", "decide-poly", "--group", "euclidean:2",
                           "--potential", "x1, x2", "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert "Discrete" in proc.stdout


def test_muck_check_integral_and_thinness(tmp_path):
    cfg = load(CONFIGS / "muck_oscillator.json")
    cfg["samples"] = 4096
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    code, out = run(tmp_path, "muck-check", "--config", str(p))
    verdict = load(out / "verdict.json")
    assert verdict["integral_growth"]["verdict"] == "Growth"
    assert verdict["sublevel_thinness"]["pass"]
    # x^2 vanishes at 0, so the A-infinity certificate decides the exit code and the label
    assert code == (EXIT_OK if verdict["certificates"]["ainfty"]["pass"]
                    and verdict["certificates"]["doubling"]["pass"] else EXIT_FAIL)
    with open(out / "growth.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 16
    assert (out / "thinness.csv").exists() and (out / "balls.csv").exists()


def test_eigen_scan_heisenberg_bounded(tmp_path):
    code, out = run(tmp_path, "eigen-scan", "--config", str(CONFIGS / "heisenberg_t_ray_scan.json"),
                    "--threads", "2")
    assert code == EXIT_OK
    data = load(out / "scan.json")
    assert data["verdict"] == "Bounded" and len(data["sigma"]) == 8
