import json
import os
import subprocess
import sys

import numpy as np
import pytest

from phase_minmax.checkpoint import load_field
from phase_minmax.cli import main, to_json
from phase_minmax.manifold import SymmetricSphereGrid


def _summary(out):
    with open(os.path.join(out, "summary.json"), encoding="utf-8") as fh:
        return json.load(fh)


def test_slide_example(tmp_path, capsys):
    out = str(tmp_path)
    code = main(["slide", "--manifold", "s2", "--lambda", "1", "--epsilon", "0.01", "--out", out])
    assert code == 0
    s = _summary(out)
    assert s["results"]["A2"] == pytest.approx(8.3775804, abs=1e-7)
    assert s["results"]["wall_lhs"] == pytest.approx(4.44288, abs=1e-5)
    assert s["results"]["wall_rhs"] == pytest.approx(1.84030, abs=1e-5)
    assert s["config"]["epsilon"] == 0.01 and s["config"]["lambda"] == 1.0
    with open(os.path.join(out, "slide_trace.csv")) as fh:
        assert fh.readline().strip() == "t,energy_coarea,energy_grid"
    assert "slide: PASS" in capsys.readouterr().out


def test_minmax_inadmissible(tmp_path, capsys):
    code = main(["minmax", "--lambda", "5", "--epsilon", "0.2", "--out", str(tmp_path)])
    assert code == 1
    assert "stable_constants" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["slide", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["nosuch"])
    assert exc.value.code == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nwhat = 1\n")
    assert main(["index", "--config", str(bad), "--out", str(tmp_path)]) == 1


def test_flag_overrides_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nepsilon = 0.3\n")
    assert main(["index", "--config", str(cfg), "--epsilon", "0.1", "--out", str(tmp_path)]) == 0


def test_competitor_tau_zero_fails(tmp_path):
    assert main(["competitor", "--tau", "0", "--out", str(tmp_path)]) == 2
    s = _summary(str(tmp_path))
    assert s["passed"] is False and s["exit_code"] == 2
    assert s["results"]["verdict"] == "FAIL"


@pytest.mark.parametrize("manifold,lam", [("s2", "1"), ("s3", "0.5")])
def test_index_subcommand(tmp_path, manifold, lam):
    assert main(["index", "--manifold", manifold, "--lambda", lam, "--out", str(tmp_path)]) == 0
    with open(tmp_path / "spectrum.json") as fh:
        spec = json.load(fh)
    assert spec["index"] == 1 and len(spec["eigenvalues"]) == 10
    assert "config" in spec


def test_tube_subcommand(tmp_path):
    assert main(["tube", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "tube_sweep.csv").exists()


def test_minmax_subcommand(tmp_path):
    assert main(["minmax", "--grid", "400", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "minmax_result.json") as fh:
        res = json.load(fh)
    assert {"beta_eps", "residual", "morse_index", "iterations", "interface_theta_estimate"} <= set(res)
    assert res["morse_index"] == 1
    u = load_field(tmp_path / "u_crit.csv", SymmetricSphereGrid(2, 400))
    assert np.all(np.isfinite(u.values))
    with open(tmp_path / "minmax_trace.csv") as fh:
        assert fh.readline().strip() == "sweep,max_energy,residual"


def _run_cli(args, env_extra):
    env = dict(os.environ, **env_extra)
    return subprocess.run([sys.executable, "-m", "phase_minmax.cli", *args], env=env,
                          capture_output=True, text=True)


def test_deterministic_outputs(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        r = _run_cli(["slide", "--epsilon", "0.05", "--out", str(out)], {"PHASE_MINMAX_THREADS": "2"})
        assert r.returncode == 0, r.stderr
        outs.append(out)
    for name in ("summary.json", "slide_trace.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert _summary(str(outs[0]))["threads"] == 2


def test_bad_thread_env(tmp_path):
    r = _run_cli(["index", "--out", str(tmp_path)], {"PHASE_MINMAX_THREADS": "zero"})
    assert r.returncode == 1


def test_json_floats_round_trip():
    x = 0.1 + 0.2
    assert json.loads(to_json({"x": x}))["x"] == x
    assert json.loads(to_json([float("nan")])) == [None]


def test_errors_subcommand(tmp_path):
    assert main(["errors", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "errors.csv") as fh:
        header = fh.readline().strip().split(",")
        rows = fh.readlines()
    assert header[0] == "eps" and len(rows) == 5
