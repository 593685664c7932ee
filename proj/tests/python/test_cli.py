import json
import os
import subprocess

import pytest

CLI = os.environ.get("AFSHAPE_CLI", "afshape")


def run(*args, cwd=None):
    return subprocess.run([CLI, *args], cwd=cwd, capture_output=True, text=True)


def write(path, obj_or_text):
    path.write_text(obj_or_text if isinstance(obj_or_text, str) else json.dumps(obj_or_text, indent=2))
    return str(path)


def test_design_writes_outputs(tmp_path):
    req = write(tmp_path / "req.json", {"rho": 0.5, "eps_psl_db": -5, "eps_isl_db": 7,
                                        "channel": {"type": "flat", "snr_db": 10}})
    res = run("design", "--config", req, "--out", str(tmp_path / "o"))
    assert res.returncode == 0, res.stderr
    doc = json.loads((tmp_path / "o" / "design.json").read_text())
    assert doc["result"]["kappa"] == 16
    assert (tmp_path / "o" / "predicted_metrics.csv").read_text().startswith("metric,")


def test_exit_codes(tmp_path):
    infeasible = write(tmp_path / "inf.json", {"eps_psl_db": -5, "eps_isl_db": 7, "grid": {"n": 16, "n_cp": 4},
                                               "channel": {"type": "flat", "snr_db": 10}})
    res = run("design", "--config", infeasible)
    assert res.returncode == 3
    assert json.loads(res.stderr)["error"]["type"] == "InfeasibleSecurityError"

    bad = write(tmp_path / "bad.json", '{\n  "rho": 0.5,\n  "rhoo": 1\n}\n')
    res = run("design", "--config", bad)
    assert res.returncode == 2
    err = json.loads(res.stderr)["error"]
    assert err["type"] == "ConfigError"
    assert "rhoo" in err["message"] and ":3" in err["message"]

    assert run("reproduce", "fig3", "--out", str(tmp_path)).returncode == 2
    assert run("design").returncode == 2


def test_metrics_of_an_allocation(tmp_path):
    doc = write(tmp_path / "m.json", {"allocation": {"power": [1.0] * 64}, "constellation": "QPSK"})
    res = run("metrics", "--config", doc)
    assert res.returncode == 0, res.stderr
    assert "psl_db" in res.stdout


def test_sweep_is_thread_independent(tmp_path):
    cfg = write(tmp_path / "c.json", {"experiment": "fig9", "trials": 4,
                                      "params": {"snr_db": [-20, 0], "eps_isl_db": [7]}})
    dirs = []
    for threads in ("1", "2"):
        out = tmp_path / f"t{threads}"
        res = run("sweep", "--config", cfg, "--threads", threads, "--out", str(out))
        assert res.returncode == 0, res.stderr
        (run_dir,) = list((out / "fig9").iterdir())
        dirs.append(run_dir)
    for name in ("fig9_pd.csv", "summary.json", "config.json"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
    manifest = json.loads((dirs[0] / "manifest.json").read_text())
    assert {f["name"] for f in manifest["files"]} == {"fig9_pd.csv", "summary.json", "config.json"}


def test_reproduce_with_override(tmp_path):
    res = run("reproduce", "fig6", "--out", str(tmp_path), "--set", "params.kappas=[4]")
    assert res.returncode == 0, res.stderr
    (run_dir,) = list((tmp_path / "fig6").iterdir())
    rows = (run_dir / "fig6_tradeoff.csv").read_text().splitlines()
    assert rows[0].startswith("label,")
    assert all(",4," in r or not r.startswith("grid") for r in rows[1:])
