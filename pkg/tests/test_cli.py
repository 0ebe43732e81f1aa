import json
import subprocess
import sys

import numpy as np
import pytest

from quadinv import cli
from quadinv.grid_ops import from_csv
from quadinv.scenario import ConfigError, load_config_text, resolve, validate


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_propagate_smoke(tmp_path, capsys):
    code = cli.main(["propagate", "--preset", "sho", "--solver", "kernel", "--t", "1.0", "--out", str(tmp_path)])
    assert code == 0
    m = manifest(tmp_path)
    assert m["status"] == "ok" and m["exit_code"] == 0
    text = (tmp_path / "psi_kernel_000.csv").read_text()
    assert text.splitlines()[0] == "x,re,im,abs2"
    wf = from_csv(tmp_path / "psi_kernel_000.csv")
    assert wf.norm() == pytest.approx(1.0, abs=1e-8)
    assert "exit 0" in capsys.readouterr().out


def test_propagate_is_deterministic(tmp_path):
    args = ["propagate", "--preset", "parametric", "--solver", "oracle", "--t", "0.2", "0.4", "--dt", "1e-3"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b")])
    for name in ("psi_oracle_000.csv", "psi_oracle_001.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solvers_agree(tmp_path):
    outs = {}
    for solver in ("kernel", "oracle", "expansion"):
        d = tmp_path / solver
        assert cli.main(["propagate", "--preset", "sho", "--solver", solver, "--t", "1.0", "--out", str(d)]) == 0
        outs[solver] = from_csv(d / f"psi_{solver}_000.csv")
    for other in ("oracle", "expansion"):
        assert (outs["kernel"] - outs[other]).norm() < 1e-4


def test_expand_writes_coefficients(tmp_path):
    code = cli.main(["expand", "--preset", "sho", "--t", "0.5", "1.0", "-N", "32", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "coefficients_001.csv").read_text().splitlines()
    assert lines[0] == "n,abs,arg" and len(lines) == 33
    assert "delta" in manifest(tmp_path)["info"]


def test_verify_skew(tmp_path, capsys):
    code = cli.main(["verify", "--preset", "skew", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") >= 10
    assert all(c["passed"] is not False for c in manifest(tmp_path)["checks"])


def test_invariants_drift_files(tmp_path):
    assert cli.main(["invariants", "--preset", "caldirola_kanai", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "drift_quadratic.csv").read_text().splitlines()
    assert lines[0] == "t,value_re,value_im,rel_drift"
    assert len(lines) == 16


def test_ermakov_pinney(tmp_path, capsys):
    code = cli.main(["ermakov", "--preset", "parametric", "--c0", "1", "--pinney", "--out", str(tmp_path)])
    assert code == 0
    assert "max relative discrepancy" in capsys.readouterr().out
    data = np.genfromtxt(tmp_path / "kappa.csv", delimiter=",", names=True)
    assert data["rel_diff"].max() < 1e-6
    assert manifest(tmp_path)["info"]["max_discrepancy"] < 1e-6


def test_inline_coefficients(tmp_path):
    coeffs = '{"a": "0.5", "b": "0.5 + 0.1*cos(t)", "c": "0.05*t", "d": "0.1"}'
    assert cli.main(["ermakov", "--coeffs", coeffs, "--out", str(tmp_path)]) == 0
    assert manifest(tmp_path)["resolved"]["preset"]["c"] == "0.05*t"


def test_schema_violation(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"preset": "sho", "grid": {"x_min": -5, "x_max": 5, "n": "many"}}))
    code = cli.main(["propagate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "grid/n" in capsys.readouterr().err
    assert manifest(tmp_path / "o")["status"] == "config_error"


def test_json_syntax_error_reports_position(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "preset": "sho",\n  "times": [1.0,]\n}')
    assert cli.main(["propagate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "line 3" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path):
    # the free Gaussian reaches the edge of a small grid
    code = cli.main(["propagate", "--preset", "free", "--solver", "oracle", "--t", "2.5",
                     "--grid", "-6", "6", "256", "--out", str(tmp_path)])
    assert code == 3
    m = manifest(tmp_path)
    assert m["error"]["type"] == "ResolutionError"
    assert m["error"]["module"] == "quadinv.errors"


def test_times_must_increase(tmp_path):
    assert cli.main(["propagate", "--t", "1.0", "0.5", "--out", str(tmp_path)]) == 2


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("QUADINV_OUT_DIR", str(tmp_path / "env"))
    assert cli.main(["propagate", "--t", "0.3"]) == 0
    assert (tmp_path / "env" / "manifest.json").exists()
    assert cli.main(["propagate", "--t", "0.3", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "manifest.json").exists()


def test_batch_run(tmp_path, capsys):
    batch = {"scenarios": [
        {"name": "k", "command": "propagate", "preset": "sho", "times": [0.5]},
        {"name": "e", "command": "ermakov", "preset": "sho", "pinney": True},
        {"name": "bad", "command": "propagate", "preset": "free", "solver": "oracle", "times": [2.5],
         "grid": {"x_min": -6, "x_max": 6, "n": 256}},
    ]}
    f = tmp_path / "batch.json"
    f.write_text(json.dumps(batch))
    code = cli.main(["run", str(f), "--jobs", "2", "--out", str(tmp_path / "out")])
    assert code == 3
    assert manifest(tmp_path / "out" / "k")["exit_code"] == 0
    assert manifest(tmp_path / "out" / "e")["exit_code"] == 0
    assert manifest(tmp_path / "out" / "bad")["exit_code"] == 3
    out = capsys.readouterr().out
    assert "[k] exit 0" in out and "[bad] exit 3" in out


def test_validate_and_resolve():
    validate({"preset": {"a": "0.5", "b": 1}})
    with pytest.raises(ConfigError):
        validate({"preset": "nope"})
    with pytest.raises(ConfigError):
        validate({"unknown_key": 1})
    cfg = resolve({"grid": {"n": 256}, "initial_data": {"type": "hermite_mode", "n": 2}})
    assert cfg["grid"] == {"x_min": -12.0, "x_max": 12.0, "n": 256}
    assert cfg["initial_data"] == {"type": "hermite_mode", "n": 2}
    with pytest.raises(ConfigError):
        load_config_text("{", "x")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "quadinv", "propagate", "--t", "0.2", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "manifest.json").exists()


def test_kernel_short_times_use_regular_kernel(tmp_path):
    times = ["0.05", "1.0"]
    for solver in ("kernel", "oracle"):
        assert cli.main(["propagate", "--preset", "parametric", "--solver", solver, "--t", *times,
                         "--center", "0.5", "--out", str(tmp_path / solver)]) == 0
    assert manifest(tmp_path / "kernel")["info"]["kernel_route"] == ["regular", "green"]
    for i in range(2):
        k = from_csv(tmp_path / "kernel" / f"psi_kernel_{i:03d}.csv")
        o = from_csv(tmp_path / "oracle" / f"psi_oracle_{i:03d}.csv")
        assert (k - o).norm() < 1e-4
