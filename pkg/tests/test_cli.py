import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "miskrige", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def test_design_command(tmp_path):
    out = tmp_path / "d.csv"
    proc = run_cli("design", "--kind", "midpoint", "--n", "4", "--out", str(out))
    assert proc.returncode == 0
    info = json.loads(proc.stdout)
    assert info["h"] == pytest.approx(0.125, abs=1e-3)
    assert info["q"] == pytest.approx(0.125)
    lines = out.read_text().splitlines()
    assert lines[0] == "x0"
    assert len(lines) == 5


def test_design_rejects_zero_points(tmp_path):
    proc = run_cli("design", "--kind", "midpoint", "--n", "0", "--out", str(tmp_path / "d.csv"))
    assert proc.returncode == 1
    assert "n >= 1" in proc.stderr


def test_design_seed_repetition_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        proc = run_cli("design", "--kind", "iid", "--n", "20", "--seed", "5", "--out", str(path))
        assert proc.returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_kernel_eval_command(tmp_path):
    spec = json.dumps({"family": "matern", "sigma": 1.0, "nu": 0.5, "kappa": 1.0, "d": 1})
    proc = run_cli("kernel-eval", "--spec", spec, "--x", "0", "--y", "1")
    assert proc.returncode == 0
    out = json.loads(proc.stdout)
    assert out["value"] == pytest.approx(pytest.approx(2.718281828459045**-1))
    # wavelet table export
    spec = json.dumps({"family": "wavelet", "s": 1.5, "N": 2, "p": 2})
    table = tmp_path / "table.csv"
    proc = run_cli("kernel-eval", "--spec", spec, "--table-out", str(table))
    assert proc.returncode == 0
    assert table.read_text().splitlines()[0] == "x,phi,psi"


def test_kernel_eval_invalid_spec():
    proc = run_cli("kernel-eval", "--spec", '{"family": "cubist"}', "--x", "0", "--y", "1")
    assert proc.returncode == 1
    assert "family" in proc.stderr


def test_krige_trace(tmp_path):
    design = tmp_path / "d.csv"
    run_cli("design", "--kind", "midpoint", "--n", "16", "--out", str(design))
    trace = tmp_path / "trace.csv"
    spec = json.dumps({"family": "matern", "sigma": 1.0, "nu": 1.5, "kappa": 1.0, "d": 1})
    proc = run_cli(
        "krige", "--spec", spec, "--design", str(design),
        "--target", '{"kind": "sine"}', "--nugget", "1e-10",
        "--grid", "101", "--out", str(trace),
    )
    assert proc.returncode == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "x,mean,variance"
    assert len(lines) == 102
    info = json.loads(proc.stdout)
    assert info["rel_residual"] <= 1e-8


def test_study_command_outputs(tmp_path):
    cfg = {
        "study": "fem",
        "n_schedule": [8, 16, 32, 64],
        "target": {"kind": "truncated-power", "m": 1, "c": 0.5},
        "p": 1,
        "quadrature": 2001,
        "linf_resolution": 2000,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "run1"
    proc = run_cli("study", "--config", str(cfg_path), "--out-dir", str(out_dir))
    assert proc.returncode == 0, proc.stderr
    summary = json.loads(proc.stdout)
    for key in ("study", "fitted_l2_slope", "predicted_l2_slope", "r2", "pass"):
        assert key in summary
    assert (out_dir / "rows.csv").exists()
    assert (out_dir / "summary.json").exists()
    assert (out_dir / "convergence.svg").exists()
    header = (out_dir / "rows.csv").read_text().splitlines()[0]
    assert header == "n,N,lambda,h,q,rho,l2,linf,sigma_min,bandwidth"
    # rerunning the identical config reproduces the rows byte for byte
    out_dir2 = tmp_path / "run2"
    proc = run_cli("study", "--config", str(cfg_path), "--out-dir", str(out_dir2))
    assert proc.returncode == 0
    assert (out_dir / "rows.csv").read_bytes() == (out_dir2 / "rows.csv").read_bytes()


def test_krige_numerical_failure_exit_code(tmp_path):
    # rank-deficient trigonometric system at zero nugget: exit 2, not garbage
    design = tmp_path / "d.csv"
    run_cli("design", "--kind", "midpoint", "--n", "9", "--out", str(design))
    spec = json.dumps({"family": "kl-trig", "s": 1, "N": 2})  # rank 5 < 9
    proc = run_cli(
        "krige", "--spec", spec, "--design", str(design),
        "--target", '{"kind": "sine"}', "--out", str(tmp_path / "t.csv"),
    )
    assert proc.returncode == 2
    assert "numerical failure" in proc.stderr


def test_study_rejects_even_trigonometric_schedule(tmp_path):
    cfg = {
        "study": "kl-trig",
        "n_schedule": [16, 32, 64, 128],
        "s": 2,
        "target": {"kind": "fourier", "s0": 2.0, "K": 100, "seed": 1},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    proc = run_cli("study", "--config", str(cfg_path), "--out-dir", str(tmp_path / "out"))
    assert proc.returncode == 1
    assert "odd" in proc.stderr


def test_study_config_fixtures_parse():
    from miskrige.experiments import StudyConfig

    for name in ("matern_well_specified", "matern_under_smoothed", "kl_trig", "wavelet", "fem"):
        cfg = StudyConfig.from_json_file(CONFIG_DIR / f"{name}.json")
        assert len(cfg.n_schedule) >= 5


def synthetic_rows(tmp_path, slope=-2.0):
    rows = tmp_path / "rows.csv"
    lines = ["n,N,lambda,h,q,rho,l2,linf,sigma_min"]
    for n in (16, 32, 64, 128, 256):
        e = 5.0 * n**slope
        lines.append(f"{n},0,0,0,0,1,{e!r},{2 * e!r},1")
    rows.write_text("\n".join(lines) + "\n")
    return rows


def test_rates_command(tmp_path):
    rows = synthetic_rows(tmp_path)
    proc = run_cli("rates", "--rows", str(rows))
    assert proc.returncode == 0
    out = json.loads(proc.stdout)
    assert out["l2"]["slope"] == pytest.approx(-2.0, abs=1e-10)
    assert out["linf"]["slope"] == pytest.approx(-2.0, abs=1e-10)


def test_plot_command(tmp_path):
    rows = synthetic_rows(tmp_path)
    svg = tmp_path / "plot.svg"
    proc = run_cli("plot", "--rows", str(rows), "--out", str(svg))
    assert proc.returncode == 0
    text = svg.read_text()
    assert "slope=-2.00" in text
    ET.fromstring(text)  # well-formed XML


def test_plot_rejects_empty_and_malformed_csv(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    proc = run_cli("plot", "--rows", str(empty), "--out", str(tmp_path / "x.svg"))
    assert proc.returncode == 1
    headers_only = tmp_path / "headers.csv"
    headers_only.write_text("n,l2\n")
    proc = run_cli("plot", "--rows", str(headers_only), "--out", str(tmp_path / "y.svg"))
    assert proc.returncode == 1
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("a,b\n1,2\n")
    proc = run_cli("plot", "--rows", str(wrong), "--out", str(tmp_path / "z.svg"))
    assert proc.returncode == 1
    assert "missing columns" in proc.stderr
