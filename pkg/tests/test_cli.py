import math

import numpy as np
import pytest

from csdflow.cli import main
from csdflow.io import read_check, read_diagnostics, read_profile, read_report


def _summary(outdir):
    vals = {}
    for ln in (outdir / "summary.txt").read_text().splitlines():
        if "=" in ln and not ln.startswith("monitor"):
            key, val = ln.split("=", 1)
            vals[key] = val
    return vals


def test_run_growing_sphere_hits_documented_radius(tmp_path):
    out = tmp_path / "run"
    rc = main(
        [
            "run",
            "--preset",
            "sphere:1",
            "--constraint",
            "sin",
            "--t-end",
            "1.0",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    vals = _summary(out)
    assert vals["termination"] == "reached_t_end"
    # radius ODE r' = h(t) integrates to 2 - cos(1) at t = 1
    assert float(vals["final_radius"]) == pytest.approx(2.0 - math.cos(1.0), abs=1e-4)


def test_run_writes_output_tree(tmp_path):
    out = tmp_path / "tree"
    rc = main(
        [
            "run",
            "--preset",
            "sphere:1",
            "--t-end",
            "0.002",
            "--snapshot-every",
            "5e-4",
            "--monitor-rho",
            "1.0",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    assert (out / "diagnostics.csv").exists()
    assert (out / "fields_final.csv").exists()
    assert (out / "conservation.csv").exists()
    surf, t0 = read_profile(out / "snap_0.csv")
    assert t0 == 0.0 and surf.k == 1
    cols = read_diagnostics(out / "diagnostics.csv")
    assert np.all(np.isfinite(cols["eta"]))
    series, summary = read_report(out / "report_m2.csv")
    assert summary["rho"] == 1.0
    assert len(series["eta"]) == len(cols["t"])


def test_run_singularity_exit_code(tmp_path):
    out = tmp_path / "pinch"
    rc = main(
        [
            "run",
            "--preset",
            "dumbbell:0.15,6",
            "--t-end",
            "1.0",
            "--out",
            str(out),
        ]
    )
    assert rc == 2
    vals = _summary(out)
    assert vals["termination"] == "singularity_detected"
    t_num = float(vals["t_num"])
    assert 0.0 < t_num < 0.1


def test_missing_preset_parameter_is_usage_error(tmp_path):
    rc = main(["run", "--preset", "dumbbell", "--out", str(tmp_path / "x")])
    assert rc == 64


def test_unknown_preset_is_usage_error(tmp_path):
    rc = main(["run", "--preset", "blob:1", "--out", str(tmp_path / "x")])
    assert rc == 64


def test_bad_constraint_is_usage_error(tmp_path):
    assert main(["run", "--constraint", "warp", "--out", str(tmp_path / "x")]) == 64
    assert main(["run", "--constraint", "const", "--out", str(tmp_path / "x")]) == 64


def test_unknown_flag_is_usage_error(tmp_path):
    assert main(["run", "--wibble", "3"]) == 64


def test_corrupt_table_names_file(tmp_path, capsys):
    bad = tmp_path / "h.csv"
    bad.write_text("t,h\n0.0,nope\n1.0,0.2\n")
    rc = main(
        ["run", "--constraint", f"table:{bad}", "--out", str(tmp_path / "x")]
    )
    assert rc == 65
    assert "h.csv" in capsys.readouterr().err


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("constraint=const:2.0\nt_end=0.1\n")
    out = tmp_path / "cfgrun"
    rc = main(
        [
            "run",
            "--config",
            str(cfg),
            "--constraint",
            "zero",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    vals = _summary(out)
    # t_end came from the file, the constraint from the explicit flag
    assert float(vals["t_final"]) == pytest.approx(0.1, abs=1e-12)
    assert float(vals["final_radius"]) == pytest.approx(1.0, abs=1e-6)


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("warp_factor=9\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 64


def test_run_is_deterministic(tmp_path):
    argv = [
        "run",
        "--preset",
        "perturbed_sphere:1,0.05,0",
        "--seed",
        "11",
        "--t-end",
        "0.002",
        "--snapshot-every",
        "1e-3",
        "--monitor-rho",
        "0.8",
    ]
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    names_a = sorted(p.name for p in a.iterdir())
    names_b = sorted(p.name for p in b.iterdir())
    assert names_a == names_b
    for name in names_a:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sweep_recovers_quartic_scaling(tmp_path):
    out = tmp_path / "sweep"
    rc = main(
        [
            "sweep",
            "--preset",
            "dumbbell:0.15,6",
            "--lambdas",
            "0.8,1.0,1.25",
            "--t-end",
            "1.0",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "lambda,rho,t_num"
    assert len(rows) == 4
    data = {float(r.split(",")[0]): float(r.split(",")[2]) for r in rows[1:]}
    t1 = data[1.0]
    assert data[0.8] == pytest.approx(0.8**4 * t1, rel=0.02)
    assert data[1.25] == pytest.approx(1.25**4 * t1, rel=0.02)
    summary = dict(
        ln.split("=", 1)
        for ln in (out / "sweep_summary.txt").read_text().splitlines()
        if "=" in ln
    )
    assert 3.9 <= float(summary["slope"]) <= 4.1
    assert float(summary["c_fit"]) > 0.0
    assert (out / "lam_0" / "summary.txt").exists()


def test_sweep_without_singularity_not_applicable(tmp_path, capsys):
    out = tmp_path / "nosing"
    rc = main(
        [
            "sweep",
            "--preset",
            "sphere:1",
            "--lambdas",
            "1.0,1.2",
            "--t-end",
            "0.001",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    assert "no singularity; sweep not applicable" in capsys.readouterr().out
    assert "not applicable" in (out / "sweep_summary.txt").read_text()
    assert not (out / "sweep.csv").exists()


def test_sweep_single_lambda_is_usage_error(tmp_path):
    rc = main(
        [
            "sweep",
            "--preset",
            "dumbbell:0.15,6",
            "--lambdas",
            "1.0",
            "--out",
            str(tmp_path / "x"),
        ]
    )
    assert rc == 64


def test_check_passes_on_torus_at_default_resolution(tmp_path):
    out = tmp_path / "check"
    rc = main(["check", "--preset", "torus:2,1", "--out", str(out)])
    assert rc == 0
    rows = read_check(out / "check.csv")
    by_name = {}
    for row in rows:
        by_name.setdefault(row["identity"], []).append(row)
    for name in ("simons", "gauss_intrinsic"):
        assert by_name[name][-1]["order"] >= 1.9
    for name in ("gauss", "trace"):
        assert max(r["max_residual"] for r in by_name[name]) <= 1e-10
    assert "mean_curv" in by_name and "tracefree" in by_name


def test_check_flags_underresolved_window(tmp_path):
    # at 64 nodes the spatial floor contaminates the stride refinement,
    # so the evolution ratio assertion must fail rather than pass softly
    out = tmp_path / "check64"
    rc = main(
        [
            "check",
            "--preset",
            "torus:2,1",
            "--resolutions",
            "64,128",
            "--out",
            str(out),
        ]
    )
    assert rc == 70
    assert (out / "check.csv").exists()


def test_audit_small_corpus(tmp_path):
    out = tmp_path / "audit"
    rc = main(
        [
            "audit",
            "--corpus",
            "sphere:1@1",
            "--resolutions",
            "128",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    lines = (out / "audit.csv").read_text().splitlines()
    assert lines[0].startswith("preset,k,resolution,name")
    names = {ln.split(",")[3] for ln in lines[1:]}
    assert names == {"ms1", "ms2_A", "ms2_H"}
    for ln in lines[1:]:
        assert math.isfinite(float(ln.split(",")[7]))


def test_audit_bad_corpus_entry(tmp_path):
    rc = main(["audit", "--corpus", "sphere-one", "--out", str(tmp_path / "x")])
    assert rc == 64
