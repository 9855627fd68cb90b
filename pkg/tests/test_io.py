from dataclasses import dataclass

import numpy as np
import pytest

from csdflow import CorruptInput, FlowConfig, curvature, evolve, preset, track, zero
from csdflow.io import (
    FLOAT_FMT,
    read_check,
    read_diagnostics,
    read_fields,
    read_profile,
    read_report,
    read_table,
    write_check,
    write_diagnostics,
    write_fields,
    write_profile,
    write_report,
    write_table,
)


@pytest.fixture(scope="module")
def tiny_traj():
    s = preset("sphere", 1, 1.0, resolution=32)
    return evolve(s, zero(), FlowConfig(t_end=0.002, snapshot_every=5e-4))


@pytest.fixture(scope="module")
def tiny_monitored_traj():
    s = preset("sphere", 1, 1.0, resolution=32)
    cfg = FlowConfig(t_end=0.002, snapshot_every=5e-4, monitor_rho=1.0)
    return evolve(s, zero(), cfg)


def test_float_format_is_lossless():
    rng = np.random.default_rng(7)
    for x in rng.standard_normal(50) * 10.0 ** rng.integers(-12, 12, 50):
        assert float(FLOAT_FMT % x) == x


def test_profile_round_trip(tmp_path):
    s = preset("torus", 1, 2.0, 0.7, resolution=96)
    p = tmp_path / "prof.csv"
    write_profile(p, s, time=0.125)
    got, t = read_profile(p)
    assert t == 0.125
    assert np.array_equal(got.r, s.r)
    assert np.array_equal(got.z, s.z)
    assert got.k == s.k
    assert got.topology == s.topology
    assert got.spacing == s.spacing
    assert (tmp_path / "prof.meta").exists()


def test_profile_write_is_deterministic(tmp_path, unit_sphere_k1):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    write_profile(a, unit_sphere_k1)
    write_profile(b, unit_sphere_k1)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "s,r,z"


def test_fields_round_trip(tmp_path, unit_sphere_k1):
    p = tmp_path / "fields.csv"
    write_fields(p, unit_sphere_k1)
    cols = read_fields(p)
    f = curvature(unit_sphere_k1)
    assert np.array_equal(cols["H"], f.H)
    assert np.array_equal(cols["kappa_p"], f.kappa_p)
    assert np.array_equal(cols["kappa_rot"], f.kappa_rot)
    assert np.array_equal(cols["normsqA"], f.normsqA)
    assert np.array_equal(cols["normsqAo"], f.normsqAo)
    assert np.array_equal(cols["gradH"], f.gradH)
    assert np.array_equal(cols["normsqGradA"], f.normsqGradA)
    assert np.array_equal(cols["normsqHessA"], f.normsqHessA)
    assert np.array_equal(cols["r"], unit_sphere_k1.r)


def test_diagnostics_blank_eta_when_unmonitored(tmp_path, tiny_traj):
    p = tmp_path / "diag.csv"
    write_diagnostics(p, tiny_traj)
    # unmonitored runs leave the eta field empty, not "nan"
    body = p.read_text().splitlines()[1:]
    assert all(ln.endswith(",") for ln in body)
    cols = read_diagnostics(p)
    assert np.all(np.isnan(cols["eta"]))
    assert np.array_equal(cols["t"], tiny_traj.times)
    assert np.array_equal(cols["area"], tiny_traj.area)
    assert np.array_equal(cols["volume"], tiny_traj.volume)
    assert np.array_equal(cols["dt"], tiny_traj.dt)


def test_diagnostics_round_trip_monitored(tmp_path, tiny_monitored_traj):
    p = tmp_path / "diag.csv"
    write_diagnostics(p, tiny_monitored_traj)
    cols = read_diagnostics(p)
    assert np.all(np.isfinite(cols["eta"]))
    assert np.array_equal(cols["eta"], tiny_monitored_traj.eta)


def test_report_round_trip(tmp_path, tiny_traj):
    rep = track(tiny_traj, 1.0, 2, eps0=50.0, c_fit=2.0)
    p = tmp_path / "report.csv"
    write_report(p, rep)
    series, summary = read_report(p)
    assert np.array_equal(series["t"], rep.times)
    assert np.array_equal(series["eta"], rep.eta)
    assert np.array_equal(series["argmax_r"], rep.argmax_r)
    assert np.array_equal(series["argmax_z"], rep.argmax_z)
    assert summary["rho"] == 1.0
    assert summary["eps0"] == 50.0
    assert summary["c_eta"] == 64.0
    assert summary["c_fit"] == 2.0
    assert summary["lifespan_bound"] == 0.5
    assert summary["m"] == 2.0


@dataclass
class _Row:
    identity: str
    nodes: int
    dt: float
    max_residual: float
    l2_residual: float
    order: float


def test_check_round_trip(tmp_path):
    rows = [
        _Row("simons", 128, 0.0, 1.5e-7, 3.2e-8, float("nan")),
        _Row("mean_curvature_speed", 64, 1e-4, 2.0e-6, 8.0e-7, 2.03),
    ]
    p = tmp_path / "check.csv"
    write_check(p, rows)
    got = read_check(p)
    assert got[0]["identity"] == "simons"
    assert got[0]["nodes"] == 128
    assert got[0]["max_residual"] == 1.5e-7
    assert np.isnan(got[0]["order"])
    assert got[1]["order"] == 2.03
    assert got[1]["dt"] == 1e-4


def test_table_round_trip(tmp_path):
    t = np.linspace(0.0, 2.0, 11)
    h = np.sin(t) * 0.3
    p = tmp_path / "table.csv"
    write_table(p, t, h)
    t2, h2 = read_table(p)
    assert np.array_equal(t2, t)
    assert np.array_equal(h2, h)


# ---------------------------------------------------------------------------
# corrupt inputs: every failure mode names the offending file


def test_bad_header_names_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,radius\n0,1\n")
    with pytest.raises(CorruptInput, match="bad.csv"):
        read_table(p)


def test_bad_float_names_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,h\n0.0,0.1\n0.5,oops\n")
    with pytest.raises(CorruptInput, match=r"bad.csv.*oops"):
        read_table(p)


def test_short_row_names_file(tmp_path):
    p = tmp_path / "short.csv"
    p.write_text("t,h\n0.0,0.1\n0.5\n")
    with pytest.raises(CorruptInput, match=r"short.csv.*line 3"):
        read_table(p)


def test_missing_file_is_corrupt_input(tmp_path):
    with pytest.raises(CorruptInput, match="nope.csv"):
        read_table(tmp_path / "nope.csv")


def test_single_sample_table_rejected(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("t,h\n0.0,0.1\n")
    with pytest.raises(CorruptInput, match="one.csv"):
        read_table(p)


def test_profile_missing_meta(tmp_path, unit_sphere_k1):
    p = tmp_path / "prof.csv"
    write_profile(p, unit_sphere_k1)
    (tmp_path / "prof.meta").unlink()
    with pytest.raises(CorruptInput, match="prof.meta"):
        read_profile(p)


def test_profile_meta_missing_key(tmp_path, unit_sphere_k1):
    p = tmp_path / "prof.csv"
    write_profile(p, unit_sphere_k1)
    meta = tmp_path / "prof.meta"
    kept = [ln for ln in meta.read_text().splitlines() if not ln.startswith("time=")]
    meta.write_text("\n".join(kept) + "\n")
    with pytest.raises(CorruptInput, match="time"):
        read_profile(p)


def test_profile_meta_bad_topology(tmp_path, unit_sphere_k1):
    p = tmp_path / "prof.csv"
    write_profile(p, unit_sphere_k1)
    meta = tmp_path / "prof.meta"
    meta.write_text(meta.read_text().replace("pole_to_pole", "mobius"))
    with pytest.raises(CorruptInput, match="prof.meta"):
        read_profile(p)


def test_diagnostics_reject_blank_required_column(tmp_path):
    p = tmp_path / "diag.csv"
    p.write_text("t,area,volume,dissipation,max_normsqA,dt,eta\n0,,1,0,2,1e-5,\n")
    with pytest.raises(CorruptInput, match="diag.csv"):
        read_diagnostics(p)
