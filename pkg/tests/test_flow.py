import math

import numpy as np
import pytest

from csdflow import (
    FlowConfig,
    InvalidConfig,
    TerminationCause,
    TooFewSnapshots,
    conservation_diagnostics,
    const,
    evolve,
    fixed_step_window,
    preset,
    rescale,
    zero,
)
from csdflow.flow import adaptive_dt
from conftest import mid_radius


def test_config_validation():
    with pytest.raises(InvalidConfig):
        FlowConfig(cfl=0.9)
    with pytest.raises(InvalidConfig):
        FlowConfig(t_end=-1.0)
    with pytest.raises(InvalidConfig):
        FlowConfig(monitor_m=4)


def test_sphere_const_radius_ode_quick():
    # dr/dt = h for a round sphere (diffusion term vanishes identically)
    s = preset("sphere", 1, 1.0, resolution=64)
    traj = evolve(s, const(1.0), FlowConfig(t_end=0.1, snapshot_every=0.05))
    assert traj.termination is TerminationCause.ReachedTEnd
    r_final = mid_radius(traj.final_surface)
    assert np.max(np.abs(r_final - 1.1)) < 1e-7


def test_snapshot_times_strictly_increasing():
    s = preset("sphere", 1, 1.0, resolution=64)
    traj = evolve(s, zero(), FlowConfig(t_end=0.01, snapshot_every=0.002))
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(0.01)
    assert len(traj.snapshots) == len(traj.times)


def test_adaptive_dt_scale_covariance():
    s = preset("dumbbell", 1, 0.15, 6.0, resolution=96)
    lam = 1.7
    assert adaptive_dt(rescale(s, lam)) == pytest.approx(
        lam**4 * adaptive_dt(s), rel=1e-12
    )


def test_quartic_time_rescaling_of_pinch():
    base = preset("dumbbell", 1, 0.15, 6.0, resolution=64)
    cfg = FlowConfig(t_end=1.0, snapshot_every=0.01, stop_normsqA_max=5000.0)
    t1 = evolve(base, zero(), cfg)
    lam = 1.25
    cfg2 = FlowConfig(
        t_end=lam**4, snapshot_every=0.01 * lam**4, stop_normsqA_max=5000.0
    )
    t2 = evolve(rescale(base, lam), zero(), cfg2)
    assert t1.termination is TerminationCause.SingularityDetected
    assert t2.termination is TerminationCause.SingularityDetected
    assert t2.t_num == pytest.approx(lam**4 * t1.t_num, rel=1e-6)


def test_monitor_eta_recorded():
    s = preset("sphere", 1, 1.0, resolution=64)
    cfg = FlowConfig(
        t_end=0.005, snapshot_every=0.001, monitor_rho=1.0, monitor_m=2
    )
    traj = evolve(s, zero(), cfg)
    assert np.all(np.isfinite(traj.eta))
    off = evolve(s, zero(), FlowConfig(t_end=0.005, snapshot_every=0.001))
    assert np.all(np.isnan(off.eta))


def test_conservation_identities_on_growing_sphere():
    # sphere + const: dV/dt = h*A and dA/dt = h*int(H) hold exactly,
    # leaving only the snapshot-grid differencing error
    s = preset("sphere", 1, 1.0, resolution=64)
    traj = evolve(s, const(1.0), FlowConfig(t_end=0.02, snapshot_every=2e-3))
    times, dv, da = conservation_diagnostics(traj)
    # dV/dt is cubic in t, so the centered snapshot difference leaves
    # a (spacing^2/6) V''' truncation term; dA/dt is quadratic
    assert np.max(np.abs(dv[1:-1])) < 1e-5 * np.max(traj.volume)
    assert np.max(np.abs(da[1:-1])) < 1e-6 * np.max(traj.area)


def test_volume_conserved_and_area_dissipated_dumbbell():
    s = preset("dumbbell", 1, 0.15, 6.0, resolution=96)
    traj = evolve(s, zero(), FlowConfig(t_end=0.002, snapshot_every=2e-4))
    v0 = traj.volume[0]
    assert np.max(np.abs(traj.volume - v0)) < 1e-6 * v0
    assert np.all(np.diff(traj.area) < 0)
    assert np.all(traj.dissipation > 0)


def test_conservation_needs_three_snapshots():
    s = preset("sphere", 1, 1.0, resolution=64)
    traj = evolve(s, zero(), FlowConfig(t_end=0.001, snapshot_every=0.001))
    if len(traj.snapshots) < 3:
        with pytest.raises(TooFewSnapshots):
            conservation_diagnostics(traj)


def test_fixed_step_window_shape():
    s = preset("sphere", 1, 1.0, resolution=48)
    win = fixed_step_window(s, const(1.0), 0.001, 0.001, count=3)
    assert len(win) == 3
    ts = [t for t, _ in win]
    assert ts[1] - ts[0] == pytest.approx(0.001, rel=1e-9)
    assert ts[2] - ts[1] == pytest.approx(0.001, rel=1e-9)
    nodes = {surf.nodes for _, surf in win}
    assert len(nodes) == 1  # fixed mesh, no remeshing inside the window


def test_total_steps_and_dt_series():
    s = preset("sphere", 1, 1.0, resolution=64)
    traj = evolve(s, zero(), FlowConfig(t_end=0.003, snapshot_every=0.001))
    assert traj.total_steps > 0
    assert np.all(traj.dt[1:] > 0)
    assert math.isnan(traj.t_num)  # no blowup fit for a stationary run
