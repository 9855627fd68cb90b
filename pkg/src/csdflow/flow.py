"""Time integration of the constrained surface diffusion flow.

The velocity law moves every node along the outward unit normal with
speed F = (Laplace-Beltrami of H) + h(t).  Integration is explicit
classical RK4 on the method-of-lines system with an adaptive step

    dt = cfl * g^4 / (1 + max|A|^2 * g^2),   g = smallest node gap,

the quartic gap scaling required by the fourth-order spatial operator.
Node motion is purely normal; tangential redistribution happens only in
the periodic arc-length remesh, so fixed-label evolution identities can
be checked on windows between remeshes.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constraints import evaluate
from .curvature import curvature, integrate, laplace_beltrami
from .errors import (
    CsdflowError,
    DegenerateGeometry,
    GeometryError,
    InvalidConfig,
    TooFewSnapshots,
)
from .geometry import ProfileSurface, area, diameter, resample_arclength, volume

# Hard per-run cap to keep runaway configurations from hanging a batch.
_MAX_TOTAL_STEPS = 50_000_000

# Remesh when the widest node gap exceeds the narrowest by this factor.
_GAP_SPREAD = 1.05

_NONFINITE_RETRIES = 8


class TerminationCause(enum.Enum):
    ReachedTEnd = "reached_t_end"
    SingularityDetected = "singularity_detected"
    StepFloor = "step_floor"


@dataclass(frozen=True)
class FlowConfig:
    """Run parameters for ``evolve``.

    stop_normsqA_max is interpreted relative to the initial scale: the
    run stops when max|A|^2 >= stop_normsqA_max / diameter(s0)^2, which
    makes the stopping rule covariant under uniform rescaling.
    """

    t_end: float = 1.0
    cfl: float = 0.1
    remesh_every: int = 10
    snapshot_every: float = 0.0  # 0 -> t_end / 200
    stop_normsqA_max: float = 1.0e4
    dt_floor: float = 1.0e-14
    monitor_rho: float = 0.0  # 0 -> concentration monitoring disabled
    monitor_m: int = 2
    event_factor: float = 2.0  # extra snapshot when max|A|^2 grows by this

    def __post_init__(self):
        if not (0.0 < self.cfl <= 0.5):
            raise InvalidConfig(f"cfl must lie in (0, 0.5], got {self.cfl}")
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise InvalidConfig("t_end must be positive and finite")
        if self.remesh_every < 1:
            raise InvalidConfig("remesh_every must be >= 1")
        if self.snapshot_every < 0.0:
            raise InvalidConfig("snapshot_every must be >= 0")
        if self.stop_normsqA_max <= 0.0:
            raise InvalidConfig("stop_normsqA_max must be positive")
        if self.dt_floor <= 0.0:
            raise InvalidConfig("dt_floor must be positive")
        if self.monitor_rho < 0.0:
            raise InvalidConfig("monitor_rho must be >= 0")
        if self.monitor_m not in (2, 3):
            raise InvalidConfig("monitor_m must be 2 or n = k + 1")
        if self.event_factor <= 1.0:
            raise InvalidConfig("event_factor must exceed 1")


@dataclass(frozen=True)
class Snapshot:
    t: float
    surface: ProfileSurface
    fields: "object"  # CurvatureField


@dataclass
class FlowTrajectory:
    """Snapshots plus per-snapshot diagnostic series of one run."""

    snapshots: list
    times: np.ndarray
    area: np.ndarray
    volume: np.ndarray
    dissipation: np.ndarray
    max_normsqA: np.ndarray
    dt: np.ndarray
    eta: np.ndarray
    int_H: np.ndarray
    termination: TerminationCause
    t_num: float
    fit_residual: float
    constraint: "object"
    config: FlowConfig
    total_steps: int
    remesh_count: int

    @property
    def final_surface(self):
        return self.snapshots[-1].surface


def normal_velocity(s, h, t):
    """Node-wise normal speed F = (Laplace-Beltrami H) + h(t)."""
    f = curvature(s)
    return laplace_beltrami(s, f.H) + evaluate(h, t)


def adaptive_dt(s, cfl=0.1):
    """Stable explicit step for the current mesh and curvature."""
    sigma, _, _, _, _, _, _, _, max_a2 = _kernels.base_geometry(
        s.r, s.z, s.k, s.is_ring, s.spacing
    )
    g = _kernels.min_gap(s.r, s.z, s.is_ring)
    g2 = g * g
    return cfl * g2 * g2 / (1.0 + max_a2 * g2)


def step(s, h, t, dt):
    """One RK4 step of size dt from time t.  dt = 0 returns s unchanged."""
    dt = float(dt)
    if dt < 0.0:
        raise InvalidConfig("dt must be >= 0")
    if dt == 0.0:
        return s
    r = s.r.copy()
    z = s.z.copy()
    kind, hc, tab_t, tab_h = h.kernel_args()
    hval = _kernels.heval(kind, hc, tab_t, tab_h, t)
    vr1, vz1, _, max_a2 = _kernels.velocity(r, z, s.k, s.is_ring, s.spacing, hval)
    if not np.isfinite(max_a2):
        raise DegenerateGeometry("non-finite curvature entering the step")
    ok = _kernels.rk4_step(
        r, z, s.k, s.is_ring, s.spacing, dt, t, kind, hc, tab_t, tab_h, vr1, vz1
    )
    if not ok:
        raise DegenerateGeometry("RK4 step produced non-finite nodes")
    return ProfileSurface(r, z, s.k, s.topology, s.spacing)


def _fit_blowup(times, max_a2, t_now):
    """Extrapolated vanishing time of 1/max|A|^2, linear in t."""
    m = min(10, len(times))
    if m < 2:
        return t_now, float("nan")
    tt = np.asarray(times[-m:], dtype=np.float64)
    yy = 1.0 / np.asarray(max_a2[-m:], dtype=np.float64)
    coef = np.polyfit(tt, yy, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, tt) - yy) ** 2)))
    slope, intercept = float(coef[0]), float(coef[1])
    if slope >= 0.0:
        return float(t_now), resid
    return max(float(t_now), -intercept / slope), resid


def _gap_spread(r, z, is_ring):
    dr = np.diff(r)
    dz = np.diff(z)
    gaps = np.hypot(dr, dz)
    if is_ring:
        closing = math.hypot(r[0] - r[-1], z[0] - z[-1])
        return max(gaps.max(), closing) / min(gaps.min(), closing)
    return gaps.max() / gaps.min()


class _Recorder:
    def __init__(self, monitor_rho, monitor_m):
        self.snapshots = []
        self.rows = {k: [] for k in (
            "t", "area", "volume", "dissipation", "max_normsqA", "dt", "eta", "int_H"
        )}
        self.monitor_rho = monitor_rho
        self.monitor_m = monitor_m
        if monitor_rho > 0.0:
            from .lifespan import concentration  # local import, cycle-free

            self._concentration = concentration
        else:
            self._concentration = None

    def record(self, t, surf, dt_last):
        f = curvature(surf)
        eta = float("nan")
        if self._concentration is not None:
            eta = self._concentration(surf, self.monitor_rho, self.monitor_m)[0]
        rows = self.rows
        if rows["t"] and t <= rows["t"][-1]:
            # same-instant re-record (event/remesh coincidence): latest wins,
            # keeping the snapshot times strictly increasing
            self.snapshots.pop()
            for col in rows.values():
                col.pop()
        self.snapshots.append(Snapshot(t, surf, f))
        rows["t"].append(t)
        rows["area"].append(area(surf))
        rows["volume"].append(volume(surf))
        rows["dissipation"].append(integrate(surf, f.gradH**2))
        rows["max_normsqA"].append(float(f.normsqA.max()))
        rows["dt"].append(dt_last)
        rows["eta"].append(eta)
        rows["int_H"].append(integrate(surf, f.H))


def evolve(s0, h, config):
    """Integrate from s0 under constraint h per config.

    Returns a FlowTrajectory.  Termination:
      * ReachedTEnd        -- integrated to config.t_end;
      * SingularityDetected -- curvature threshold crossed, or the
        surface could no longer be advanced/remeshed to a valid state;
        t_num extrapolates the blowup time from the last snapshots;
      * StepFloor          -- adaptive dt fell below dt_floor.
    """
    if not isinstance(config, FlowConfig):
        raise InvalidConfig("config must be a FlowConfig")
    snap_every = config.snapshot_every or (config.t_end / 200.0)
    threshold = config.stop_normsqA_max / diameter(s0) ** 2

    r = s0.r.copy()
    z = s0.z.copy()
    du = s0.spacing
    kind, hc, tab_t, tab_h = h.kernel_args()
    rec = _Recorder(config.monitor_rho, config.monitor_m)

    t = 0.0
    total_steps = 0
    remesh_count = 0
    dt_last = 0.0
    cfl = config.cfl
    retries = 0
    a2_ref = float(curvature(s0).normsqA.max())
    surf = ProfileSurface(r, z, s0.k, s0.topology, du)
    rec.record(0.0, surf, 0.0)
    snap_i = 1

    def boundary(i):
        # fold boundaries within rounding distance of t_end into t_end
        b = i * snap_every
        return config.t_end if b > config.t_end - 1e-9 * snap_every else b

    def current():
        return ProfileSurface(r.copy(), z.copy(), s0.k, s0.topology, du)

    termination = None
    while termination is None:
        next_snap = boundary(snap_i)
        t_stop = next_snap
        status, t, steps, dt_b, max_a2 = _kernels.advance(
            r, z, s0.k, s0.is_ring, du, t, t_stop, cfl,
            config.remesh_every, threshold, config.dt_floor, np.inf,
            config.event_factor, a2_ref, kind, hc, tab_t, tab_h,
        )
        total_steps += steps
        if steps:
            dt_last = dt_b
            retries = 0
        if total_steps > _MAX_TOTAL_STEPS:
            raise CsdflowError("step budget exhausted; lower t_end or resolution")

        if status == _kernels.ST_NONFINITE:
            retries += 1
            if retries > _NONFINITE_RETRIES:
                rec.record(t, current(), dt_last)
                termination = TerminationCause.SingularityDetected
                break
            cfl *= 0.5
            continue
        if status == _kernels.ST_FLOOR:
            rec.record(t, current(), dt_last)
            termination = TerminationCause.StepFloor
            break
        if status == _kernels.ST_THRESHOLD:
            rec.record(t, current(), dt_last)
            termination = TerminationCause.SingularityDetected
            break
        if status == _kernels.ST_EVENT:
            a2_ref = max_a2
            rec.record(t, current(), dt_last)
            # fall through: keep integrating the same stretch
        if status == _kernels.ST_TSTOP:
            rec.record(t, current(), dt_last)
            if t_stop >= config.t_end:
                termination = TerminationCause.ReachedTEnd
                break
            snap_i += 1
            while boundary(snap_i) <= t:  # snapshots denser than one step
                snap_i += 1

        # remesh cadence point (every remesh_every steps or at events)
        if _gap_spread(r, z, s0.is_ring) > _GAP_SPREAD:
            try:
                new = resample_arclength(current(), r.shape[0], check_intersection=True)
            except GeometryError:
                rec.record(t, current(), dt_last)
                termination = TerminationCause.SingularityDetected
                break
            r[:] = new.r
            z[:] = new.z
            du = new.spacing
            remesh_count += 1

    rows = rec.rows
    times = np.array(rows["t"])
    max_series = np.array(rows["max_normsqA"])
    if termination is TerminationCause.SingularityDetected:
        t_num, fit_res = _fit_blowup(times, max_series, t)
    else:
        t_num, fit_res = float("nan"), float("nan")
    return FlowTrajectory(
        snapshots=rec.snapshots,
        times=times,
        area=np.array(rows["area"]),
        volume=np.array(rows["volume"]),
        dissipation=np.array(rows["dissipation"]),
        max_normsqA=max_series,
        dt=np.array(rows["dt"]),
        eta=np.array(rows["eta"]),
        int_H=np.array(rows["int_H"]),
        termination=termination,
        t_num=t_num,
        fit_residual=fit_res,
        constraint=h,
        config=config,
        total_steps=total_steps,
        remesh_count=remesh_count,
    )


def fixed_step_window(s0, h, t_start, stride, count=3, cfl=0.1):
    """Snapshots at t_start + i*stride, i = 0..count-1, with remeshing
    disabled so node labels stay fixed (internal integration still uses
    the fine adaptive step).

    Returns a list of (t, ProfileSurface)."""
    if stride <= 0.0 or count < 2:
        raise InvalidConfig("window needs stride > 0 and count >= 2")
    r = s0.r.copy()
    z = s0.z.copy()
    kind, hc, tab_t, tab_h = h.kernel_args()
    out = []
    t = 0.0
    for i in range(count):
        target = t_start + i * stride
        while t < target:
            status, t, steps, dt_b, max_a2 = _kernels.advance(
                r, z, s0.k, s0.is_ring, s0.spacing, t, target, cfl,
                1_000_000, np.inf, 1.0e-18, np.inf, 0.0, 0.0,
                kind, hc, tab_t, tab_h,
            )
            if status == _kernels.ST_NONFINITE:
                raise DegenerateGeometry("window integration became non-finite")
            if status == _kernels.ST_FLOOR:
                raise DegenerateGeometry("window integration hit the step floor")
        out.append((t, ProfileSurface(r.copy(), z.copy(), s0.k, s0.topology, s0.spacing)))
    return out


def conservation_diagnostics(traj):
    """Residuals of the exact volume and area laws at the snapshots.

    Volume obeys dV/dt = h(t) * area; area obeys
    dA/dt = -dissipation + h(t) * (integral of H).  Time derivatives are
    centered differences on the (possibly nonuniform) snapshot times.
    Returns (times, dV_residual, dA_residual)."""
    if len(traj.snapshots) < 3:
        raise TooFewSnapshots("conservation diagnostics need >= 3 snapshots")
    times = traj.times
    hvals = np.array([evaluate(traj.constraint, t) for t in times])
    dv = np.gradient(traj.volume, times) - hvals * traj.area
    da = np.gradient(traj.area, times) - (-traj.dissipation + hvals * traj.int_H)
    return times, dv, da
