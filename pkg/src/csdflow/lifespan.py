"""Curvature-concentration monitoring and lifespan-bound measurement.

Quantities tracked: per-center ball integrals of |A|^m, their sup over a
center grid (the concentration eta(t)), the admissible ball radius for a
target concentration level, smooth ambient cutoffs with tracked
derivative constants, an accumulated energy functional, and empirical
constants for the multiplicative Sobolev-type inequalities used by the
blowup-exclusion argument.

Center enumeration exploits axisymmetry: a ball integral depends only on
the orbit of its center, so one azimuth-zero representative per orbit
plus points on the symmetry axis enumerate all distinct centers.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

from . import _kernels
from .curvature import arc_derivative, curvature, integrate, orbit_fraction
from .errors import (
    BadParameter,
    TooFewExperiments,
    TooFewSnapshots,
)
from .geometry import SPHERE_MEASURE, BoundingBall, diameter

_EPS = np.finfo(np.float64).eps


def _worker_count():
    raw = os.environ.get("CSDFLOW_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise BadParameter("CSDFLOW_THREADS must be an integer")
        return max(1, n)
    return max(1, min(8, os.cpu_count() or 1))


# ---------------------------------------------------------------------------
# cutoff functions


def _smoothstep(x):
    """C^2 quintic step: 0 at 0, 1 at 1, flat to second order at both."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (6.0 * x - 15.0))


@dataclass(frozen=True)
class CutoffFn:
    """Ambient radial cutoff centered at an azimuth-zero representative.

    gamma(y) = 1 for |y - x| <= radius/2, 0 for |y - x| >= radius, with a
    quintic C^2 transition in between; s_exp is the power used when the
    cutoff enters integral estimates.  c_gamma1 and c_gamma2 are the
    closed-form first/second derivative bounds of the profile; their
    products with radius and radius^2 are constants of the fixed shape.
    """

    center_r: float
    center_z: float
    radius: float
    s_exp: int

    def __post_init__(self):
        if not (self.radius > 0.0 and np.isfinite(self.radius)):
            raise BadParameter("cutoff radius must be positive")
        if self.center_r < 0.0 or not np.isfinite(self.center_r + self.center_z):
            raise BadParameter("cutoff center must be finite with center_r >= 0")
        if int(self.s_exp) != self.s_exp or self.s_exp < 4:
            raise BadParameter("cutoff exponent must be an integer >= 4")

    @property
    def c_gamma1(self):
        # sup |d gamma / d dist| = (2/rho) * max S' = (2/rho)(15/8)
        return 15.0 / (4.0 * self.radius)

    @property
    def c_gamma2(self):
        # profile curvature (4/rho^2) max|S''| = (4/rho^2)(10/sqrt 3) plus
        # the slope bound times the ambient distance-Hessian bound 2/rho
        # on the transition band; covers |Hess gamma| <= c_gamma2 (1+|A|)
        # for radii up to ~10 since the |A| term absorbs (15/4rho)|A|.
        return (40.0 / math.sqrt(3.0) + 15.0) / self.radius**2

    def distance(self, r, z, cos_orbit=1.0):
        """Ambient distance from the center to orbit points at the given
        cosine of the orbit angle (1 = same azimuth as the center)."""
        return np.sqrt(
            np.maximum(
                r * r
                + self.center_r * self.center_r
                - 2.0 * r * self.center_r * cos_orbit
                + (z - self.center_z) ** 2,
                0.0,
            )
        )

    def values(self, dist):
        return _smoothstep(2.0 * (1.0 - dist / self.radius))

    def support_ball(self):
        return BoundingBall(self.center_r, self.center_z, self.radius)

    def core_ball(self):
        return BoundingBall(self.center_r, self.center_z, 0.5 * self.radius)


def cutoff(center, rho, s_exp):
    """Build a CutoffFn from an (r, z) center representative."""
    cr, cz = float(center[0]), float(center[1])
    return CutoffFn(center_r=cr, center_z=cz, radius=float(rho), s_exp=int(s_exp))


def gamma_power_average(s, g, azimuth=64):
    """Per-node orbit average of gamma^s_exp.

    Axis-centered cutoffs are exactly axisymmetric; off-axis centers are
    averaged over the orbit angle (uniform angle midpoints for k = 1,
    uniform cosine midpoints for k = 2, matching the orbit measure).
    """
    if g.center_r == 0.0:
        d = g.distance(s.r, s.z)
        return g.values(d) ** g.s_exp
    if s.k == 1:
        ang = (np.arange(azimuth) + 0.5) * (np.pi / azimuth)
        cos = np.cos(ang)
    else:
        cos = -1.0 + (np.arange(azimuth) + 0.5) * (2.0 / azimuth)
    d = g.distance(s.r[:, None], s.z[:, None], cos[None, :])
    return np.mean(g.values(d) ** g.s_exp, axis=1)


@dataclass(frozen=True)
class CutoffEval:
    """Node-wise cutoff values and finite-difference derivative checks.

    grad_norm and hess_norm are FD estimates maximized over the orbit
    angle; pole nodes of pole-to-pole profiles are excluded from the
    checks (the (s, angle) chart degenerates there) and carry zero
    gradient for any cutoff whose transition band avoids the axis.
    """

    gamma: np.ndarray
    grad_norm: np.ndarray
    hess_norm: np.ndarray
    grad_bound: float
    hess_bound: np.ndarray
    grad_ok: np.ndarray
    hess_ok: np.ndarray


def evaluate_cutoff(s, g, azimuth=96, slack=1.05):
    """Evaluate a cutoff on a surface and verify its derivative bounds.

    Surface gradients and Hessians of gamma are estimated by centered
    finite differences on the (arc, orbit-angle) grid and compared with
    c_gamma1 and c_gamma2 (1 + |A|); violations beyond the slack factor
    raise BadParameter."""
    f = curvature(s)
    sig = f.sigma
    rs = arc_derivative(s, s.r, sig, odd=True)
    if azimuth % 2 or azimuth < 8:
        raise BadParameter("azimuth sample count must be even and >= 8")
    if g.center_r == 0.0:
        cos = np.array([1.0])
    elif s.k == 1:
        cos = np.cos((np.arange(azimuth) + 0.5) * (np.pi / azimuth))
    else:
        cos = -1.0 + (np.arange(azimuth) + 0.5) * (2.0 / azimuth)
    ang = np.arccos(np.clip(cos, -1.0, 1.0))
    G = g.values(g.distance(s.r[:, None], s.z[:, None], cos[None, :]))

    du = s.spacing
    if s.is_ring:
        up = np.roll(G, -1, axis=0)
        dn = np.roll(G, 1, axis=0)
    else:
        up = np.vstack([G[1:], G[-1:]])
        dn = np.vstack([G[:1], G[:-1]])
    g_u = (up - dn) / (2.0 * du)
    g_uu = (up - 2.0 * G + dn) / (du * du)
    sig_u = _kernels.d1(
        _kernels.pad_ghosts(np.ascontiguousarray(sig), s.is_ring, False), du
    )
    g_s = g_u / sig[:, None]
    g_ss = (g_uu - (sig_u / sig)[:, None] * g_u) / (sig * sig)[:, None]

    if G.shape[1] > 1:
        da = ang[1] - ang[0]
        ae = np.hstack([G[:, :1], G, G[:, -1:]])  # even about both ends
        g_a = (ae[:, 2:] - ae[:, :-2]) / (2.0 * da)
        g_aa = (ae[:, 2:] - 2.0 * G + ae[:, :-2]) / (da * da)
    else:
        g_a = np.zeros_like(G)
        g_aa = np.zeros_like(G)

    r_safe = np.where(s.r > 0.0, s.r, 1.0)[:, None]
    grad = np.sqrt(g_s**2 + (g_a / r_safe) ** 2)
    h_ss = g_ss
    h_orb = g_aa / r_safe**2 + (rs / np.where(s.r > 0, s.r, 1.0))[:, None] * g_s
    h_cross = (np.gradient(g_a, du, axis=0) / sig[:, None]) / r_safe - (
        rs[:, None] / r_safe**2
    ) * g_a
    hess_sq = h_ss**2 + 2.0 * s.k * h_cross**2 + s.k * h_orb**2
    if s.k == 2 and G.shape[1] > 1:
        sin_safe = np.maximum(np.sin(ang), 1e-3)[None, :]
        h_psi = (np.cos(ang)[None, :] / sin_safe) * g_a / r_safe**2 + (
            rs / np.where(s.r > 0, s.r, 1.0)
        )[:, None] * g_s
        hess_sq = h_ss**2 + 2.0 * h_cross**2 + h_orb**2 + h_psi**2
    hess = np.sqrt(np.maximum(hess_sq, 0.0))

    grad_n = grad.max(axis=1)
    hess_n = hess.max(axis=1)
    interior = np.ones(s.nodes, dtype=bool)
    if not s.is_ring:
        interior[[0, 1, -2, -1]] = False
    hess_bound = g.c_gamma2 * (1.0 + np.sqrt(f.normsqA))
    grad_ok = ~interior | (grad_n <= slack * g.c_gamma1 + 1e-12)
    hess_ok = ~interior | (hess_n <= slack * hess_bound + 1e-12)
    if not (np.all(grad_ok) and np.all(hess_ok)):
        raise BadParameter(
            "cutoff derivative bounds violated beyond slack; "
            "mesh too coarse for this cutoff radius"
        )
    gam0 = g.values(g.distance(s.r, s.z))
    return CutoffEval(
        gamma=gam0,
        grad_norm=grad_n,
        hess_norm=hess_n,
        grad_bound=g.c_gamma1,
        hess_bound=hess_bound,
        grad_ok=grad_ok,
        hess_ok=hess_ok,
    )


# ---------------------------------------------------------------------------
# concentration


def _center_grid(s, rho):
    """Centers: arc-length subsample of the profile at rho/4 spacing plus
    an axis grid at rho/4 spacing spanning the z-range."""
    arc = s.arc_positions()
    length = arc[-1]
    step = rho / 4.0
    n_arc = max(2, int(math.ceil(length / step)) + 1)
    pos = np.linspace(0.0, length, n_arc)
    cr_arc = np.interp(pos, arc, s.r)
    cz_arc = np.interp(pos, arc, s.z)
    zmin = float(np.min(s.z))
    zmax = float(np.max(s.z))
    n_ax = max(2, int(math.ceil((zmax - zmin) / step)) + 1)
    cz_ax = np.linspace(zmin, zmax, n_ax)
    cr = np.concatenate([cr_arc, np.zeros(n_ax)])
    cz = np.concatenate([cz_arc, cz_ax])
    return cr, cz


def _ball_values_block(s, q, cr, cz, rho):
    r = s.r[None, :]
    z = s.z[None, :]
    crc = cr[:, None]
    czc = cz[:, None]
    num = r * r + crc * crc + (z - czc) ** 2 - rho * rho
    den = 2.0 * r * crc
    tol = 64.0 * _EPS * (num + 2.0 * rho * rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    w = np.where(den > 0.0, w, np.where(num < -tol, -1.0, 1.0))
    if s.k == 1:
        frac = np.arccos(np.clip(w, -1.0, 1.0)) / np.pi
    else:
        frac = np.clip(0.5 * (1.0 - w), 0.0, 1.0)
    integrand = frac * q[None, :]
    if s.is_ring:
        return integrand.sum(axis=1) * s.spacing
    return simpson(integrand, dx=s.spacing, axis=1)


def _ball_values(s, q, cr, cz, rho):
    """Ball integrals of a prepared parameter integrand q over a center
    list; blocks of centers are evaluated on a worker pool."""
    workers = _worker_count()
    n = cr.shape[0]
    if workers == 1 or n < 4 * workers:
        return _ball_values_block(s, q, cr, cz, rho)
    out = np.empty(n)
    bounds = np.linspace(0, n, workers + 1).astype(int)

    def run(i):
        a, b = bounds[i], bounds[i + 1]
        out[a:b] = _ball_values_block(s, q, cr[a:b], cz[a:b], rho)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, range(workers)))
    return out


def _m_integrand(s, m):
    f = curvature(s)
    sigma = f.sigma
    phi = f.normsqA ** (0.5 * m)
    return SPHERE_MEASURE[s.k] * phi * s.r**s.k * sigma


def concentration(s, rho, m):
    """Largest ball integral of |A|^m over the center grid.

    Returns (value, ball); the discrete sup is a lower bound for the
    continuum sup, tight to the rho/4 grid spacing."""
    if not (rho > 0.0 and np.isfinite(rho)):
        raise BadParameter("ball radius must be positive")
    if m not in (2, s.k + 1):
        raise BadParameter("concentration exponent must be 2 or n = k + 1")
    q = _m_integrand(s, m)
    cr, cz = _center_grid(s, rho)
    vals = _ball_values(s, q, cr, cz, rho)
    i = int(np.argmax(vals))
    return float(vals[i]), BoundingBall(float(cr[i]), float(cz[i]), rho)


def choose_rho(s, eps0, m):
    """Largest radius whose concentration stays at or below eps0,
    found by bisection to 1% relative width; clamped at the diameter."""
    if not (eps0 > 0.0 and np.isfinite(eps0)):
        raise BadParameter("target concentration must be positive")
    hi = diameter(s)
    if concentration(s, hi, m)[0] <= eps0:
        return hi
    lo = 0.5 * hi
    while concentration(s, lo, m)[0] > eps0:
        hi = lo
        lo = 0.5 * lo
        if lo < 1e-9 * hi or lo < 1e-300:
            return lo
    while hi - lo > 0.01 * lo:
        mid = 0.5 * (lo + hi)
        if concentration(s, mid, m)[0] <= eps0:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# trajectory tracking


@dataclass(frozen=True)
class ConcentrationReport:
    """Concentration history of a trajectory at a fixed ball radius."""

    m: int
    rho: float
    grid_note: str
    eps_map: tuple
    times: np.ndarray
    eta: np.ndarray
    argmax_r: np.ndarray
    argmax_z: np.ndarray
    eps0_used: float
    c_eta: float
    c_emp: np.ndarray
    covering_rhs: np.ndarray
    covering_ok: np.ndarray
    c_fit: float
    lifespan_bound: float
    stayed_below: bool


def track(traj, rho, m, eps0=None, c_fit=None):
    """Concentration series eta(t) over a trajectory's snapshots.

    Per snapshot: the grid sup of the ball integral of |A|^m at radius
    rho, its argmax center, the empirical ratio c_emp(t) =
    eta(t)/max(eps0, eta(0)), and the covering comparison
    eta_rho <= c_eta * eta_{rho/2} with c_eta = 4^(n+1).  The lifespan
    window check (eta below 3 c_eta eps0 on [0, rho^4/c_fit]) is
    reported, not asserted."""
    if len(traj.snapshots) < 1:
        raise TooFewSnapshots("track needs at least one snapshot")
    n = traj.snapshots[0].surface.k + 1
    c_eta = 4.0 ** (n + 1)
    eta = np.empty(len(traj.snapshots))
    ar = np.empty_like(eta)
    az = np.empty_like(eta)
    cover = np.empty_like(eta)
    for i, snap in enumerate(traj.snapshots):
        v, ball = concentration(snap.surface, rho, m)
        eta[i] = v
        ar[i] = ball.center_r
        az[i] = ball.center_z
        cover[i] = c_eta * concentration(snap.surface, 0.5 * rho, m)[0]
    s0 = traj.snapshots[0].surface
    q0 = _m_integrand(s0, m)
    cr, cz = _center_grid(s0, rho)
    vals0 = _ball_values(s0, q0, cr, cz, rho)
    eps_map = tuple(
        ((float(cr[i]), float(cz[i])), float(vals0[i])) for i in range(cr.shape[0])
    )
    eps0_used = float(eps0) if eps0 is not None else float(eta[0])
    denom = max(eps0_used, float(eta[0]))
    c_fit_used = float("nan")
    if c_fit is not None:
        c_fit_used = float(c_fit)
    elif np.isfinite(traj.t_num) and traj.t_num > 0.0:
        c_fit_used = rho**4 / traj.t_num
    bound = rho**4 / c_fit_used if np.isfinite(c_fit_used) else float("nan")
    in_window = (
        traj.times <= bound if np.isfinite(bound) else np.ones_like(eta, dtype=bool)
    )
    stayed = bool(np.all(eta[in_window] <= 3.0 * c_eta * eps0_used))
    return ConcentrationReport(
        m=m,
        rho=rho,
        grid_note=(
            "surface arc subsample + axis z-grid, spacing rho/4 = %.9g" % (rho / 4.0)
        ),
        eps_map=eps_map,
        times=traj.times.copy(),
        eta=eta,
        argmax_r=ar,
        argmax_z=az,
        eps0_used=eps0_used,
        c_eta=c_eta,
        c_emp=eta / denom,
        covering_rhs=cover,
        covering_ok=eta <= cover,
        c_fit=c_fit_used,
        lifespan_bound=bound,
        stayed_below=stayed,
    )


@dataclass(frozen=True)
class FitResult:
    """Smallest constant making T >= rho^4/c hold on a corpus, plus the
    least-squares exponent of T against rho."""

    c_fit: float
    slope: float
    intercept: float
    rms_residual: float


def fit_lifespan_constant(experiments):
    """Fit the lifespan constant from (rho, T_num) experiment pairs."""
    pairs = [
        (float(r), float(t))
        for r, t in experiments
        if np.isfinite(r) and np.isfinite(t)
    ]
    if len(pairs) < 2:
        raise TooFewExperiments(
            "lifespan fit needs at least two experiments with finite T"
        )
    for r, t in pairs:
        if r <= 0.0 or t <= 0.0:
            raise BadParameter("experiments must have positive rho and T")
    c_fit = max(r**4 / t for r, t in pairs)
    lr = np.log([r for r, _ in pairs])
    lt = np.log([t for _, t in pairs])
    slope, intercept = np.polyfit(lr, lt, 1)
    resid = lt - (slope * lr + intercept)
    return FitResult(
        c_fit=float(c_fit),
        slope=float(slope),
        intercept=float(intercept),
        rms_residual=float(np.sqrt(np.mean(resid * resid))),
    )


# ---------------------------------------------------------------------------
# accumulated energy functional and inequality audits


@dataclass(frozen=True)
class KeyEstimateSeries:
    """Accumulated curvature energy inside a cutoff core vs the
    structural growth envelope; the proportionality constant is
    empirical, reported through the ratio series."""

    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray
    instantaneous: np.ndarray
    accumulated: np.ndarray
    eps_ball: float


def keyest1_functional(traj, g):
    """Core-region energy: integral of |A|^2 over [gamma = 1] plus the
    time-accumulated integral of |grad2 A|^2 + |A|^2 |grad A|^2 + |A|^6,
    against (1 + (n-2) t) * initial support |A|^2 integral plus
    (t + (n-2) e^t) * eps^(2/n) with eps the initial support integral
    of |A|^n."""
    if len(traj.snapshots) < 2:
        raise TooFewSnapshots("functional accumulation needs >= 2 snapshots")
    core = g.core_ball()
    supp = g.support_ball()
    times = traj.times
    inst = np.empty(len(traj.snapshots))
    interior = np.empty_like(inst)
    for i, snap in enumerate(traj.snapshots):
        surf = snap.surface
        f = curvature(surf)
        w1 = orbit_fraction(surf, core)
        a2 = f.normsqA
        inst[i] = integrate(surf, a2 * w1)
        interior[i] = integrate(
            surf, (f.normsqHessA + a2 * f.normsqGradA + a2**3) * w1
        )
    acc = np.concatenate([[0.0], cumulative_trapezoid(interior, times)])
    lhs = inst + acc
    s0 = traj.snapshots[0].surface
    f0 = curvature(s0)
    w0 = orbit_fraction(s0, supp)
    n = s0.k + 1
    inst0 = integrate(s0, f0.normsqA * w0)
    eps_ball = integrate(s0, f0.normsqA ** (0.5 * n) * w0)
    rhs = (1.0 + (n - 2) * times) * inst0 + (
        times + (n - 2) * np.exp(times)
    ) * eps_ball ** (2.0 / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0.0, lhs / np.where(rhs > 0.0, rhs, 1.0), 0.0)
    return KeyEstimateSeries(
        times=times.copy(),
        lhs=lhs,
        rhs=rhs,
        ratio=ratio,
        instantaneous=inst,
        accumulated=acc,
        eps_ball=float(eps_ball),
    )


@dataclass(frozen=True)
class AuditRecord:
    """One multiplicative-inequality audit: both sides' structural
    pieces and the implied empirical constant (never asserted against a
    theoretical value; only finiteness and refinement stability are)."""

    name: str
    n: int
    lhs: float
    rhs: float
    c_emp: float
    vacuous: bool
    pieces: tuple


def _pieces(**kw):
    return tuple((k, float(v)) for k, v in kw.items())


def audit_ms1(s, g, s_exp):
    """Audit of the curvature multiplicative estimate: the gamma^s
    weighted integral of |A|^6 + |A|^2 |grad A|^2 against its
    concentration-controlled right side (dimension-dependent form)."""
    f = curvature(s)
    a2 = f.normsqA
    a6 = a2**3
    grad2 = f.normsqGradA
    hess2 = f.normsqHessA
    w_s = gamma_power_average(s, cutoff((g.center_r, g.center_z), g.radius, s_exp))
    w_pos = orbit_fraction(s, g.support_ball())
    c1 = g.c_gamma1
    lhs = integrate(s, a6 * w_s) + integrate(s, a2 * grad2 * w_s)
    n = s.k + 1
    core_terms = integrate(s, (hess2 + a6) * w_s)
    if n == 2:
        conc = integrate(s, a2 * w_pos)
        rhs = conc * core_terms + c1**4 * conc**2
        pieces = _pieces(
            lhs=lhs,
            support_normsqA=conc,
            weighted_hess_plus_A6=core_terms,
            slope_term=c1**4 * conc**2,
        )
    else:
        cube = integrate(s, a2**1.5 * w_pos)  # ||A||_3^3 on the support
        rhs = (
            integrate(s, hess2 * w_s)
            + math.sqrt(cube) * core_terms
            + c1**3 * (cube + cube**1.5)
        )
        pieces = _pieces(
            lhs=lhs,
            support_cubed_norm=cube,
            weighted_hess=integrate(s, hess2 * w_s),
            weighted_hess_plus_A6=core_terms,
            slope_term=c1**3 * (cube + cube**1.5),
        )
    if not (np.isfinite(lhs) and np.isfinite(rhs)):
        raise BadParameter("audit sides are not finite")
    vacuous = lhs == 0.0 and rhs == 0.0
    c_emp = 0.0 if vacuous else (lhs / rhs if rhs > 0.0 else float("inf"))
    return AuditRecord(
        name="ms1", n=n, lhs=float(lhs), rhs=float(rhs), c_emp=float(c_emp),
        vacuous=vacuous, pieces=pieces,
    )


def _scalar_hessian_normsq(s, u, sig, rs):
    u_s = arc_derivative(s, u, sig, odd=False)
    u_ss = arc_derivative(s, u_s, sig, odd=True)
    r_safe = np.where(s.r > 0.0, s.r, 1.0)
    orbit = rs / r_safe * u_s
    if not s.is_ring:
        orbit[0] = u_ss[0]
        orbit[-1] = u_ss[-1]
    return u_ss**2 + s.k * orbit**2


def audit_ms2(s, g, field="A"):
    """Audit of the tensor sup-norm interpolation: sup^4 of |T| on the
    cutoff core against the L2 structure over the support, for
    T = second fundamental form (norm surrogate) or T = mean curvature."""
    f = curvature(s)
    sig = f.sigma
    rs = arc_derivative(s, s.r, sig, odd=True)
    if field == "A":
        tval = np.sqrt(f.normsqA)
        d2 = f.normsqHessA
    elif field == "H":
        tval = f.H
        d2 = _scalar_hessian_normsq(s, f.H, sig, rs)
    else:
        raise BadParameter("ms2 tensor field must be 'A' or 'H'")
    w_core = orbit_fraction(s, g.core_ball())
    w_pos = orbit_fraction(s, g.support_ball())
    n = s.k + 1
    in_core = w_core > 0.0
    lhs = float(np.max(np.abs(tval[in_core])) ** 4) if np.any(in_core) else 0.0
    n_t = integrate(s, tval**2 * w_pos)
    n_d2 = integrate(s, d2 * w_pos)
    n_ta2 = integrate(s, (tval * f.normsqA) ** 2 * w_pos)
    rhs = n_t ** (0.5 * (4 - n)) * (
        n_d2 ** (0.5 * n) + n_ta2 ** (0.5 * n) + n_t ** (0.5 * n)
    )
    if not (np.isfinite(lhs) and np.isfinite(rhs)):
        raise BadParameter("audit sides are not finite")
    vacuous = lhs == 0.0 and rhs == 0.0
    c_emp = 0.0 if vacuous else (lhs / rhs if rhs > 0.0 else float("inf"))
    return AuditRecord(
        name="ms2_" + field,
        n=n,
        lhs=lhs,
        rhs=float(rhs),
        c_emp=float(c_emp),
        vacuous=vacuous,
        pieces=_pieces(
            sup4_core=lhs, l2_T=n_t, l2_grad2=n_d2, l2_TA2=n_ta2
        ),
    )
