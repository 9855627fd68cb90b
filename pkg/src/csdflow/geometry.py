"""Profile-curve representation of closed axisymmetric hypersurfaces.

A surface with rotational symmetry in R^(k+2) is generated by a curve
(r(u), z(u)) in the half-plane r >= 0: surface points are (r*w, z) for
unit vectors w on the k-sphere.  Profiles are sampled on a uniform
parameter grid that coincides with arc length at construction or remesh
time.  PoleToPole profiles start and end on the axis and generate a
topological (k+1)-sphere; Ring profiles are closed loops with r > 0 and
generate S^1 x S^k.  Ring node arrays store one period without a
duplicate closing node.

Orientation convention: profiles run south pole to north pole
(PoleToPole) or counterclockwise (Ring), making nu = (z', -r') the
outward unit normal and giving round spheres positive mean curvature.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline, make_interp_spline
from scipy.optimize import brentq
from scipy.special import eval_legendre

from . import _kernels
from .errors import (
    AxisViolation,
    BadParameter,
    DegenerateGeometry,
    PoleSlopeError,
    SelfIntersection,
    TooFewNodes,
)

# measure of the unit k-sphere swept by each profile point
SPHERE_MEASURE = {1: 2.0 * np.pi, 2: 4.0 * np.pi}

MIN_NODES = 16


class Topology(enum.Enum):
    """How the generating curve closes up."""

    POLE_TO_POLE = "pole_to_pole"
    RING = "ring"


def _as_topology(value):
    if isinstance(value, Topology):
        return value
    try:
        return Topology(str(value))
    except ValueError:
        raise BadParameter(f"unknown topology: {value!r}") from None


@dataclass(frozen=True, eq=False)
class ProfileSurface:
    """Immutable sampled profile curve.

    r, z: node coordinates (copied to read-only float64 arrays);
    k: rotational symmetry rank, 1 or 2 (surface dimension is k + 1);
    topology: PoleToPole or Ring;
    spacing: nominal arc-length gap between consecutive nodes.

    The constructor only freezes the data; use build_profile for
    validated construction from raw samples.
    """

    r: np.ndarray
    z: np.ndarray
    k: int
    topology: Topology
    spacing: float

    def __post_init__(self):
        r = np.array(self.r, dtype=np.float64)
        z = np.array(self.z, dtype=np.float64)
        if r.ndim != 1 or z.shape != r.shape:
            raise BadParameter("r and z must be 1-D arrays of equal length")
        r.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def nodes(self):
        return self.r.shape[0]

    @property
    def n(self):
        """Intrinsic dimension of the swept surface."""
        return self.k + 1

    @property
    def is_ring(self):
        return self.topology is Topology.RING

    def arc_positions(self):
        """Cumulative polyline arc length of the nodes (starts at 0)."""
        gaps = np.hypot(np.diff(self.r), np.diff(self.z))
        return np.concatenate([[0.0], np.cumsum(gaps)])


@dataclass(frozen=True)
class BoundingBall:
    """Ambient ball identified by an in-plane representative center.

    center_r: distance of the center from the symmetry axis (>= 0);
    center_z: height of the center; radius: ball radius (> 0).
    By symmetry only the center's orbit matters, so the representative
    at azimuth zero identifies the ball up to rotation.
    """

    center_r: float
    center_z: float
    radius: float

    def __post_init__(self):
        ok = (
            np.isfinite(self.center_r)
            and np.isfinite(self.center_z)
            and np.isfinite(self.radius)
            and self.center_r >= 0.0
            and self.radius > 0.0
        )
        if not ok:
            raise BadParameter(
                "ball requires finite center, center_r >= 0 and radius > 0"
            )


def base_arrays(s):
    """Kernel geometry pass: (sigma, r_u, z_u, nu_r, nu_z, kappa_p,
    kappa_rot, H, max normsqA) as plain arrays/scalars."""
    return _kernels.base_geometry(s.r, s.z, s.k, s.is_ring, s.spacing)


def param_quadrature(s, values):
    """Integral of a nodal function over the curve parameter u.

    Composite Simpson between the poles; periodic trapezoid (spectrally
    accurate) on rings.  Deterministic summation order.
    """
    if s.is_ring:
        return float(np.sum(values) * s.spacing)
    return float(simpson(values, dx=s.spacing))


def arc_integral(s, values):
    """Integral of a nodal function over profile arc length."""
    sigma = base_arrays(s)[0]
    return param_quadrature(s, values * sigma)


def area(s):
    """Total measure of the swept hypersurface."""
    sigma = base_arrays(s)[0]
    return SPHERE_MEASURE[s.k] * param_quadrature(s, s.r**s.k * sigma)


def volume(s):
    """Enclosed volume, by the divergence theorem on the swept surface.

    <X, nu> sigma = r z_u - z r_u, so no sigma division is needed.
    """
    _, ru, zu = base_arrays(s)[:3]
    integrand = (s.r * zu - s.z * ru) * s.r**s.k
    return SPHERE_MEASURE[s.k] / (s.k + 2.0) * param_quadrature(s, integrand)


def diameter(s):
    """Largest ambient distance between node orbits.

    For orbit points the azimuth-antipodal distance (r_i + r_j)^2 +
    (z_i - z_j)^2 realizes the maximum, including i == j (orbit
    diameter 2 r_i).
    """
    r, z = s.r, s.z
    best = 0.0
    block = 512
    for i0 in range(0, r.shape[0], block):
        rr = r[i0 : i0 + block, None] + r[None, :]
        zz = z[i0 : i0 + block, None] - z[None, :]
        m = float(np.max(rr * rr + zz * zz))
        if m > best:
            best = m
    return float(np.sqrt(best))


def rescale(s, lam):
    """Uniform dilation of the surface by lam > 0 (exact per-coordinate)."""
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0.0:
        raise BadParameter("scale factor must be positive and finite")
    return ProfileSurface(s.r * lam, s.z * lam, s.k, s.topology, s.spacing * lam)


def _self_intersects(r, z, is_ring):
    """Proper segment-segment crossing test over all non-adjacent pairs."""
    if is_ring:
        ax, ay = r, z
        bx, by = np.roll(r, -1), np.roll(z, -1)
    else:
        ax, ay = r[:-1], z[:-1]
        bx, by = r[1:], z[1:]
    m = ax.shape[0]
    i, j = np.triu_indices(m, 2)
    if is_ring:
        keep = ~((i == 0) & (j == m - 1))
        i, j = i[keep], j[keep]

    def orient(px, py, qx, qy, tx, ty):
        return (qx - px) * (ty - py) - (qy - py) * (tx - px)

    o1 = orient(ax[i], ay[i], bx[i], by[i], ax[j], ay[j])
    o2 = orient(ax[i], ay[i], bx[i], by[i], bx[j], by[j])
    o3 = orient(ax[j], ay[j], bx[j], by[j], ax[i], ay[i])
    o4 = orient(ax[j], ay[j], bx[j], by[j], bx[i], by[i])
    return bool(np.any((o1 * o2 < 0.0) & (o3 * o4 < 0.0)))


def _spline_pair(r, z, is_ring):
    """Quintic interpolating splines through the nodes in a chord-length
    parameter.  The data is extended past the ends before fitting so no
    boundary conditions are needed: periodic wrap for rings, odd (r) /
    even (z) reflection through the poles otherwise.  Pole reflection
    requires r to be exactly 0 at the ends.
    Returns (spline_r, spline_z, node_params)."""
    if is_ring:
        rc = np.concatenate([r, r[:1]])
        zc = np.concatenate([z, z[:1]])
    else:
        rc, zc = r, z
    seg = np.hypot(np.diff(rc), np.diff(zc))
    if np.any(seg <= 0.0):
        raise BadParameter("profile has coincident consecutive nodes")
    t = np.concatenate([[0.0], np.cumsum(seg)])
    m = 8
    if is_ring:
        period = t[-1]
        te = np.concatenate([t[-m - 1 : -1] - period, t, t[1 : m + 1] + period])
        re = np.concatenate([rc[-m - 1 : -1], rc, rc[1 : m + 1]])
        ze = np.concatenate([zc[-m - 1 : -1], zc, zc[1 : m + 1]])
    else:
        te = np.concatenate([-t[1 : m + 1][::-1], t, 2.0 * t[-1] - t[-m - 1 : -1][::-1]])
        re = np.concatenate([-rc[1 : m + 1][::-1], rc, -rc[-m - 1 : -1][::-1]])
        ze = np.concatenate([zc[1 : m + 1][::-1], zc, zc[-m - 1 : -1][::-1]])
    return make_interp_spline(te, re, k=5), make_interp_spline(te, ze, k=5), t


def _resample_nodes(r, z, is_ring, n_out, dense=16):
    """Redistribute nodes to uniform arc length along the quintic spline.

    Arc length is accumulated by composite Simpson on a dense parameter
    grid and inverted through a monotone cubic interpolant; small
    inversion error is purely tangential (the new nodes always lie on
    the spline curve).  Returns (r_new, z_new, spacing)."""
    spl_r, spl_z, t = _spline_pair(r, z, is_ring)
    td = np.linspace(0.0, t[-1], dense * (t.shape[0] - 1) + 1)
    speed = np.hypot(spl_r(td, 1), spl_z(td, 1))
    sd = cumulative_simpson(speed, x=td, initial=0.0)
    if np.any(np.diff(sd) <= 0.0):
        raise DegenerateGeometry("spline arc length is not strictly increasing")
    length = float(sd[-1])
    if is_ring:
        targets = length * np.arange(n_out) / n_out
        spacing = length / n_out
    else:
        targets = np.linspace(0.0, length, n_out)
        spacing = length / (n_out - 1)
    tinv = CubicSpline(sd, td)(targets)
    rn = np.asarray(spl_r(tinv), dtype=np.float64)
    zn = np.asarray(spl_z(tinv), dtype=np.float64)
    if not is_ring:
        rn[0] = 0.0
        rn[-1] = 0.0
    return rn, zn, spacing


def _pole_slopes(r, z, spacing):
    """One-sided 4th-order tangents at both poles, oriented into the curve."""
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    rp0 = float(np.dot(c, r[:5])) / spacing
    zp0 = float(np.dot(c, z[:5])) / spacing
    rp1 = -float(np.dot(c, r[-5:][::-1])) / spacing
    zp1 = -float(np.dot(c, z[-5:][::-1])) / spacing
    return (rp0, zp0), (rp1, zp1)


def validate_nodes(r, z, k, topology, spacing, check_intersection=True):
    """Invariant checks for already-resampled node arrays."""
    topo = _as_topology(topology)
    is_ring = topo is Topology.RING
    if r.shape[0] < MIN_NODES:
        raise TooFewNodes(f"need at least {MIN_NODES} nodes, got {r.shape[0]}")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(z))):
        raise BadParameter("non-finite node coordinates")
    if is_ring:
        if np.any(r <= 0.0):
            raise AxisViolation("ring profile must stay strictly off the axis")
    else:
        if r[0] != 0.0 or r[-1] != 0.0:
            raise AxisViolation("profile endpoints must lie exactly on the axis")
        if np.any(r[1:-1] <= 0.0):
            raise AxisViolation("interior nodes must have r > 0")
        tol = 10.0 * spacing**2
        for which, (rp, zp) in zip(("south", "north"), _pole_slopes(r, z, spacing)):
            if abs(abs(rp) - 1.0) > tol or abs(zp) > tol:
                raise PoleSlopeError(
                    f"{which} pole tangent (r'={rp:.3e}, z'={zp:.3e}) is not a "
                    f"smooth axis crossing (tolerance {tol:.3e})"
                )
    if check_intersection and _self_intersects(r, z, is_ring):
        raise SelfIntersection("profile curve crosses itself")


def build_profile(samples, symmetry_rank, topology):
    """Validate raw (r, z) samples and return an arc-length-uniform surface.

    Ring input may or may not repeat the first node at the end; a
    repeated closing node is dropped.  PoleToPole endpoint radii within
    1e-6 of the profile scale are snapped exactly onto the axis.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise BadParameter("samples must be an (n, 2) array of (r, z) pairs")
    k = int(symmetry_rank)
    if k not in (1, 2):
        raise BadParameter("symmetry_rank must be 1 or 2")
    topo = _as_topology(topology)
    if arr.shape[0] < MIN_NODES:
        raise TooFewNodes(f"need at least {MIN_NODES} samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise BadParameter("non-finite sample coordinates")
    r = arr[:, 0].copy()
    z = arr[:, 1].copy()
    scale = max(
        float(np.max(r) - min(0.0, float(np.min(r)))),
        float(np.max(z) - np.min(z)),
    )
    if scale <= 0.0:
        raise BadParameter("degenerate sample set")
    is_ring = topo is Topology.RING
    if is_ring:
        if np.hypot(r[-1] - r[0], z[-1] - z[0]) <= 1e-9 * scale:
            r = r[:-1]
            z = z[:-1]
        if r.shape[0] < MIN_NODES:
            raise TooFewNodes("ring needs at least 16 distinct nodes")
        if np.any(r <= 0.0):
            raise AxisViolation("ring profile must stay strictly off the axis")
    else:
        if abs(r[0]) > 1e-6 * scale or abs(r[-1]) > 1e-6 * scale:
            raise AxisViolation("profile endpoints must lie on the axis r = 0")
        r[0] = 0.0
        r[-1] = 0.0
        if np.any(r[1:-1] <= 0.0):
            raise AxisViolation("interior nodes must have r > 0")
    rn, zn, spacing = _resample_nodes(r, z, is_ring, r.shape[0])
    validate_nodes(rn, zn, k, topo, spacing)
    return ProfileSurface(rn, zn, k, topo, spacing)


def resample_arclength(s, n_nodes, check_intersection=False):
    """Redistribute nodes to uniform arc length, changing the count.

    Tangential reparametrization only: the normal geometry changes by
    the quintic interpolation error of the current node set.
    """
    n_nodes = int(n_nodes)
    if n_nodes < MIN_NODES:
        raise TooFewNodes(f"need at least {MIN_NODES} nodes, got {n_nodes}")
    rn, zn, spacing = _resample_nodes(s.r, s.z, s.is_ring, n_nodes)
    validate_nodes(rn, zn, s.k, s.topology, spacing, check_intersection)
    return ProfileSurface(rn, zn, s.k, s.topology, spacing)


# ---------------------------------------------------------------------------
# presets


def _finish_preset(r, z, k, topo, resolution):
    rn, zn, spacing = _resample_nodes(r, z, topo is Topology.RING, resolution)
    validate_nodes(rn, zn, k, topo, spacing)
    return ProfileSurface(rn, zn, k, topo, spacing)


def _make_sphere(k, resolution, seed, r0=1.0):
    r0 = float(r0)
    if r0 <= 0.0:
        raise BadParameter("sphere radius must be positive")
    psi = np.linspace(0.0, np.pi, resolution)
    r = r0 * np.sin(psi)
    z = -r0 * np.cos(psi)
    r[0] = 0.0
    r[-1] = 0.0
    spacing = r0 * np.pi / (resolution - 1)
    validate_nodes(r, z, k, Topology.POLE_TO_POLE, spacing)
    return ProfileSurface(r, z, k, Topology.POLE_TO_POLE, spacing)


def _make_torus(k, resolution, seed, R=2.0, a=1.0):
    R = float(R)
    a = float(a)
    if a <= 0.0 or R <= a:
        raise BadParameter("torus requires R > a > 0")
    theta = 2.0 * np.pi * np.arange(resolution) / resolution
    r = R + a * np.cos(theta)
    z = a * np.sin(theta)
    spacing = 2.0 * np.pi * a / resolution
    validate_nodes(r, z, k, Topology.RING, spacing)
    return ProfileSurface(r, z, k, Topology.RING, spacing)


def _dumbbell_shape_parameter(neck_ratio):
    """Find nu so the quartic profile's neck-to-bulb radius ratio matches."""

    def bulb(nu):
        w = (1.0 - 2.0 * nu * nu) / (2.0 * (1.0 - nu * nu))
        w = max(w, 0.0)
        return np.sqrt((1.0 - w) * (nu * nu + (1.0 - nu * nu) * w))

    return brentq(
        lambda nu: nu / bulb(nu) - neck_ratio,
        1e-12,
        1.0 / np.sqrt(2.0) - 1e-12,
        xtol=1e-15,
    )


def _make_dumbbell(k, resolution, seed, neck_ratio=0.15, length=6.0):
    neck_ratio = float(neck_ratio)
    length = float(length)
    if not 0.0 < neck_ratio < 1.0:
        raise BadParameter("dumbbell neck_ratio must lie in (0, 1)")
    if length <= 0.0:
        raise BadParameter("dumbbell length must be positive")
    nu = _dumbbell_shape_parameter(neck_ratio)
    psi = np.linspace(0.0, np.pi, 4 * resolution)
    zh = -np.cos(psi)
    rh = np.sin(psi) * np.sqrt(nu * nu + (1.0 - nu * nu) * zh * zh)
    half = 0.5 * length
    r = half * rh
    z = half * zh
    r[0] = 0.0
    r[-1] = 0.0
    return _finish_preset(r, z, k, Topology.POLE_TO_POLE, resolution)


def _make_perturbed_sphere(k, resolution, seed, r0=1.0, amplitude=0.05, mode=3):
    r0 = float(r0)
    amplitude = float(amplitude)
    mode = int(mode)
    if r0 <= 0.0:
        raise BadParameter("perturbed_sphere radius must be positive")
    if not 0.0 < amplitude <= 0.3:
        raise BadParameter("perturbed_sphere amplitude must lie in (0, 0.3]")
    if mode != 0 and mode < 2:
        raise BadParameter("perturbed_sphere mode must be 0 (seeded mix) or >= 2")
    psi = np.linspace(0.0, np.pi, 4 * resolution)
    x = np.cos(psi)
    if mode == 0:
        rng = np.random.default_rng(seed)
        coeffs = rng.uniform(-1.0, 1.0, 5)
        coeffs *= amplitude / np.sum(np.abs(coeffs))
        bump = sum(c * eval_legendre(l, x) for l, c in zip(range(2, 7), coeffs))
    else:
        bump = amplitude * eval_legendre(mode, x)
    radial = r0 * (1.0 + bump)
    r = radial * np.sin(psi)
    z = -radial * x
    r[0] = 0.0
    r[-1] = 0.0
    return _finish_preset(r, z, k, Topology.POLE_TO_POLE, resolution)


def _make_lens(k, resolution, seed, aspect=0.3):
    """Convex flattened profile: the quartic-blend oval
    0.2 (x^2 + y^2) + 0.8 (x^4 + y^4) = 1 (a strictly convex level set),
    scaled in z so polar/equatorial radius equals aspect."""
    aspect = float(aspect)
    if aspect <= 0.0:
        raise BadParameter("lens aspect must be positive")
    beta = 0.8
    theta = np.linspace(-0.5 * np.pi, 0.5 * np.pi, 4 * resolution)
    c4 = np.cos(theta) ** 4 + np.sin(theta) ** 4
    xi2 = (-(1.0 - beta) + np.sqrt((1.0 - beta) ** 2 + 4.0 * beta * c4)) / (
        2.0 * beta * c4
    )
    xi = np.sqrt(xi2)
    r = xi * np.cos(theta)
    z = aspect * xi * np.sin(theta)
    r[0] = 0.0
    r[-1] = 0.0
    return _finish_preset(r, z, k, Topology.POLE_TO_POLE, resolution)


_PRESETS = {
    "sphere": _make_sphere,
    "torus": _make_torus,
    "dumbbell": _make_dumbbell,
    "perturbed_sphere": _make_perturbed_sphere,
    "lens": _make_lens,
}


def preset(name, symmetry_rank, *params, resolution=256, seed=None):
    """Construct a named initial surface.

    Names and positional parameters:
      sphere(r0=1); torus(R=2, a=1); dumbbell(neck_ratio=0.15, length=6);
      perturbed_sphere(r0=1, amplitude=0.05, mode=3); lens(aspect=0.3).
    Torus is a Ring; all others are PoleToPole.  perturbed_sphere mode 0
    draws a seeded random mix of modes 2..6.
    """
    k = int(symmetry_rank)
    if k not in (1, 2):
        raise BadParameter("symmetry_rank must be 1 or 2")
    resolution = int(resolution)
    if resolution < MIN_NODES:
        raise TooFewNodes(f"resolution must be at least {MIN_NODES}")
    maker = _PRESETS.get(name)
    if maker is None:
        raise BadParameter(f"unknown preset {name!r}")
    try:
        return maker(k, resolution, seed, *params)
    except TypeError:
        raise BadParameter(f"wrong number of parameters for preset {name!r}") from None
