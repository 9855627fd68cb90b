"""Curvature fields, intrinsic operators, and ball-restricted integrals.

Tensor quantities are reported in the orthonormal frame adapted to the
rotational symmetry: e0 along the profile, e1..ek tangent to the swept
k-sphere.  The second fundamental form is diagonal in this frame, with
profile value kappa_p (multiplicity 1) and orbit value kappa_rot
(multiplicity k).  Covariant-derivative norms then reduce to closed
combinations of arc-length derivatives and r_s/r factors; every r_s/r
factor carries an exact L'Hopital value at the poles, where the
attached field vanishes linearly.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BadParameter, DegenerateGeometry
from .geometry import SPHERE_MEASURE, param_quadrature

__all__ = [
    "CurvatureField",
    "curvature",
    "laplace_beltrami",
    "integrate",
    "ball_integral",
    "orbit_fraction",
]


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Per-node extrinsic curvature data of a profile surface.

    kappa_p: profile principal curvature; kappa_rot: orbit principal
    curvature (multiplicity k); H = kappa_p + k kappa_rot; normsqA and
    normsqAo: squared norms of the second fundamental form and its
    tracefree part; gradH = |grad H|; normsqGradA, normsqHessA: squared
    norms of the first and second covariant derivatives of the second
    fundamental form; nu_r, nu_z: outward unit normal; sigma: parameter
    speed |dX/du| (1 right after remeshing).
    """

    kappa_p: np.ndarray
    kappa_rot: np.ndarray
    H: np.ndarray
    normsqA: np.ndarray
    normsqAo: np.ndarray
    gradH: np.ndarray
    normsqGradA: np.ndarray
    normsqHessA: np.ndarray
    nu_r: np.ndarray
    nu_z: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _check_surface(s):
    interior = s.r if s.is_ring else s.r[1:-1]
    if np.any(interior <= 0.0) or not (
        np.all(np.isfinite(s.r)) and np.all(np.isfinite(s.z))
    ):
        raise DegenerateGeometry("profile has left the half-plane r > 0")


def arc_derivative(s, values, sigma, odd):
    """d/ds of a nodal field: 4th-order stencil over the parameter,
    divided by the speed sigma.  odd selects the pole parity (odd
    fields cross the axis antisymmetrically)."""
    padded = _kernels.pad_ghosts(np.ascontiguousarray(values), s.is_ring, odd)
    return _kernels.d1(padded, s.spacing) / sigma


def _pole_patch(s, values, pole_values):
    """Overwrite pole entries (PoleToPole only) with their exact limits."""
    if not s.is_ring:
        values[0] = pole_values[0]
        values[-1] = pole_values[-1]
    return values


def curvature(s):
    """Compute the full curvature field of a profile surface.

    In the adapted frame, with p = d kappa_p/ds and q = d kappa_rot/ds:
      |grad A|^2 = p^2 + 3 k q^2
      |grad2 A|^2 = p_s^2 + 3 k q_s^2 + 3 k W^2 + 3 k (k + 2) Q^2
    where W = (r_s/r)(p - 2 q) and Q = (r_s/r) q, with L'Hopital pole
    values p_s - 2 q_s and q_s.
    """
    _check_surface(s)
    sigma, ru, zu, nur, nuz, kp, kr, H, max_a2 = _kernels.base_geometry(
        s.r, s.z, s.k, s.is_ring, s.spacing
    )
    if not np.isfinite(max_a2):
        raise DegenerateGeometry("curvature is not finite")
    k = s.k
    normsq_a = kp * kp + k * kr * kr
    normsq_ao = (k / (k + 1.0)) * (kp - kr) ** 2

    rs = ru / sigma
    p = arc_derivative(s, kp, sigma, odd=False)
    q = arc_derivative(s, kr, sigma, odd=False)
    hs = arc_derivative(s, H, sigma, odd=False)
    ps = arc_derivative(s, p, sigma, odd=True)
    qs = arc_derivative(s, q, sigma, odd=True)

    r_safe = s.r.copy()
    if not s.is_ring:
        r_safe[0] = 1.0
        r_safe[-1] = 1.0
    ratio = rs / r_safe
    W = _pole_patch(s, ratio * (p - 2.0 * q), ps - 2.0 * qs)
    Q = _pole_patch(s, ratio * q, qs)

    normsq_grad_a = p * p + 3.0 * k * q * q
    normsq_hess_a = (
        ps * ps + 3.0 * k * qs * qs + 3.0 * k * W * W + 3.0 * k * (k + 2.0) * Q * Q
    )
    return CurvatureField(
        kappa_p=kp,
        kappa_rot=kr,
        H=H,
        normsqA=normsq_a,
        normsqAo=normsq_ao,
        gradH=np.abs(hs),
        normsqGradA=normsq_grad_a,
        normsqHessA=normsq_hess_a,
        nu_r=nur,
        nu_z=nuz,
        sigma=sigma,
    )


def laplace_beltrami(s, u):
    """Intrinsic Laplacian of an axisymmetric nodal scalar:
    u_ss + k (r_s/r) u_s, with pole value (1 + k) u_ss."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.shape != s.r.shape:
        raise BadParameter("field shape does not match the surface")
    if not np.all(np.isfinite(u)):
        raise DegenerateGeometry("field is not finite")
    _check_surface(s)
    sigma, ru = _kernels.base_geometry(s.r, s.z, s.k, s.is_ring, s.spacing)[:2]
    out = _kernels.laplacian(u, s.r, ru, sigma, s.k, s.is_ring, s.spacing)
    if not np.all(np.isfinite(out)):
        raise DegenerateGeometry("Laplacian is not finite")
    return out


def integrate(s, phi):
    """Integral of a nodal scalar over the swept surface measure."""
    phi = np.asarray(phi, dtype=np.float64)
    sigma = _kernels.base_geometry(s.r, s.z, s.k, s.is_ring, s.spacing)[0]
    return SPHERE_MEASURE[s.k] * param_quadrature(s, phi * s.r**s.k * sigma)


def orbit_fraction(s, ball):
    """Fraction of each node's orbit lying inside the ball, closed form.

    For a node orbit of radius r at height z and a ball centered at
    in-plane representative (x_r, x_z), membership depends on the
    azimuthal angle through w = (r^2 + x_r^2 + (z-x_z)^2 - rho^2) /
    (2 r x_r): a circular arc fraction arccos(w)/pi for k = 1 and a
    spherical-cap fraction (1 - w)/2 for k = 2.
    """
    rho = ball.radius
    num = (
        s.r * s.r
        + ball.center_r * ball.center_r
        + (s.z - ball.center_z) ** 2
        - rho * rho
    )
    denom = 2.0 * s.r * ball.center_r
    frac = np.empty_like(s.r)
    degenerate = denom == 0.0
    # Orbits exactly on the boundary sphere must not flip on roundoff
    # (e.g. a ball centered at a sphere's own center with rho = radius),
    # so the indicator requires clearance beyond the arithmetic noise.
    scale = num + 2.0 * rho * rho
    tol = 64.0 * np.finfo(np.float64).eps * scale
    frac[degenerate] = (num[degenerate] < -tol[degenerate]).astype(np.float64)
    # near-axis orbits can overflow the quotient; the clip maps the
    # resulting +-inf to the correct all-in/all-out indicator
    with np.errstate(over="ignore"):
        w = num[~degenerate] / denom[~degenerate]
    if s.k == 1:
        frac[~degenerate] = np.arccos(np.clip(w, -1.0, 1.0)) / np.pi
    else:
        frac[~degenerate] = np.clip(0.5 * (1.0 - w), 0.0, 1.0)
    return frac


def ball_integral(s, phi, ball):
    """Integral of a nodal scalar over the part of the surface inside
    the ball, using the exact orbit-fraction weight per node."""
    phi = np.asarray(phi, dtype=np.float64)
    return integrate(s, phi * orbit_fraction(s, ball))
