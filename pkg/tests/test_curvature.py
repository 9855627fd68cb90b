import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csdflow import (
    BoundingBall,
    ball_integral,
    curvature,
    integrate,
    laplace_beltrami,
    orbit_fraction,
    preset,
)

PI = math.pi


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("r0", [1.0, 2.5])
def test_sphere_curvature_closed_forms(k, r0):
    s = preset("sphere", k, r0, resolution=256)
    f = curvature(s)
    n = k + 1
    assert np.allclose(f.kappa_p, 1.0 / r0, atol=1e-8)
    assert np.allclose(f.kappa_rot, 1.0 / r0, atol=1e-8)
    assert np.allclose(f.H, n / r0, atol=1e-7)
    assert np.allclose(f.normsqA, n / r0**2, atol=1e-7)
    assert np.max(np.abs(f.normsqAo)) < 1e-10
    assert np.max(np.abs(f.gradH)) < 1e-6
    assert np.max(f.normsqGradA) < 1e-10
    assert np.max(f.normsqHessA) < 1e-8


def test_torus_principal_curvatures():
    R, a = 2.0, 1.0
    s = preset("torus", 1, R, a, resolution=256)
    f = curvature(s)
    assert np.allclose(f.kappa_p, 1.0 / a, atol=1e-8)
    assert f.kappa_rot.max() == pytest.approx(1.0 / (R + a), rel=1e-7)
    assert f.kappa_rot.min() == pytest.approx(-1.0 / (R - a), rel=1e-7)


@pytest.mark.parametrize("k", [1, 2])
def test_laplace_beltrami_coordinate_eigenfunction(k):
    # ambient height restricted to the unit sphere: lap z = -(k+1) z
    s = preset("sphere", k, 1.0, resolution=256)
    lap = laplace_beltrami(s, np.array(s.z))
    assert np.max(np.abs(lap + (k + 1) * s.z)) < 1e-6


def test_integrate_matches_area():
    from csdflow import area

    for k in (1, 2):
        s = preset("sphere", k, 1.3, resolution=192)
        assert integrate(s, np.ones(s.nodes)) == pytest.approx(
            area(s), rel=1e-12
        )


def test_orbit_fraction_axis_center_indicator():
    s = preset("sphere", 1, 1.0, resolution=128)
    w = orbit_fraction(s, BoundingBall(0.0, 0.0, 1.5))
    assert np.all(w == 1.0)
    w2 = orbit_fraction(s, BoundingBall(0.0, 2.5, 1.0))
    assert np.all(w2 == 0.0)
    # boundary-coincident: every point exactly at distance rho counts outside
    w3 = orbit_fraction(s, BoundingBall(0.0, 0.0, 1.0))
    assert np.all(w3 == 0.0)


def test_orbit_fraction_against_azimuth_sampling():
    s = preset("torus", 1, 2.0, 1.0, resolution=128)
    ball = BoundingBall(2.3, 0.4, 1.1)
    w = orbit_fraction(s, ball)
    phi = np.linspace(0, 2 * PI, 20001, endpoint=False)
    inside = (
        s.r[:, None] ** 2
        + ball.center_r**2
        - 2 * s.r[:, None] * ball.center_r * np.cos(phi)[None, :]
        + (s.z[:, None] - ball.center_z) ** 2
        < ball.radius**2
    )
    assert np.max(np.abs(w - inside.mean(axis=1))) < 1e-3


def test_orbit_fraction_k2_closed_form():
    s = preset("sphere", 2, 1.0, resolution=128)
    ball = BoundingBall(0.8, 0.1, 0.9)
    w = orbit_fraction(s, ball)
    num = s.r**2 + ball.center_r**2 + (s.z - ball.center_z) ** 2 - ball.radius**2
    den = np.where(s.r > 0, 2 * s.r * ball.center_r, 1.0)
    wexp = np.where(
        s.r > 0,
        np.clip(0.5 * (1.0 - num / den), 0.0, 1.0),
        (num < 0).astype(float),
    )
    assert np.allclose(w, wexp, atol=1e-12)


def test_ball_integral_whole_sphere():
    for k in (1, 2):
        s = preset("sphere", k, 1.0, resolution=192)
        f = curvature(s)
        total = integrate(s, f.normsqA)
        got = ball_integral(s, f.normsqA, BoundingBall(0.0, 0.0, 3.0))
        assert got == pytest.approx(total, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    rho1=st.floats(min_value=0.1, max_value=2.0),
    rho2=st.floats(min_value=0.1, max_value=2.0),
    cz=st.floats(min_value=-1.5, max_value=1.5),
    cr=st.floats(min_value=0.0, max_value=1.5),
)
def test_ball_integral_monotone_in_radius(rho1, rho2, cz, cr):
    s = preset("sphere", 1, 1.0, resolution=96)
    f = curvature(s)
    lo, hi = sorted((rho1, rho2))
    v_lo = ball_integral(s, f.normsqA, BoundingBall(cr, cz, lo))
    v_hi = ball_integral(s, f.normsqA, BoundingBall(cr, cz, hi))
    assert v_lo <= v_hi + 1e-12


def test_curvature_pole_values_are_finite_and_symmetric():
    s = preset("perturbed_sphere", 1, 1.0, 0.05, 3, resolution=192, seed=5)
    f = curvature(s)
    for arr in (f.kappa_p, f.kappa_rot, f.H, f.normsqA, f.normsqHessA):
        assert np.all(np.isfinite(arr))
    # at a smooth axis crossing the two principal curvatures coincide
    assert f.kappa_p[0] == pytest.approx(f.kappa_rot[0], rel=1e-4)
    assert f.kappa_p[-1] == pytest.approx(f.kappa_rot[-1], rel=1e-4)
