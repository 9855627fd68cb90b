import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csdflow import BadParameter, OutOfRange, rescale_constraint
from csdflow.constraints import (
    ConstraintFunction,
    const,
    evaluate,
    make,
    sup_bound,
    table,
    zero,
)


def test_evaluate_analytic_kinds():
    assert evaluate(zero(), 3.0) == 0.0
    assert evaluate(const(2.5), 0.7) == 2.5
    assert evaluate(make("exp"), 1.0) == pytest.approx(math.e)
    assert evaluate(make("sin"), 0.5) == pytest.approx(math.sin(0.5))
    assert evaluate(make("recip"), 1.0) == pytest.approx(0.5)
    assert evaluate(make("negt"), 2.0) == -2.0


def test_evaluate_rejects_negative_time():
    with pytest.raises(OutOfRange):
        evaluate(zero(), -0.1)


def test_table_interpolation_and_range():
    h = table([0.0, 1.0, 2.0], [0.0, 2.0, 0.0])
    assert evaluate(h, 0.5) == pytest.approx(1.0)
    assert evaluate(h, 1.5) == pytest.approx(1.0)
    with pytest.raises(OutOfRange):
        evaluate(h, 2.5)


def test_table_requires_increasing_times():
    with pytest.raises(BadParameter):
        table([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])


def test_unknown_kind():
    with pytest.raises(BadParameter):
        ConstraintFunction("wavelet")


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(["zero", "const", "exp", "sin", "recip", "negt"]),
    a=st.floats(min_value=0.0, max_value=20.0),
    width=st.floats(min_value=1e-3, max_value=10.0),
    c=st.floats(min_value=-5.0, max_value=5.0),
)
def test_sup_bound_dominates_dense_samples(kind, a, width, c):
    h = make(kind, c=c)
    b = a + width
    sup = sup_bound(h, (a, b))
    ts = np.linspace(a, b, 513)
    dense = max(abs(evaluate(h, t)) for t in ts)
    assert sup >= dense - 1e-12 * max(1.0, dense)
    # exactness: the dense sample must approach the reported sup
    assert sup <= dense + 1e-2 * max(1.0, dense) + 1e-9


def test_sup_bound_sin_hits_interior_extremum():
    assert sup_bound(make("sin"), (1.0, 2.0)) == 1.0
    assert sup_bound(make("sin"), (0.0, 1.0)) == pytest.approx(math.sin(1.0))


def test_sup_bound_table_uses_interior_samples():
    h = table([0.0, 1.0, 2.0], [0.0, -3.0, 0.0])
    assert sup_bound(h, (0.0, 2.0)) == 3.0
    assert sup_bound(h, (0.0, 0.25)) == pytest.approx(0.75)


def test_rescale_constraint_closed_forms():
    rho = 1.7
    assert rescale_constraint(zero(), rho).kind == "zero"
    hc = rescale_constraint(const(2.0), rho)
    assert hc.kind == "const" and hc.c == pytest.approx(rho**3 * 2.0)


def test_rescale_constraint_table_mapping():
    rho = 2.0
    h = table([0.0, 4.0], [1.0, 3.0])
    ht = rescale_constraint(h, rho)
    # times shrink by rho^4, values grow by rho^3
    assert np.allclose(ht.times, [0.0, 4.0 / 16.0])
    assert np.allclose(ht.values, [8.0, 24.0])
    assert evaluate(ht, 0.125) == pytest.approx(rho**3 * evaluate(h, rho**4 * 0.125))


def test_rescale_constraint_analytic_sampled():
    rho = 1.3
    ht = rescale_constraint(make("sin"), rho, horizon=2.0, samples=8193)
    for t in (0.0, 0.3, 1.9):
        assert evaluate(ht, t) == pytest.approx(
            rho**3 * math.sin(rho**4 * t), abs=1e-6
        )


def test_rescale_constraint_rejects_bad_factor():
    with pytest.raises(BadParameter):
        rescale_constraint(zero(), 0.0)
