"""Time-dependent forcing terms h(t) for the constrained flow.

Each constraint is a pure function of time, bounded on every closed
interval [a, b] of its domain.  Supported kinds:

  zero    h(t) = 0
  const   h(t) = c
  exp     h(t) = e^t
  sin     h(t) = sin t
  recip   h(t) = 1/(1 + t)
  negt    h(t) = -t
  table   piecewise-linear interpolation of (t, h) samples

``sup_bound`` returns the exact supremum of |h| on an interval, computed
in closed form for the analytic kinds.  ``rescale_constraint`` applies the
quartic space-time rescaling: data scaled by a factor rho makes time run
rho^4 faster and the forcing gain a rho^3 factor, so the transformed
constraint is h~(t) = rho^3 * h(rho^4 * t).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter, OutOfRange
from . import _kernels

KINDS = ("zero", "const", "exp", "sin", "recip", "negt", "table")

_KERNEL_CODE = {
    "zero": _kernels.HK_ZERO,
    "const": _kernels.HK_CONST,
    "exp": _kernels.HK_EXP,
    "sin": _kernels.HK_SIN,
    "recip": _kernels.HK_RECIP,
    "negt": _kernels.HK_NEGT,
    "table": _kernels.HK_TABLE,
}

_EMPTY = np.zeros(0)


@dataclass(frozen=True)
class ConstraintFunction:
    """A simple (interval-bounded) time-dependent forcing term."""

    kind: str
    c: float = 0.0
    times: np.ndarray = field(default_factory=lambda: _EMPTY)
    values: np.ndarray = field(default_factory=lambda: _EMPTY)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadParameter(f"unknown constraint kind {self.kind!r}")
        if not np.isfinite(self.c):
            raise BadParameter("constraint coefficient must be finite")
        t = np.ascontiguousarray(self.times, dtype=np.float64)
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.kind == "table":
            if t.ndim != 1 or t.shape != v.shape or t.size < 2:
                raise BadParameter("table constraint needs >= 2 (t, h) samples")
            if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
                raise BadParameter("table samples must be finite")
            if np.any(np.diff(t) <= 0):
                raise BadParameter("table sample times must be strictly increasing")
            if t[0] < 0:
                raise BadParameter("table sample times must be >= 0")
        elif t.size or v.size:
            raise BadParameter("only the table kind carries samples")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return evaluate(self, t)

    def kernel_args(self):
        """(kind code, coefficient, sample times, sample values) for the
        compiled stepper."""
        if self.kind == "table":
            return _KERNEL_CODE["table"], 0.0, self.times, self.values
        return _KERNEL_CODE[self.kind], self.c, _EMPTY, _EMPTY


def zero():
    return ConstraintFunction("zero")


def const(c):
    return ConstraintFunction("const", c=float(c))


def table(times, values):
    return ConstraintFunction("table", times=np.asarray(times), values=np.asarray(values))


def make(kind, c=0.0, times=None, values=None):
    if kind == "table":
        return table(times, values)
    if kind == "const":
        return const(c)
    return ConstraintFunction(kind)


def evaluate(h, t):
    """h(t).  Raises OutOfRange for t < 0 or table extrapolation."""
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise OutOfRange(f"constraint evaluated at invalid time {t}")
    if h.kind == "zero":
        return 0.0
    if h.kind == "const":
        return h.c
    if h.kind == "exp":
        return math.exp(t)
    if h.kind == "sin":
        return math.sin(t)
    if h.kind == "recip":
        return 1.0 / (1.0 + t)
    if h.kind == "negt":
        return -t
    if t < h.times[0] or t > h.times[-1]:
        raise OutOfRange(
            f"time {t} outside table range [{h.times[0]}, {h.times[-1]}]"
        )
    return float(np.interp(t, h.times, h.values))


def _sin_interval_sup(a, b):
    # |sin| attains 1 iff [a, b] contains pi/2 + m*pi for an integer m
    m = math.ceil((a - 0.5 * math.pi) / math.pi)
    if 0.5 * math.pi + m * math.pi <= b:
        return 1.0
    return max(abs(math.sin(a)), abs(math.sin(b)))


def sup_bound(h, interval):
    """Exact sup of |h| on the closed interval [a, b]."""
    a, b = (float(interval[0]), float(interval[1]))
    if not (math.isfinite(a) and math.isfinite(b)) or a < 0.0 or b < a:
        raise OutOfRange(f"invalid interval [{a}, {b}]")
    if h.kind == "zero":
        return 0.0
    if h.kind == "const":
        return abs(h.c)
    if h.kind == "exp":
        return math.exp(b)  # increasing, positive
    if h.kind == "sin":
        return _sin_interval_sup(a, b)
    if h.kind == "recip":
        return 1.0 / (1.0 + a)  # decreasing, positive
    if h.kind == "negt":
        return b  # |h| increasing
    if a < h.times[0] or b > h.times[-1]:
        raise OutOfRange("interval extends beyond the table range")
    # piecewise linear: extrema at interior samples and the clipped endpoints
    inside = (h.times > a) & (h.times < b)
    cand = [abs(evaluate(h, a)), abs(evaluate(h, b))]
    if np.any(inside):
        cand.append(float(np.max(np.abs(h.values[inside]))))
    return max(cand)


def rescale_constraint(h, rho, horizon=10.0, samples=4097):
    """Constraint for data rescaled by rho: h~(t) = rho^3 h(rho^4 t).

    Zero and Const transform in closed form.  Table samples are mapped
    exactly (times divided, values multiplied).  The remaining analytic
    kinds are returned as a table sampled on [0, horizon] in the rescaled
    clock, since e.g. rho^3 sin(rho^4 t) is outside the closed-form
    library.
    """
    rho = float(rho)
    if not math.isfinite(rho) or rho <= 0.0:
        raise BadParameter("rescale factor must be positive and finite")
    gain = rho**3
    rate = rho**4
    if h.kind == "zero":
        return h
    if h.kind == "const":
        return const(gain * h.c)
    if h.kind == "table":
        return table(h.times / rate, gain * h.values)
    if not (math.isfinite(horizon) and horizon > 0.0) or int(samples) < 2:
        raise BadParameter("horizon must be positive and samples >= 2")
    tt = np.linspace(0.0, float(horizon), int(samples))
    vv = gain * np.array([evaluate(h, rate * t) for t in tt])
    return table(tt, vv)
