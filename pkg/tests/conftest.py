import numpy as np
import pytest

from csdflow import FlowConfig, evolve, preset, zero

_ACCEPTANCE_LINES = []


def record_acceptance(line):
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def dumbbell_pinch_run():
    """Monitored dumbbell neck-pinch run shared by the conservation,
    concentration-monotonicity, and covering acceptance tests."""
    s = preset("dumbbell", 1, 0.15, 6.0, resolution=256)
    cfg = FlowConfig(
        t_end=1.0,
        snapshot_every=5e-4,
        stop_normsqA_max=5000.0,
        monitor_rho=0.1,
        monitor_m=2,
    )
    return evolve(s, zero(), cfg)


@pytest.fixture(scope="session")
def unit_sphere_k1():
    return preset("sphere", 1, 1.0, resolution=256)


@pytest.fixture(scope="session")
def unit_sphere_k2():
    return preset("sphere", 2, 1.0, resolution=256)


def mid_radius(s):
    zc = 0.5 * (float(np.min(s.z)) + float(np.max(s.z)))
    return np.hypot(s.r, s.z - zc)
