import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from nnreach.interval import IntervalMatrix, IntervalVector
from nnreach.network import UncertainNetwork

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw, lo=-10.0, hi=10.0):
    a = draw(st.floats(lo, hi, allow_nan=False))
    b = draw(st.floats(lo, hi, allow_nan=False))
    return min(a, b), max(a, b)


@st.composite
def interval_arrays(draw, shape):
    size = int(np.prod(shape))
    pairs = draw(st.lists(intervals(), min_size=size, max_size=size))
    lo = np.array([p[0] for p in pairs]).reshape(shape)
    hi = np.array([p[1] for p in pairs]).reshape(shape)
    return (IntervalMatrix if len(shape) == 2 else IntervalVector)(lo, hi)


def scalar_net(W, b, x, act="relu"):
    """1-1 network from (lo, hi) pairs."""
    return UncertainNetwork(
        (1, 1),
        [IntervalMatrix([[W[0]]], [[W[1]]])],
        [IntervalVector([b[0]], [b[1]])],
        act,
        IntervalVector([x[0]], [x[1]]),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
