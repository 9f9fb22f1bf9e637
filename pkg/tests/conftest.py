import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pointerbasis import QuantumNumbers, make_spectrum_grid

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture
def grid():
    return make_spectrum_grid(-0.5, 12.0, 16, 8)


@pytest.fixture
def qnums():
    return QuantumNumbers(((1,), (-1,)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gaussian_fourier_oracle(t, center=1.0, width=0.2, upper=10.0, n=1_000_001):
    """``int_0^upper exp(-(w - center)^2 / (2 width^2)) exp(i w t) dw`` by the trapezoid rule."""
    w = np.linspace(0.0, upper, n)
    f = np.exp(-0.5 * ((w - center) / width) ** 2)
    return np.array([np.trapezoid(f * np.exp(1j * w * tt), w) for tt in np.atleast_1d(t)])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for n in sorted(REPORT):
            terminalreporter.write_line(REPORT[n])
