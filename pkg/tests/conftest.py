import numpy as np
import pytest
from hypothesis import settings

from gevrey_mhd.clock import GevreyClock
from gevrey_mhd.spectral import Grid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = {}


@pytest.fixture
def small_grid():
    return Grid(16, 32, 8.0)


@pytest.fixture
def grid():
    return Grid(32, 64, 10.0)


@pytest.fixture
def clock():
    return GevreyClock(epsilon=1e-8, lam=20.0, delta0=0.5, alpha=1.2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
