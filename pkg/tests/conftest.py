import numpy as np
import pytest

from tsasd.core import TimeSeries


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sine_series(n=1000, period=25, noise=0.05, seed=0, name="sine"):
    r = np.random.default_rng(seed)
    t = np.arange(n)
    return TimeSeries(np.sin(2 * np.pi * t / period) + noise * r.standard_normal(n), name)


@pytest.fixture
def sine():
    return sine_series()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
