import numpy as np
import pytest

from zfstats.config import NetworkConfig, default_settings, network_config

# Lines collected by the acceptance suite and echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def default_config():
    """The default nine-cell network with M = 20."""
    return network_config(default_settings(), antennas=20)


def small_config(q=1, k=1, m=2, side=100.0, excl=0.0, p=1.0, noise=1.0, alpha=2.0, d0=1.0):
    return NetworkConfig(q, k, m, side, excl, p, noise, alpha, d0)
