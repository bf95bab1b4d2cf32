import warnings

import numpy as np
import pytest

from rotset import high_period_map, identity_map, standard_family

warnings.filterwarnings("ignore", message=".*TBB.*")


@pytest.fixture(scope="session")
def f11():
    return standard_family(1.0, 1.0)


@pytest.fixture(scope="session")
def fhalf():
    return standard_family(0.5, 0.5)


@pytest.fixture(scope="session")
def g_map():
    return high_period_map()


@pytest.fixture(scope="session")
def ident():
    return identity_map()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def lattice(rng, size, scale=1.0):
    """Random points on the 2**-40 lattice."""
    return np.round(rng.uniform(-scale, scale, (size, 2)) * 2.0 ** 40) / 2.0 ** 40


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
