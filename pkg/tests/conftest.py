import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from triwave.grid import FD_DIRICHLET, GridSpec, build_grid

settings.register_profile("triwave", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("triwave")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid1():
    return build_grid(GridSpec(dimension=1, half_width=8.0, points=128))


@pytest.fixture(scope="session")
def grid1_fd():
    return build_grid(GridSpec(dimension=1, half_width=8.0, points=128, discretization=FD_DIRICHLET))


@pytest.fixture(scope="session")
def grid2():
    return build_grid(GridSpec(dimension=2, half_width=8.0, points=32))


@pytest.fixture(scope="session")
def grid3():
    return build_grid(GridSpec(dimension=3, half_width=8.0, points=16))


@pytest.fixture(scope="session")
def grid3_fd():
    return build_grid(GridSpec(dimension=3, half_width=8.0, points=16, discretization=FD_DIRICHLET))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        terminalreporter.write_line(mod.RESULTS.get(number, f"[SKIP] {number:>2}. not run"))
