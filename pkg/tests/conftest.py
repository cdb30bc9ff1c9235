import numpy as np
import pytest

from mixlap.domain import make_grid
from mixlap.fraclap import FracParams, assemble_operator


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid_257():
    return make_grid(-1.0, 1.0, 257, 0.0)


@pytest.fixture(scope="session")
def op_257_half(grid_257):
    return assemble_operator(grid_257, FracParams(sigma=0.5))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
