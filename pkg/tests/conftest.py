import math

import numpy as np
import pytest

from levylab.grid import PeriodicGrid
from levylab.stable import StableLaw

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def law15():
    return StableLaw.symmetric_1d(1.5)


@pytest.fixture
def law18():
    return StableLaw.symmetric_1d(1.8)


@pytest.fixture
def planar8():
    return StableLaw.planar(1.5, 8)


@pytest.fixture
def torus1():
    return PeriodicGrid(1, 128, 2 * math.pi)


@pytest.fixture
def torus2():
    return PeriodicGrid(2, 32, 2 * math.pi)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("ab:"))):
            terminalreporter.write_line(line)
