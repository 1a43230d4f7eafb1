import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fchoquard.grid import Field, build_grid
from fchoquard.params import ProblemParams

settings.register_profile("fcl", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("fcl")

DEFAULT = ProblemParams(1, 0.4, 0.5, 1.0, 3.0, 0.5)


def gaussian(grid, width=1.0, centre=0.0, amp=1.0):
    return Field.from_function(grid, lambda *x: amp * np.exp(-sum((xi - centre) ** 2 for xi in x) / (2 * width ** 2)))


def with_mass(u, c):
    return u.like(u.values * (c / math.sqrt(u.mass)))


@pytest.fixture
def params():
    return DEFAULT


@pytest.fixture(scope="session")
def grid1():
    return build_grid(1, 32.0, 1024)


@pytest.fixture(scope="session")
def free1():
    return build_grid(1, 32.0, 1024, "free")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
