import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from neumann_hardy.grid import Grid

settings.register_profile(
    "lab", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("lab")

# acceptance verdict lines, printed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")

        def key(line):
            num, suffix = re.match(r"A(\d+)(\w*)", line).groups()
            return int(num), suffix

        for line in sorted(ACCEPTANCE_LINES, key=key):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid1():
    return Grid(1, 8.0, 512)


@pytest.fixture(scope="session")
def grid2():
    return Grid(2, 4.0, 32)
