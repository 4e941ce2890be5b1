import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nullwave.grid import RadialGrid

settings.register_profile(
    "nullwave", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("nullwave")

# acceptance outcomes, filled by tests/test_acceptance.py and echoed at session end
ACCEPTANCE_LINES = []


@pytest.fixture
def grid():
    return RadialGrid(0.875, 12.0, 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
