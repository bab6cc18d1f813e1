import pytest

from dpplimits.loads import Family, LoadDistribution, SystemDimensions
from dpplimits.topology import ResourceBudget

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def unit_budget():
    return ResourceBudget(1.0, 1.0)


@pytest.fixture
def paper_point():
    """M=4, N=8, V0=1, uniform loads with mu=1 and C_V=0.5."""
    return SystemDimensions(8, 4, 1.0), LoadDistribution(Family.UNIFORM, 1.0, 0.5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
