import numpy as np
import pytest

from seamless_emos.datamodel import LeadTimeGrid
from seamless_emos.synthgen import DEFAULT_PROFILES, generate_dataset, generate_world


@pytest.fixture(scope="session")
def grid():
    return LeadTimeGrid()


@pytest.fixture(scope="session")
def small_world():
    """One valley station, 420 days: enough for assembly and fitting tests."""
    return generate_world(11, DEFAULT_PROFILES["valley"], n_days=420)


@pytest.fixture(scope="session")
def three_year_dataset():
    ds, worlds = generate_dataset(7, n_days=1100)
    return ds, worlds


def normal_equations_solve(X, y):
    """Reference least-squares solve via X'X b = X'y (no QR involved)."""
    return np.linalg.solve(X.T @ X, X.T @ y)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
