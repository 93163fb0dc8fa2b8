import pytest

from sqcir import ModelParams, StateVector
from sqcir.io import PRESETS, default_initial

# criterion id -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def table1():
    return PRESETS["table1"]


@pytest.fixture
def fig_peak():
    return PRESETS["fig-peak"]


@pytest.fixture
def slow_params():
    """Rates slow enough that an outbreak unfolds over weeks rather than hours."""
    return ModelParams(lam=4.0, alpha=0.0005, epsilon0=0.001, delta=0.002, mu=0.05, nu=0.05, phi=0.01)


@pytest.fixture
def default_state(table1):
    return default_initial(table1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(k.split(".")[0][2:]), k)):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key:6s} {detail}")
