import numpy as np
import pytest

from nsbell.core import LocalState

ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion."""

    def record(label, passed, detail=""):
        ACCEPTANCE_RESULTS.append((label, bool(passed), detail))
        return passed

    return record


def random_local(rng):
    return LocalState(*rng.random(3))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
