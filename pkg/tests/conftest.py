import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _quiet_overflow():
    # xoshiro arithmetic wraps on purpose when the kernels run as plain Python
    with np.errstate(over="ignore"):
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
