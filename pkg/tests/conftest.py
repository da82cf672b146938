import numpy as np
import pytest


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from _acceptance_log import LINES
    if LINES:
        terminalreporter.section('acceptance criteria')
        for line in sorted(LINES):
            terminalreporter.write_line(line)
