import numpy as np
import pytest

from relmeas.core import GridSpec

# (criterion number, title, passed, detail) recorded by the acceptance suite
ACCEPTANCE_RESULTS = []


@pytest.fixture
def desk_grid():
    return GridSpec(256, 200.0, 1.0)


@pytest.fixture
def small_grid():
    return GridSpec(64, 40.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {title}: {detail}")
