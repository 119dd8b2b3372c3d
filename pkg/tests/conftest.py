import numpy as np
import pytest

from vdsom.grid import GridSpec, build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid3():
    return build_grid(GridSpec(3, 3))


@pytest.fixture(scope="session")
def torus4():
    return build_grid(GridSpec(4, 4, "toroidal"))


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
