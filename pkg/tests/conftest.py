import numpy as np
import pytest

from asyncadmm.graph import CommGraph, build_cover, ring_cover

FIG2_EDGES = [(1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 6)]
FIG2_SETS = [(1, 2, 3, 4), (3, 5), (4, 6)]


@pytest.fixture
def fig2():
    return build_cover(CommGraph(6, FIG2_EDGES), FIG2_SETS, 2)


@pytest.fixture
def ring3():
    return ring_cover(3, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
