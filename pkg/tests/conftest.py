import numpy as np
import pytest
from hypothesis import settings

from whitener.graph import Graph, complete_graph, path_graph, ring_graph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def triangle():
    return complete_graph(3)


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def single_edge():
    return Graph.from_edges(2, [(0, 1)])


@pytest.fixture
def path3():
    return path_graph(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def odd_ring(n):
    return ring_graph(n)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL line per acceptance criterion; lines are repeated in the session summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def log(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
