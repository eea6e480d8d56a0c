import numpy as np
import pytest
from hypothesis import strategies as st

from ldaqc.graph import EmptyInstanceError, build_kings_graph, from_edge_list


@pytest.fixture
def p3():
    return from_edge_list(3, [(0, 1), (1, 2)])


@pytest.fixture
def p4():
    return from_edge_list(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def s3():
    return from_edge_list(4, [(0, 1), (0, 2), (0, 3)])


@pytest.fixture
def k3():
    return from_edge_list(3, [(0, 1), (1, 2), (0, 2)])


def random_graph(rng: np.random.Generator, n: int, p: float):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.shape[0]) < p
    return from_edge_list(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def kings_corpus(count, rows, cols, hole_probability, seed0=0, n_range=None):
    out, seed = [], seed0
    while len(out) < count:
        try:
            g = build_kings_graph(rows, cols, hole_probability, seed)
        except EmptyInstanceError:
            g = None
        seed += 1
        if g is not None and (n_range is None or n_range[0] <= g.n <= n_range[1]):
            out.append(g)
    return out


@st.composite
def graphs(draw, min_n=1, max_n=12):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return from_edge_list(n, edges)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
