import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldaqc.graph import (
    EmptyInstanceError,
    Graph,
    build_kings_graph,
    degree_order,
    dumps,
    from_edge_list,
    kings_edge_count,
    load,
    loads,
    save,
    unit_disk_graph,
)


def test_smallest_axial_pair():
    g = build_kings_graph(1, 2, 0.0, seed=123)
    assert (g.n, g.m, g.degrees) == (2, 1, (1, 1))


def test_two_by_two_is_complete():
    g = build_kings_graph(2, 2, 0.0, seed=7)
    assert g.n == 4 and g.m == 6


def test_golden_instance():
    g = build_kings_graph(3, 3, 0.3, seed=42)
    assert (g.n, g.m) == (7, 10)
    assert g.degrees == (2, 4, 2, 4, 3, 2, 3)
    assert g.positions.tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 2], [2, 0], [2, 1]]


@pytest.mark.parametrize("rows,cols", [(1, 1), (1, 5), (3, 3), (4, 5), (6, 2)])
def test_hole_free_edge_count(rows, cols):
    g = build_kings_graph(rows, cols, 0.0, seed=0)
    assert g.m == kings_edge_count(rows, cols)


@given(st.integers(1, 5), st.integers(1, 5), st.floats(0.0, 0.9), st.integers(0, 2**63 - 1))
@settings(max_examples=60, deadline=None)
def test_kings_graph_invariants(rows, cols, p, seed):
    try:
        g = build_kings_graph(rows, cols, p, seed)
    except EmptyInstanceError:
        return
    assert g == build_kings_graph(rows, cols, p, seed)
    assert sum(g.degrees) == 2 * g.m
    for i in range(g.n):
        for j in range(i + 1, g.n):
            near = g.distance(i, j) <= math.sqrt(2) + 1e-9
            assert near == ((i, j) in g.edges)


def test_rejects_bad_probability():
    with pytest.raises(ValueError):
        build_kings_graph(2, 2, 1.5, 0)
    with pytest.raises(ValueError):
        build_kings_graph(2, 2, -0.1, 0)


def test_all_holes_is_distinguishable():
    with pytest.raises(EmptyInstanceError):
        build_kings_graph(3, 3, 1.0, 0)


@pytest.mark.parametrize(
    "n,edges,degrees",
    [
        (3, [(0, 1), (1, 2)], (1, 2, 1)),
        (4, [(0, 1), (1, 2), (2, 3)], (1, 2, 2, 1)),
        (4, [(0, 1), (0, 2), (0, 3)], (3, 1, 1, 1)),
    ],
)
def test_from_edge_list_degrees(n, edges, degrees):
    assert from_edge_list(n, edges).degrees == degrees


def test_from_edge_list_dedupes():
    g = from_edge_list(3, [(0, 1), (1, 0), (0, 1), (2, 1)])
    assert g.edges == ((0, 1), (1, 2))


def test_from_edge_list_errors():
    with pytest.raises(ValueError, match="self-loop"):
        from_edge_list(3, [(1, 1)])
    with pytest.raises(ValueError, match="out of range"):
        from_edge_list(3, [(0, 3)])


def test_stored_degrees_must_match():
    with pytest.raises(ValueError):
        Graph(2, ((0, 1),), None, (1, 2))


def test_degree_order_ties_by_id(p4, s3):
    o = degree_order(p4)
    assert o.sorted_degrees == (1, 1, 2, 2)
    assert o.permutation == (0, 3, 1, 2)
    assert degree_order(s3).sorted_degrees == (1, 1, 1, 3)
    assert degree_order(from_edge_list(3, [(1, 2)])).sorted_degrees == (0, 1, 1)


def test_unit_disk_graph_radius():
    g = unit_disk_graph([[0, 0], [1, 0], [2.6, 0]], radius=1.5)
    assert g.edges == ((0, 1),)


def test_text_roundtrip(tmp_path):
    g = build_kings_graph(3, 4, 0.25, seed=5)
    assert loads(dumps(g)) == g
    save(g, tmp_path / "g.txt")
    assert load(tmp_path / "g.txt") == g
    bare = from_edge_list(3, [(0, 1)])
    assert loads(dumps(bare)) == bare
    assert loads(dumps(bare)).positions is None


def test_text_format_layout(p3):
    assert dumps(p3) == "3 2\n0 1\n1 2\n"
    with pytest.raises(ValueError):
        loads("3 2\n0 1\n")


def test_connectivity(p4):
    assert p4.is_connected()
    assert not from_edge_list(3, [(0, 1)]).is_connected()


def test_positions_are_read_only():
    g = build_kings_graph(2, 2, 0.0, 0)
    with pytest.raises(ValueError):
        g.positions[0, 0] = 5.0
    assert isinstance(g.positions, np.ndarray)
