import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import path_graph
from zlap.errors import InputError
from zlap.graph import Graph, add_edge, degrees, is_connected, new_graph, total_traffic


def test_new_graph_undirected_path_is_symmetric():
    g = new_graph(3, [(0, 1, 1), (1, 2, 1)])
    expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    np.testing.assert_array_equal(g.weights, expected)
    assert not g.directed


def test_new_graph_directed_single_edge():
    g = new_graph(2, [(0, 1, 1)], directed=True)
    np.testing.assert_array_equal(g.weights, [[0, 1], [0, 0]])


@pytest.mark.parametrize("edge", [(0, 1, -1), (0, 1, np.inf), (0, 1, np.nan), (0, 2, 1), (-1, 0, 1)])
def test_new_graph_rejects_bad_edges(edge):
    with pytest.raises(InputError):
        new_graph(2, [edge])


def test_duplicates_sum_and_self_loop_stored_once():
    g = new_graph(2, [(0, 1, 1.5), (1, 0, 0.5), (0, 0, 2.0)])
    assert g.weights[0, 1] == 2.0 and g.weights[1, 0] == 2.0
    assert g.weights[0, 0] == 2.0


def test_graph_rejects_asymmetric_undirected():
    with pytest.raises(InputError):
        Graph(2, np.array([[0, 1.0], [0.5, 0]]))


def test_graph_weights_are_read_only(p3):
    with pytest.raises(ValueError):
        p3.weights[0, 1] = 5.0


def test_degrees_examples(p3):
    np.testing.assert_array_equal(degrees(p3, "out").values, [1, 2, 1])
    two_cycle = Graph(2, np.array([[0, 1.0], [1.0, 0]]), directed=True)
    np.testing.assert_array_equal(degrees(two_cycle, "out").values, [1, 1])
    np.testing.assert_array_equal(degrees(two_cycle, "in").values, [1, 1])
    loop = new_graph(1, [(0, 0, 2.0)])
    np.testing.assert_array_equal(degrees(loop).values, [2])
    with pytest.raises(InputError):
        degrees(p3, "sideways")


def test_total_traffic_examples(p4):
    assert total_traffic(p4) == 6.0
    assert total_traffic(new_graph(3, [])) == 0.0


def test_add_edge_examples(p4):
    healed = add_edge(p4, 0, 3, 4.0)
    np.testing.assert_array_equal(healed.out_degrees, [5, 2, 2, 5])
    np.testing.assert_array_equal(p4.out_degrees, [1, 2, 2, 1])  # input untouched
    looped = add_edge(p4, 0, 0, 1.0)
    assert looped.out_degrees[0] == p4.out_degrees[0] + 1
    assert add_edge(p4, 0, 1, 0.0) == p4
    with pytest.raises(InputError):
        add_edge(p4, 0, 4, 1.0)
    with pytest.raises(InputError):
        add_edge(p4, 0, 1, -1.0)


def test_is_connected():
    assert is_connected(path_graph(5))
    assert not is_connected(new_graph(3, [(0, 1, 1)]))
    # weak connectivity suffices for directed graphs
    assert is_connected(new_graph(3, [(0, 1, 1), (2, 1, 1)], directed=True))


def test_edges_lists_upper_triangle_for_undirected(p3):
    assert p3.edges() == [(0, 1, 1.0), (1, 2, 1.0)]


edge_lists = st.integers(2, 8).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(0, 40).map(lambda k: k / 4)),
            max_size=20,
        ),
        st.booleans(),
    )
)


@settings(max_examples=60, deadline=None)
@given(edge_lists)
def test_degree_sum_equals_traffic_and_symmetry(data):
    n, edges, directed = data
    g = new_graph(n, edges, directed=directed)
    assert degrees(g).values.sum() == pytest.approx(total_traffic(g), rel=0, abs=1e-12)
    if not directed:
        np.testing.assert_array_equal(g.weights, g.weights.T)
        np.testing.assert_array_equal(g.out_degrees, g.in_degrees)


@settings(max_examples=60, deadline=None)
@given(edge_lists, st.data())
def test_add_edge_increments_degrees_exactly(data, draw):
    n, edges, directed = data
    g = new_graph(n, edges, directed=directed)
    u = draw.draw(st.integers(0, n - 1))
    v = draw.draw(st.integers(0, n - 1))
    w = draw.draw(st.integers(0, 16)) / 4.0  # dyadic weights add without rounding
    h = add_edge(g, u, v, w)
    expected = np.array(g.out_degrees)
    expected[u] += w
    if not directed and u != v:
        expected[v] += w
    np.testing.assert_array_equal(h.out_degrees, expected)
