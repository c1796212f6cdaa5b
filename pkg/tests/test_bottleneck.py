import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, cycle_graph, dumbbell_graph, path_graph, random_connected
from zlap.bottleneck import conductance, heal_rank, min_conductance, protocol_model
from zlap.errors import InputError
from zlap.graph import Graph, new_graph, total_traffic
from zlap.operators import random_walk_laplacian, z_laplacian


def enumerate_min_conductance(w):
    """Loop-based oracle: every proper subset, cut counted in both directions."""
    m, n = w.weights, w.n
    best = None
    for size in range(1, n):
        for s in itertools.combinations(range(n), size):
            inside = set(s)
            cut = sum(m[i][j] + m[j][i] for i in inside for j in range(n) if j not in inside)
            vol_s = sum(m[i][j] for i in inside for j in range(n))
            vol_c = sum(m[i][j] for i in range(n) if i not in inside for j in range(n))
            phi = cut / min(vol_s, vol_c)
            if best is None or phi < best - 1e-12:
                best = phi
    return best


# --- conductance ----------------------------------------------------------------------


def test_conductance_p3(p3):
    r = conductance(p3, {0})
    assert (r.cut, r.vol_s, r.vol_complement, r.phi) == (2.0, 1.0, 3.0, 2.0)


def test_conductance_p4(p4):
    r = conductance(p4, [0, 1])
    assert (r.cut, r.vol_s, r.vol_complement) == (2.0, 3.0, 3.0)
    assert r.phi == pytest.approx(2 / 3, abs=1e-15)


def test_conductance_errors(p4):
    for bad in ([], [0, 1, 2, 3], [5]):
        with pytest.raises(InputError):
            conductance(p4, bad)


def test_self_loops_count_in_volume_not_cut():
    g = new_graph(2, [(0, 1, 1.0), (0, 0, 3.0)])
    r = conductance(g, [0])
    assert (r.cut, r.vol_s, r.vol_complement) == (2.0, 4.0, 1.0)


def test_conductance_scale_invariant(rng):
    g = random_connected(rng, 7)
    scaled = Graph.from_matrix(g.weights * 3.7)
    for s in ([0], [1, 2], [0, 3, 5]):
        assert conductance(scaled, s).phi == pytest.approx(conductance(g, s).phi, abs=1e-12)


# --- minimization -----------------------------------------------------------------------


def test_min_conductance_p4(p4):
    for method in ("brute", "sweep"):
        r = min_conductance(p4, method)
        assert r.subset == (0, 1)
        assert r.phi == pytest.approx(2 / 3, abs=1e-15)


def test_min_conductance_k3_tie_break(k3):
    r = min_conductance(k3)
    assert r.subset == (0,)
    assert r.phi == 2.0


def test_min_conductance_errors(p4):
    with pytest.raises(InputError):
        min_conductance(new_graph(4, [(0, 1, 1), (2, 3, 1)]))
    with pytest.raises(InputError):
        min_conductance(path_graph(25))
    with pytest.raises(InputError):
        min_conductance(p4, "spectral")
    with pytest.raises(InputError):
        min_conductance(new_graph(1, []))


def test_brute_force_matches_enumeration(rng):
    for _ in range(25):
        n = int(rng.integers(2, 9))
        g = random_connected(rng, n, directed=bool(rng.integers(2)))
        assert min_conductance(g).phi == pytest.approx(enumerate_min_conductance(g), abs=1e-12)


def test_brute_force_handles_chunking():
    # 2^(n-1) - 1 bipartitions span several chunks at n = 18
    g = dumbbell_graph(9)
    r = min_conductance(g)
    assert r.subset == tuple(range(9))
    assert r.phi == pytest.approx(2 / (2 * 36 + 1), abs=1e-15)


@pytest.mark.parametrize(
    "g",
    [path_graph(n) for n in (2, 5, 8, 12)] + [cycle_graph(n) for n in (3, 6, 11)] + [dumbbell_graph(k) for k in (3, 6)],
)
def test_sweep_equals_brute_on_structured_graphs(g):
    assert min_conductance(g, "sweep").phi == pytest.approx(min_conductance(g).phi, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 10), st.integers(0, 2**32 - 1))
def test_sweep_never_beats_brute(n, seed):
    g = random_connected(np.random.default_rng(seed), n)
    assert min_conductance(g, "sweep").phi >= min_conductance(g).phi - 1e-12


# --- protocol models -------------------------------------------------------------------


def test_protocol_base(p3):
    m = protocol_model(p3, "base")
    assert m.traffic == 4.0
    np.testing.assert_allclose(m.laplacian.matrix.sum(axis=1), 0.0, atol=1e-15)
    assert m.graph == p3


def test_protocol_random_access(p3):
    m = protocol_model(p3, "random_access")
    assert m.graph.weights[1, 1] == 2.0
    assert m.traffic == 6.0
    np.testing.assert_array_equal(m.delay, [1, 2, 1])


def test_protocol_tdma_saturated(p3):
    m = protocol_model(p3, "tdma_saturated")
    np.testing.assert_allclose(m.base.out_degrees, [0.5, 1.0, 0.5])
    np.testing.assert_allclose(m.delay, [2, 2, 2])
    assert m.traffic == pytest.approx(4.0, abs=1e-12)


def test_protocol_tdma_matched(p3):
    m = protocol_model(p3, "tdma_matched")
    np.testing.assert_allclose(m.graph.weights, p3.weights / np.outer(p3.out_degrees, p3.out_degrees))
    np.testing.assert_array_equal(m.delay, 1.0)


def test_protocol_errors(p3):
    with pytest.raises(InputError):
        protocol_model(p3, "csma")
    with pytest.raises(InputError):
        protocol_model(new_graph(2, [(0, 1, 1), (1, 0, 1)], directed=True), "base")


@pytest.mark.parametrize("name", ["base", "random_access", "tdma_saturated", "tdma_matched"])
def test_protocol_laplacian_consistency(rng, name):
    for _ in range(5):
        g = random_connected(rng, 8)
        m = protocol_model(g, name)
        assert m.traffic == total_traffic(m.graph)
        np.testing.assert_allclose(m.laplacian.matrix, z_laplacian(m.base, 1.0, m.delay).matrix, atol=1e-12)
        np.testing.assert_allclose(m.laplacian.matrix, random_walk_laplacian(m.graph), atol=1e-12)


def test_tdma_saturated_conserves_per_vertex_traffic(rng):
    for _ in range(10):
        g = random_connected(rng, 9)
        m = protocol_model(g, "tdma_saturated")
        np.testing.assert_allclose(m.graph.out_degrees, g.out_degrees, rtol=0, atol=1e-12)


# --- healing ---------------------------------------------------------------------------


def test_heal_p4_long_edge(p4):
    (r,) = heal_rank(p4, "base", [(0, 3)], 4.0)
    assert r.phi == pytest.approx(1.0, abs=1e-15)
    assert r.cut.subset == (0, 3)


def test_heal_zero_bandwidth_is_noop(p4):
    (r,) = heal_rank(p4, "base", [(0, 3)], 0.0)
    assert r.phi == pytest.approx(2 / 3, abs=1e-15)


def test_heal_delay_update_never_helps_random_access(rng):
    for _ in range(10):
        g = random_connected(rng, 7)
        u, v = (int(x) for x in rng.choice(7, 2, replace=False))
        fixed = heal_rank(g, "random_access", [(u, v)], 1.0, delay_update=False)[0].phi
        updated = heal_rank(g, "random_access", [(u, v)], 1.0, delay_update=True)[0].phi
        assert updated <= fixed + 1e-12


def test_heal_ranking_order(p4):
    ranked = heal_rank(p4, "base", [(1, 2), (0, 3), (0, 2), (1, 3)], 4.0)
    phis = [r.phi for r in ranked]
    assert phis == sorted(phis, reverse=True)
    # (0, 2) and (1, 3) are mirror images and tie; the smaller edge comes first
    edges = [r.edge for r in ranked]
    assert edges.index((0, 2)) < edges.index((1, 3))


def test_heal_rejects_negative_bandwidth(p4):
    with pytest.raises(InputError):
        heal_rank(p4, "base", [(0, 3)], -1.0)
