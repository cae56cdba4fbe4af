import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcergm.graph import Encoding, Graph, pair_arrays
from dcergm.motifs import (K2, K3, K12, NAMED, SubgraphSpec, count_subgraph, count_subgraph_bruteforce,
                           count_through_edge, count_through_edge_bruteforce)
from test_graph import graphs

PATH4 = SubgraphSpec(4, ((0, 1), (1, 2), (2, 3)), "path4")
STAR3 = SubgraphSpec(4, ((0, 1), (0, 2), (0, 3)), "star3")
MOTIFS = [K2, K12, K3, PATH4, STAR3]


def test_edge_count_on_path():
    assert count_subgraph(K2, Graph.from_edges(3, [(0, 1), (1, 2)])) == 4


def test_two_star_count_on_triangle():
    assert count_subgraph(K12, Graph.complete(3)) == 6


def test_triangle_count_on_k4():
    # 4 triangles x 6 labelings, from the backtracking route
    assert count_subgraph_bruteforce(K3, Graph.complete(4)) == 24
    assert count_subgraph(K3, Graph.complete(4)) == 24


def test_edge_through_edge_is_two():
    g = Graph.from_edges(5, [(1, 3)])
    assert count_through_edge(K2, g, (0, 4)).count == 2


def test_two_star_through_edge_of_triangle():
    assert count_through_edge_bruteforce(K12, Graph.complete(3), (0, 1)) == 4
    assert count_through_edge(K12, Graph.complete(3), (0, 1)).count == 4


def test_two_star_through_lonely_edge():
    g = Graph.from_edges(4, [(0, 1)])
    assert count_through_edge(K12, g, (0, 1)).count == 0


def test_scaled_count():
    g = Graph.complete(5)
    ec = count_through_edge(K3, g, (0, 1))
    assert ec.count == 6 * 3
    assert ec.scaled == pytest.approx(18 / 5)


@pytest.mark.parametrize("edges, msg", [
    (((0, 0),), "self-loop"),
    (((0, 1), (1, 0)), "duplicates"),
    (((0, 1), (2, 3)), "connected"),
    (((0, 5),), "outside"),
])
def test_invalid_motifs(edges, msg):
    with pytest.raises(ValueError, match=msg):
        SubgraphSpec(4, edges)


def test_motif_bigger_than_graph():
    with pytest.raises(ValueError):
        count_subgraph(K3, Graph.complete(2))


def test_plus_minus_rejected():
    with pytest.raises(ValueError):
        count_subgraph(K2, Graph.empty(3, Encoding.PLUS_MINUS))


def test_dict_roundtrip():
    for h in MOTIFS:
        assert SubgraphSpec.from_dict(h.to_dict()) == h
    assert NAMED["triangle"] == K3


@given(graphs(max_n=6), st.sampled_from(MOTIFS))
def test_fast_path_matches_backtracking(g, h):
    if h.zeta > g.n:
        return
    assert count_subgraph(h, g) == count_subgraph_bruteforce(h, g)


@given(graphs(max_n=6), st.sampled_from(MOTIFS), st.data())
def test_edge_count_is_toggle_difference(g, h, data):
    # N(H, G + e) - N(H, G - e) = N_e(H, G)
    if h.zeta > g.n:
        return
    rows, cols = pair_arrays(g.n)
    e = data.draw(st.integers(0, rows.size - 1))
    i, j = int(rows[e]), int(cols[e])
    diff = count_subgraph(h, g.with_edge(i, j, True)) - count_subgraph(h, g.with_edge(i, j, False))
    assert count_through_edge(h, g, (i, j)).count == diff
    assert count_through_edge_bruteforce(h, g, (i, j)) == diff


@given(graphs(max_n=6), st.sampled_from(MOTIFS))
def test_edge_counts_sum_to_edges_times_count(g, h):
    if h.zeta > g.n:
        return
    rows, cols = pair_arrays(g.n)
    total = sum(count_through_edge(h, g, (int(rows[e]), int(cols[e]))).count
                for e in np.flatnonzero(g.bits))
    assert total == len(h.edges) * count_subgraph(h, g)


@given(graphs(max_n=6), st.sampled_from(MOTIFS), st.randoms(use_true_random=False))
def test_count_is_label_invariant(g, h, r):
    if h.zeta > g.n:
        return
    perm = list(range(g.n))
    r.shuffle(perm)
    assert count_subgraph(h, g.permuted(perm)) == count_subgraph(h, g)
