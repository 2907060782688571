from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import build_graph
from delayleader.node import Side
from delayleader.oracle import (
    classify_by_distance,
    has_unique_shortest_paths,
    oracle_all_pairs,
    oracle_mst,
    tree_closeness,
)
from delayleader.overlay import OverlayError, generate_overlay
from delayleader.paths import all_pairs_delays
from delayleader import _purepaths


def test_two_nodes():
    g = build_graph([(0, 1, 4)])
    res = oracle_all_pairs(g)
    assert res.closeness == {0: Fraction(1, 4), 1: Fraction(1, 4)}
    assert res.ideal_leader == 0
    assert res.spt_parent == {0: 0, 1: 0}


def test_star_center_wins(star5):
    res = oracle_all_pairs(star5)
    assert res.closeness[0] == Fraction(4, 4)
    for leaf in range(1, 5):
        assert res.closeness[leaf] == Fraction(4, 7)
    assert res.ideal_leader == 0
    assert res.eccentricity[0] == 1
    assert res.eccentricity[1] == 2
    assert all(res.spt_parent[leaf] == 0 for leaf in range(1, 5))


def test_path_middle_wins(path3):
    res = oracle_all_pairs(path3)
    assert res.closeness[1] == Fraction(2, 2)
    assert res.closeness[0] == res.closeness[2] == Fraction(2, 3)
    assert res.ideal_leader == 1
    assert res.spt_parent == {1: 1, 0: 1, 2: 1}


def test_tie_prefers_current_leader_then_lowest():
    g = build_graph([(0, 1, 4)])
    assert oracle_all_pairs(g).ideal_leader == 0
    assert oracle_all_pairs(g, current_leader=1).ideal_leader == 1
    assert oracle_all_pairs(g, current_leader=5).ideal_leader == 0


def test_disconnected_rejected():
    g = build_graph([(0, 1, 1), (2, 3, 1)])
    with pytest.raises(OverlayError):
        oracle_all_pairs(g)
    with pytest.raises(OverlayError):
        oracle_mst(g)


def test_mst_forced_and_ties():
    tri = build_graph([(0, 1, 1), (1, 2, 1), (0, 2, 5)])
    assert oracle_mst(tri) == {(0, 1), (1, 2)}

    two = build_graph([(0, 1, 9)])
    assert oracle_mst(two) == {(0, 1)}

    even = build_graph([(0, 1, 2), (1, 2, 2), (0, 2, 2)])
    assert oracle_mst(even) == {(0, 1), (0, 2)}


def test_classification_on_path(path3):
    dist = oracle_all_pairs(path3).dist
    # at node 1, link to 0: source 2 sits behind us, source 0 behind the peer
    assert classify_by_distance(path3, dist, 1, 0, 2) is Side.BEHIND_SELF
    assert classify_by_distance(path3, dist, 1, 0, 0) is Side.BEHIND_PEER
    assert classify_by_distance(path3, dist, 1, 0, 1) is Side.BEHIND_SELF


def test_classification_shared_band():
    tri = build_graph([(0, 1, 2), (1, 2, 2), (0, 2, 2)])
    dist = oracle_all_pairs(tri).dist
    assert classify_by_distance(tri, dist, 0, 1, 2) is Side.SHARED


def test_classification_equal_route_goes_to_directed_side():
    # square with equal delays: the diagonal source has two equally fast
    # routes, which counts toward the directed sides, not the shared band
    sq = build_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)])
    dist = oracle_all_pairs(sq).dist
    assert classify_by_distance(sq, dist, 0, 1, 2) is Side.BEHIND_PEER
    assert classify_by_distance(sq, dist, 0, 1, 3) is Side.BEHIND_SELF
    assert not has_unique_shortest_paths(sq, dist)


def test_unique_paths_detector(path3):
    dist = oracle_all_pairs(path3).dist
    assert has_unique_shortest_paths(path3, dist)


@settings(derandomize=True, max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_distance_axioms(seed):
    g = generate_overlay(2 + seed % 20, 1 + seed % 4, (1, 30), seed)
    res = oracle_all_pairs(g)
    nodes = g.nodes()
    for x in nodes:
        assert res.dist[x][x] == 0
        for y in nodes:
            assert res.dist[x][y] == res.dist[y][x]
            for z in nodes:
                assert res.dist[x][z] <= res.dist[x][y] + res.dist[y][z]


@settings(derandomize=True, max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_spt_paths_realize_distances(seed):
    g = generate_overlay(2 + seed % 25, 1 + seed % 3, (1, 40), seed)
    res = oracle_all_pairs(g)
    root = res.ideal_leader
    for v in g.nodes():
        total, cur, hops = 0, v, 0
        while cur != root:
            parent = res.spt_parent[cur]
            total += g.delay(cur, parent)
            cur = parent
            hops += 1
            assert hops <= len(g)
        assert total == res.dist[root][v]


@settings(derandomize=True, max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_leader_dominates_and_beats_any_mst_center(seed):
    g = generate_overlay(2 + seed % 25, 1 + seed % 3, (1, 40), seed)
    res = oracle_all_pairs(g)
    best = res.closeness[res.ideal_leader]
    assert all(best >= c for c in res.closeness.values())
    # the best placement inside a minimum spanning tree never beats the
    # graph-wide optimum
    assert max(tree_closeness(g, oracle_mst(g)).values()) <= best


def test_mst_center_can_lose_strictly():
    # triangle with a pendant: the delay-tie MST reroutes one pair the long
    # way round, so its best node sits strictly below the graph optimum
    g = build_graph([(0, 1, 2), (1, 2, 2), (0, 2, 2), (1, 3, 3)])
    res = oracle_all_pairs(g)
    mst = oracle_mst(g)
    assert mst == {(0, 1), (0, 2), (1, 3)}
    assert max(tree_closeness(g, mst).values()) < res.closeness[res.ideal_leader]


def test_backends_agree():
    for seed in range(5):
        g = generate_overlay(25, 3, (1, 50), seed)
        n, ids, indptr, nbrs, wts = g.csr()
        pure = _purepaths.all_pairs_csr(n, indptr, nbrs, wts)
        assert all_pairs_delays(g) == {
            ids[s]: {ids[t]: pure[s][t] for t in range(n)} for s in range(n)
        }
