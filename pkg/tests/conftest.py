import pytest

from delayleader.engine import run_scenario
from delayleader.overlay import OverlayGraph


def build_graph(edges) -> OverlayGraph:
    g = OverlayGraph()
    for a, b, d in edges:
        g.add_edge(a, b, d)
    return g


def run_election(g, seed=0, **kwargs):
    return run_scenario(g, [{"at": 0, "op": "start_election"}], seed=seed, **kwargs)


def tree_edges(result) -> set[tuple[int, int]]:
    """Adoption-direction edges of the settled tree, as sorted pairs."""
    edges = set()
    for v, rt in result.runtimes.items():
        t = rt.dcdt.toward
        if t != v:
            edges.add((min(v, t), max(v, t)))
    return edges


def delay_to_leader(result, g, v) -> int:
    """Path delay from v to the leader along adoption directions."""
    total, cur, hops = 0, v, 0
    while cur != result.leader:
        nxt = result.runtimes[cur].dcdt.toward
        assert nxt != cur, f"node {cur} has no path to the leader"
        total += g.delay(cur, nxt)
        cur = nxt
        hops += 1
        assert hops <= len(g), "cycle in adoption directions"
    return total


@pytest.fixture
def path3():
    """0 -(1)- 1 -(1)- 2"""
    return build_graph([(0, 1, 1), (1, 2, 1)])


@pytest.fixture
def star5():
    """center 0, four leaves at delay 1"""
    return build_graph([(0, i, 1) for i in range(1, 5)])


@pytest.fixture
def slow_triangle():
    """direct 0-1 link is slower than the detour through 2"""
    return build_graph([(0, 1, 10), (0, 2, 1), (2, 1, 1)])
