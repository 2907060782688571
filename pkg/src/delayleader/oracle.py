"""Brute-force ground truth for the election: exact distances, closeness,
eccentricity, the ideal leader, a shortest-path tree and a reference MST.

Everything here works from the graph alone, never from protocol state, so it
can independently check what the distributed run produced. Closeness is kept
as an exact Fraction to make leader comparisons deterministic under ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from delayleader.node import Side
from delayleader.overlay import OverlayError, OverlayGraph
from delayleader.paths import all_pairs_delays


@dataclass
class OracleResult:
    dist: dict[int, dict[int, int]]
    closeness: dict[int, Fraction]
    eccentricity: dict[int, int]
    ideal_leader: int
    spt_parent: dict[int, int]


def oracle_all_pairs(g: OverlayGraph, current_leader: int | None = None) -> OracleResult:
    """Exact all-pairs answers; ties for leader prefer current_leader, then lowest id."""
    nodes = g.nodes()
    if len(nodes) < 2:
        raise OverlayError("need at least 2 nodes for centrality")
    dist = all_pairs_delays(g)
    for s in nodes:
        for t in nodes:
            if dist[s][t] < 0:
                raise OverlayError("graph is not connected")

    n = len(nodes)
    closeness = {x: Fraction(n - 1, sum(dist[y][x] for y in nodes)) for x in nodes}
    eccentricity = {x: max(dist[y][x] for y in nodes) for x in nodes}

    best = max(closeness.values())
    tied = [x for x in nodes if closeness[x] == best]
    if current_leader is not None and current_leader in tied:
        leader = current_leader
    else:
        leader = min(tied)

    parent = {leader: leader}
    for x in nodes:
        if x == leader:
            continue
        parent[x] = min(
            p for p, d in g.neighbors(x).items()
            if dist[leader][p] + d == dist[leader][x]
        )
    return OracleResult(dist, closeness, eccentricity, leader, parent)


def oracle_mst(g: OverlayGraph) -> set[tuple[int, int]]:
    """Minimum spanning tree by total delay; ties break on the lowest id pair."""
    if not g.is_connected():
        raise OverlayError("graph is not connected")
    root = {v: v for v in g.nodes()}

    def find(v):
        while root[v] != v:
            root[v] = root[root[v]]
            v = root[v]
        return v

    tree = set()
    for d, a, b in sorted((d, a, b) for a, b, d in g.edges()):
        ra, rb = find(a), find(b)
        if ra != rb:
            root[ra] = rb
            tree.add((a, b))
    return tree


def classify_by_distance(g: OverlayGraph, dist: dict[int, dict[int, int]],
                         x: int, y: int, s: int) -> Side:
    """Place source s relative to link (x, y) using exact distances.

    Boundary equalities go to the directed sides so the counts match what the
    recording pass accumulates, including when equal-delay routes tie.
    """
    d = g.delay(x, y)
    if dist[s][y] == dist[s][x] + d:
        return Side.BEHIND_SELF
    if dist[s][x] == dist[s][y] + d:
        return Side.BEHIND_PEER
    return Side.SHARED


def has_unique_shortest_paths(g: OverlayGraph, dist: dict[int, dict[int, int]]) -> bool:
    """True when every node pair has exactly one shortest-delay route."""
    for s in g.nodes():
        for x in g.nodes():
            if s == x:
                continue
            preds = sum(
                1 for p, d in g.neighbors(x).items()
                if dist[s][p] + d == dist[s][x]
            )
            if preds > 1:
                return False
    return True


def tree_distance_sums(g: OverlayGraph, edges: set[tuple[int, int]]) -> dict[int, int]:
    """Sum of pairwise path delays to each node, walking only the given tree edges."""
    adj: dict[int, dict[int, int]] = {v: {} for v in g.nodes()}
    for a, b in edges:
        adj[a][b] = g.delay(a, b)
        adj[b][a] = g.delay(a, b)
    sums = {}
    for src in g.nodes():
        dist = {src: 0}
        stack = [src]
        while stack:
            v = stack.pop()
            for p, d in adj[v].items():
                if p not in dist:
                    dist[p] = dist[v] + d
                    stack.append(p)
        if len(dist) != len(adj):
            raise OverlayError("edge set does not span the graph")
        sums[src] = sum(dist.values())
    return sums


def tree_closeness(g: OverlayGraph, edges: set[tuple[int, int]]) -> dict[int, Fraction]:
    n = len(g)
    return {v: Fraction(n - 1, s) for v, s in tree_distance_sums(g, edges).items()}
