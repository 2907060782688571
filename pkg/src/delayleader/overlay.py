"""Overlay topology: an undirected weighted peer graph with microsecond link delays.

The graph is the ground truth the simulator runs on and the oracle measures.
Delays are plain integers end to end so every downstream comparison stays exact.
"""

from __future__ import annotations

import json
import random
from array import array

MAX_NODE_ID = 0xFFFF


class OverlayError(ValueError):
    """Invalid overlay structure or generator parameters."""


class OverlayGraph:
    """Mutable undirected graph; at most one edge per pair, no self loops."""

    def __init__(self):
        self._adj: dict[int, dict[int, int]] = {}

    # -- construction ----------------------------------------------------

    def add_node(self, node: int) -> None:
        if not (0 <= node <= MAX_NODE_ID):
            raise OverlayError(f"node id {node} outside 0..{MAX_NODE_ID}")
        self._adj.setdefault(node, {})

    def add_edge(self, a: int, b: int, delay_us: int) -> None:
        if a == b:
            raise OverlayError(f"self loop on node {a}")
        if delay_us < 0 or not isinstance(delay_us, int):
            raise OverlayError(f"delay must be a nonnegative integer, got {delay_us!r}")
        self.add_node(a)
        self.add_node(b)
        if b in self._adj[a]:
            raise OverlayError(f"duplicate edge {a}-{b}")
        self._adj[a][b] = delay_us
        self._adj[b][a] = delay_us

    def remove_node(self, node: int) -> None:
        for peer in list(self._adj[node]):
            del self._adj[peer][node]
        del self._adj[node]

    def copy(self) -> "OverlayGraph":
        g = OverlayGraph()
        g._adj = {n: dict(nbrs) for n, nbrs in self._adj.items()}
        return g

    # -- queries ----------------------------------------------------------

    def nodes(self) -> list[int]:
        return sorted(self._adj)

    def __contains__(self, node: int) -> bool:
        return node in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    def neighbors(self, node: int) -> dict[int, int]:
        return dict(self._adj[node])

    def degree(self, node: int) -> int:
        return len(self._adj[node])

    def delay(self, a: int, b: int) -> int:
        return self._adj[a][b]

    def has_edge(self, a: int, b: int) -> bool:
        return a in self._adj and b in self._adj[a]

    def edges(self) -> list[tuple[int, int, int]]:
        """Sorted (a, b, delay_us) triples with a < b."""
        out = []
        for a, nbrs in self._adj.items():
            for b, d in nbrs.items():
                if a < b:
                    out.append((a, b, d))
        return sorted(out)

    def edge_count(self) -> int:
        return sum(len(n) for n in self._adj.values()) // 2

    def is_connected(self) -> bool:
        if not self._adj:
            return True
        seen = set()
        stack = [next(iter(self._adj))]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(p for p in self._adj[v] if p not in seen)
        return len(seen) == len(self._adj)

    def __eq__(self, other):
        return isinstance(other, OverlayGraph) and self._adj == other._adj

    # -- CSR view for the path kernel --------------------------------------

    def csr(self) -> tuple[int, list[int], array, array, array]:
        """Dense CSR adjacency: (n, ids, indptr, neighbor-index, delay)."""
        ids = self.nodes()
        index = {v: i for i, v in enumerate(ids)}
        indptr = array("q", [0])
        nbrs = array("q")
        wts = array("q")
        for v in ids:
            for p in sorted(self._adj[v]):
                nbrs.append(index[p])
                wts.append(self._adj[v][p])
            indptr.append(len(nbrs))
        return len(ids), ids, indptr, nbrs, wts


def generate_overlay(n: int, attach_degree: int, delay_range: tuple[int, int],
                     seed: int) -> OverlayGraph:
    """Random connected overlay: node i links to min(i, attach_degree) earlier nodes."""
    if n < 2:
        raise OverlayError(f"need at least 2 nodes, got {n}")
    if attach_degree < 1:
        raise OverlayError(f"attach_degree must be >= 1, got {attach_degree}")
    lo, hi = delay_range
    if lo > hi or lo < 0:
        raise OverlayError(f"empty delay range {delay_range}")
    rng = random.Random(seed)
    g = OverlayGraph()
    g.add_node(0)
    for i in range(1, n):
        g.add_node(i)
        for target in sorted(rng.sample(range(i), min(i, attach_degree))):
            g.add_edge(i, target, rng.randint(lo, hi))
    return g


# -- JSON exchange format -------------------------------------------------

def graph_to_dict(g: OverlayGraph) -> dict:
    return {
        "nodes": g.nodes(),
        "edges": [{"a": a, "b": b, "delay_us": d} for a, b, d in g.edges()],
    }


def graph_from_dict(doc: dict) -> OverlayGraph:
    try:
        nodes = doc["nodes"]
        edges = doc["edges"]
    except (KeyError, TypeError) as exc:
        raise OverlayError(f"graph document missing field: {exc}") from exc
    g = OverlayGraph()
    for v in nodes:
        g.add_node(v)
    for e in edges:
        g.add_edge(e["a"], e["b"], e["delay_us"])
    return g


def load_graph(path) -> OverlayGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh))


def save_graph(g: OverlayGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(g), fh, indent=2, sort_keys=True)
        fh.write("\n")
