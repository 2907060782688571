"""Pure-Python shortest-delay kernel; fallback when the compiled core is absent.

Semantics are identical to delayleader._fastpaths: integer Dijkstra over a CSR
adjacency, -1 marking unreachable targets.
"""

import heapq


def single_source_csr(n, indptr, nbrs, wts, src):
    dist = [-1] * n
    heap = [(0, src)]
    push = heapq.heappush
    pop = heapq.heappop
    while heap:
        d, v = pop(heap)
        if dist[v] != -1:
            continue
        dist[v] = d
        for i in range(indptr[v], indptr[v + 1]):
            u = nbrs[i]
            if dist[u] == -1:
                push(heap, (d + wts[i], u))
    return dist


def all_pairs_csr(n, indptr, nbrs, wts):
    return [single_source_csr(n, indptr, nbrs, wts, s) for s in range(n)]
