# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled shortest-delay kernel: integer Dijkstra over a CSR adjacency.

Mirrors delayleader._purepaths exactly; -1 marks unreachable targets.
"""

from libc.stdlib cimport free, malloc


cdef struct HeapItem:
    long long key
    long long node


cdef inline void heap_push(HeapItem* heap, Py_ssize_t* size, long long key,
                           long long node) nogil:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    heap[i].key = key
    heap[i].node = node
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent].key <= heap[i].key:
            break
        heap[parent], heap[i] = heap[i], heap[parent]
        i = parent


cdef inline HeapItem heap_pop(HeapItem* heap, Py_ssize_t* size) nogil:
    cdef HeapItem top = heap[0]
    cdef Py_ssize_t i = 0, child
    size[0] -= 1
    heap[0] = heap[size[0]]
    while True:
        child = 2 * i + 1
        if child >= size[0]:
            break
        if child + 1 < size[0] and heap[child + 1].key < heap[child].key:
            child += 1
        if heap[i].key <= heap[child].key:
            break
        heap[i], heap[child] = heap[child], heap[i]
        i = child
    return top


cdef int _dijkstra(Py_ssize_t n, long long[::1] indptr, long long[::1] nbrs,
                   long long[::1] wts, Py_ssize_t src, long long* dist,
                   HeapItem* heap) nogil:
    cdef Py_ssize_t i, v, heap_size = 0
    cdef long long d, u
    cdef HeapItem item
    for i in range(n):
        dist[i] = -1
    heap_push(heap, &heap_size, 0, src)
    while heap_size > 0:
        item = heap_pop(heap, &heap_size)
        v = <Py_ssize_t>item.node
        if dist[v] != -1:
            continue
        d = item.key
        dist[v] = d
        for i in range(indptr[v], indptr[v + 1]):
            u = nbrs[i]
            if dist[<Py_ssize_t>u] == -1:
                heap_push(heap, &heap_size, d + wts[i], u)
    return 0


def single_source_csr(Py_ssize_t n, long long[::1] indptr, long long[::1] nbrs,
                      long long[::1] wts, Py_ssize_t src):
    cdef Py_ssize_t m = nbrs.shape[0] + 1
    cdef long long* dist = <long long*>malloc(n * sizeof(long long))
    cdef HeapItem* heap = <HeapItem*>malloc(m * sizeof(HeapItem))
    if dist == NULL or heap == NULL:
        free(dist); free(heap)
        raise MemoryError()
    try:
        _dijkstra(n, indptr, nbrs, wts, src, dist, heap)
        return [dist[i] for i in range(n)]
    finally:
        free(dist)
        free(heap)


def all_pairs_csr(Py_ssize_t n, long long[::1] indptr, long long[::1] nbrs,
                  long long[::1] wts):
    cdef Py_ssize_t m = nbrs.shape[0] + 1
    cdef Py_ssize_t s
    cdef long long* dist = <long long*>malloc(n * sizeof(long long))
    cdef HeapItem* heap = <HeapItem*>malloc(m * sizeof(HeapItem))
    if dist == NULL or heap == NULL:
        free(dist); free(heap)
        raise MemoryError()
    rows = []
    try:
        for s in range(n):
            _dijkstra(n, indptr, nbrs, wts, s, dist, heap)
            rows.append([dist[i] for i in range(n)])
        return rows
    finally:
        free(dist)
        free(heap)
