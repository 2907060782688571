"""Shortest-delay backend selection: compiled kernel when present, else pure Python.

Set DELAYLEADER_PURE=1 to force the fallback (used by the benchmark and tests).
"""

from __future__ import annotations

import os

from delayleader.overlay import OverlayGraph

if os.environ.get("DELAYLEADER_PURE", "0") not in ("", "0"):
    from delayleader import _purepaths as _kernel

    BACKEND = "pure"
else:
    try:
        from delayleader import _fastpaths as _kernel  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from delayleader import _purepaths as _kernel  # type: ignore[no-redef]

        BACKEND = "pure"


def all_pairs_delays(g: OverlayGraph) -> dict[int, dict[int, int]]:
    """Exact shortest path delay between every node pair; -1 when unreachable."""
    n, ids, indptr, nbrs, wts = g.csr()
    rows = _kernel.all_pairs_csr(n, indptr, nbrs, wts)
    return {ids[s]: {ids[t]: rows[s][t] for t in range(n)} for s in range(n)}


def single_source_delays(g: OverlayGraph, src: int) -> dict[int, int]:
    n, ids, indptr, nbrs, wts = g.csr()
    row = _kernel.single_source_csr(n, indptr, nbrs, wts, ids.index(src))
    return {ids[t]: row[t] for t in range(n)}
