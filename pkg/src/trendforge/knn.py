"""Exact cosine nearest-neighbor search over an embedding matrix.

Similarities are always computed as one float64 matrix product per query
chunk; only the top-k selection differs between the compiled kernel and
the numpy fallback, so both backends return identical neighbor sets.
"""

from __future__ import annotations

import numpy as np

from . import _select_py

try:
    from . import _select as _select_native
except ImportError:  # pragma: no cover - depends on the build
    _select_native = None

HAVE_NATIVE = _select_native is not None

_CHUNK = 64


def backend_name(native: bool | None = None) -> str:
    if native is None:
        native = HAVE_NATIVE
    return "native" if native else "python"


def _kernel(native: bool | None):
    if native is None:
        native = HAVE_NATIVE
    if native:
        if _select_native is None:
            raise RuntimeError("compiled selection kernel is not available")
        return _select_native.select_topk
    return _select_py.select_topk


def topk_cosine(
    matrix: np.ndarray,
    ids: np.ndarray,
    query_rows: np.ndarray,
    k: int,
    native: bool | None = None,
) -> np.ndarray:
    """k nearest neighbors (by dot product of unit vectors) per query row.

    matrix: (n, d) float32/float64 unit rows; ids: (n,) unique u64 ids;
    query_rows: indices into `matrix` to use as queries. The query row is
    excluded from its own neighborhood. Returns (len(query_rows), k) ids
    (uint64), each row ascending. Ties at the boundary go to the smaller
    id. The kernels tie-break on id *ranks* so the full u64 range is safe.
    """
    select = _kernel(native)
    mat = np.ascontiguousarray(matrix, dtype=np.float64)
    ids = np.asarray(ids, dtype=np.uint64)
    ids_sorted = np.sort(ids)
    ranks = np.ascontiguousarray(
        np.searchsorted(ids_sorted, ids), dtype=np.int64
    )
    query_rows = np.asarray(query_rows, dtype=np.int64)
    out = np.empty((len(query_rows), k), dtype=np.uint64)
    for start in range(0, len(query_rows), _CHUNK):
        rows = query_rows[start : start + _CHUNK]
        sims = np.ascontiguousarray(mat[rows] @ mat.T)
        picked = select(sims, ranks, rows, k)
        out[start : start + len(rows)] = ids_sorted[picked]
    return out
