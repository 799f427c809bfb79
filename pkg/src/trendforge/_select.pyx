# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled top-k selection for the neighbor search hot loop.

Selects, per similarity row, the k entries largest under the ordering
(similarity desc, tweet_id asc), skipping one excluded position (the
query itself). Operates on precomputed float64 similarities so the
result is identical to the pure-numpy fallback by construction.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline bint _better(double sa, long ia, double sb, long ib) nogil:
    # strict "a ranks ahead of b" under (sim desc, id asc)
    if sa != sb:
        return sa > sb
    return ia < ib


cdef void _select_row(const double[::1] sims, const long[::1] ids,
                      Py_ssize_t exclude, Py_ssize_t k,
                      double* hsim, long* hid) nogil:
    # min-heap of the k best seen so far; root is the weakest kept entry.
    # The root is mirrored in locals so the common rejection path costs a
    # register compare instead of heap dereferences.
    cdef Py_ssize_t n = sims.shape[0]
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t i, pos, child, left, right
    cdef double s, ts, root_sim = 0.0
    cdef long d, td, root_id = 0
    for i in range(n):
        if i == exclude:
            continue
        s = sims[i]
        if count == k:
            if s < root_sim:
                continue
            d = ids[i]
            if s == root_sim and d > root_id:
                continue
            # replace the weakest and sift down
            hsim[0] = s
            hid[0] = d
            pos = 0
            while True:
                left = 2 * pos + 1
                right = left + 1
                child = pos
                if left < k and _better(hsim[pos], hid[pos], hsim[left], hid[left]):
                    child = left
                if right < k and _better(hsim[child], hid[child], hsim[right], hid[right]):
                    child = right
                if child == pos:
                    break
                ts = hsim[child]; hsim[child] = hsim[pos]; hsim[pos] = ts
                td = hid[child]; hid[child] = hid[pos]; hid[pos] = td
                pos = child
            root_sim = hsim[0]
            root_id = hid[0]
        else:
            # filling phase: sift up
            d = ids[i]
            pos = count
            hsim[pos] = s
            hid[pos] = d
            count += 1
            while pos > 0:
                child = (pos - 1) >> 1
                if _better(hsim[child], hid[child], hsim[pos], hid[pos]):
                    ts = hsim[child]; hsim[child] = hsim[pos]; hsim[pos] = ts
                    td = hid[child]; hid[child] = hid[pos]; hid[pos] = td
                    pos = child
                else:
                    break
            if count == k:
                root_sim = hsim[0]
                root_id = hid[0]


def select_topk(const double[:, ::1] sims, const long[::1] ids,
                const long[::1] exclude, Py_ssize_t k):
    """For each row of `sims`, the ids of the k best entries.

    `exclude[r]` is the column to skip in row r (-1 for none). Returns an
    int64 array of shape (rows, k) with each row sorted ascending by id.
    """
    cdef Py_ssize_t rows = sims.shape[0]
    cdef Py_ssize_t n = sims.shape[1]
    if k <= 0 or k > n - 1:
        raise ValueError("k must be in [1, n_candidates - 1]")
    out = np.empty((rows, k), dtype=np.int64)
    cdef long[:, ::1] out_view = out
    buf_sim = np.empty(k, dtype=np.float64)
    buf_id = np.empty(k, dtype=np.int64)
    cdef double[::1] hsim = buf_sim
    cdef long[::1] hid = buf_id
    cdef Py_ssize_t r, j
    for r in range(rows):
        _select_row(sims[r], ids, exclude[r], k, &hsim[0], &hid[0])
        for j in range(k):
            out_view[r, j] = hid[j]
    out.sort(axis=1)
    return out
