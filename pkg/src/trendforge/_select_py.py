"""Pure-numpy fallback for the top-k selection kernel.

Same contract as the compiled `_select.select_topk`: per row, pick the k
entries largest under (similarity desc, tweet_id asc), skipping the
excluded column, and return ids sorted ascending. Must stay exactly
equivalent; the test suite cross-checks both paths.
"""

from __future__ import annotations

import numpy as np


def _select_row(sims: np.ndarray, ids: np.ndarray, exclude: int, k: int) -> np.ndarray:
    if exclude >= 0:
        sims = sims.copy()
        sims[exclude] = -np.inf
    # k-th largest similarity is the cut; entries above it are all in,
    # entries equal to it are admitted in ascending id order
    part = np.argpartition(-sims, k - 1)[:k]
    cut = sims[part].min()
    above = ids[sims > cut]
    if len(above) == k:
        return np.sort(above)
    at_cut = np.sort(ids[sims == cut])
    return np.sort(np.concatenate([above, at_cut[: k - len(above)]]))


def select_topk(sims: np.ndarray, ids: np.ndarray, exclude: np.ndarray, k: int) -> np.ndarray:
    rows, n = sims.shape
    if k <= 0 or k > n - 1:
        raise ValueError("k must be in [1, n_candidates - 1]")
    out = np.empty((rows, k), dtype=np.int64)
    for r in range(rows):
        out[r] = _select_row(sims[r], ids, int(exclude[r]), k)
    return out
