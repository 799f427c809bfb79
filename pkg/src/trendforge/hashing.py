"""Deterministic hashed character-trigram embedder.

Used as the test-scale stand-in for a neural sentence encoder. The vector
construction is a fixed cross-tool contract (the stand-alone exporter must
reproduce it bit for bit):

* trigrams are contiguous windows of 3 Unicode code points; a text shorter
  than 3 code points contributes itself as a single token
* each token is hashed with 64-bit FNV-1a over its UTF-8 bytes
* bucket = hash mod dim, sign = +1 if the hash is even else -1
* bucket counts are accumulated, then L2-normalized, then cast to float32

Counts are small integers, so the squared norm is exact in float64 no
matter how it is summed; the normalized float32 vector is therefore
identical across any conforming implementation.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .datastore import EmbeddingMatrix

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = 0xFFFFFFFFFFFFFFFF

DEFAULT_DIM = 256


def fnv1a64(data: bytes, seed: int = 0) -> int:
    h = (FNV_OFFSET ^ (seed & MASK64)) & MASK64
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def _tokens(text: str) -> Iterable[str]:
    if len(text) < 3:
        yield text
        return
    for i in range(len(text) - 2):
        yield text[i : i + 3]


def embed_text(text: str, dim: int = DEFAULT_DIM, seed: int = 0) -> np.ndarray:
    """Embed one non-empty text as a unit float32 vector."""
    if not text:
        raise ValueError("cannot embed empty text")
    counts = np.zeros(dim, dtype=np.float64)
    for token in _tokens(text):
        h = fnv1a64(token.encode("utf-8"), seed)
        sign = 1.0 if (h & 1) == 0 else -1.0
        counts[h % dim] += sign
    norm = np.sqrt(np.sum(counts * counts))
    if norm == 0.0:
        # all-cancelling signs; fall back to a deterministic one-hot
        h = fnv1a64(text.encode("utf-8"), seed)
        counts[h % dim] = 1.0
        norm = 1.0
    return (counts / norm).astype(np.float32)


def embed_corpus(
    items: Sequence[tuple[int, str]], dim: int = DEFAULT_DIM, seed: int = 0
) -> EmbeddingMatrix:
    """Embed (tweet_id, text) pairs into an EmbeddingMatrix."""
    return EmbeddingMatrix(dim, {i: embed_text(t, dim, seed) for i, t in items})
