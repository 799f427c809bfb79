"""Template Penetration Rate over embedding neighborhoods.

Pipeline: clean tweet text, collapse duplicates, look up the k nearest
neighbors of every unique tweet (k = the nearest 1% of unique tweets by
default), and report which fraction of each neighborhood is template
content, raw and normalized by the hashtag-wide template share.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datastore import CampaignDataset, EmbeddingMatrix
from .errors import (
    DegenerateTemplateFraction,
    HashtagTooSmall,
    MissingEmbedding,
    NotEnoughTemplates,
)
from .knn import topk_cosine

DEFAULT_MIN_UNIQUE = 3000
DEFAULT_NEIGHBORHOOD_BP = 100  # basis points: 100 = the nearest 1%


@dataclass(frozen=True)
class TprConfig:
    min_unique: int = DEFAULT_MIN_UNIQUE
    neighborhood_bp: int = DEFAULT_NEIGHBORHOOD_BP
    native: bool | None = None  # None = use the compiled kernel if built


@dataclass(frozen=True)
class CleanTweet:
    tweet_id: int  # smallest id of its duplicate class
    cleaned_text: str
    is_template: bool  # true if any duplicate-class member is a template


@dataclass(frozen=True)
class TprResult:
    tweet_id: int
    k: int
    raw_tpr: float
    normalized_tpr: float | None
    is_template: bool


def clean_text(raw: str) -> str | None:
    """Normalize tweet text; None means dropped (empty after cleaning).

    Steps, in order: NFC normalization; drop url tokens (http://, https://,
    www.); drop @mentions and #hashtags; drop one leading literal RT token;
    lowercase; collapse whitespace.
    """
    text = unicodedata.normalize("NFC", raw)
    tokens = [
        t
        for t in text.split()
        if not t.startswith(("http://", "https://", "www.", "@", "#"))
    ]
    if tokens and tokens[0] == "RT":
        tokens = tokens[1:]
    cleaned = " ".join(tokens).lower()
    cleaned = " ".join(cleaned.split())
    return cleaned or None


def clean_tweets(dataset: CampaignDataset) -> tuple[list[CleanTweet], int]:
    """Unique cleaned originals of a hashtag, plus the dropped-empty count.

    Retweets never enter: their text is the root's and would only duplicate
    it. Duplicate classes keep the smallest tweet_id and are template if
    any member is.
    """
    classes: dict[str, tuple[int, bool]] = {}
    dropped = 0
    for t in dataset.originals():
        cleaned = clean_text(t.text)
        if cleaned is None:
            dropped += 1
            continue
        if cleaned in classes:
            rep, is_template = classes[cleaned]
            classes[cleaned] = (min(rep, t.tweet_id), is_template or t.is_template)
        else:
            classes[cleaned] = (t.tweet_id, t.is_template)
    unique = [
        CleanTweet(rep, text, is_template)
        for text, (rep, is_template) in classes.items()
    ]
    unique.sort(key=lambda c: c.tweet_id)
    return unique, dropped


def neighborhood_size(n_unique: int, bp: int = DEFAULT_NEIGHBORHOOD_BP) -> int:
    # exact integer half-up of n_unique * bp / 10000, floor 1
    return max(1, (n_unique * bp + 5000) // 10000)


def _neighbor_matrix(
    tweets: Sequence[CleanTweet],
    embeddings: EmbeddingMatrix,
    config: TprConfig,
) -> tuple[np.ndarray, np.ndarray, int]:
    n = len(tweets)
    if n < config.min_unique:
        raise HashtagTooSmall(n, config.min_unique)
    for c in tweets:
        if c.tweet_id not in embeddings:
            raise MissingEmbedding(c.tweet_id)
    k = neighborhood_size(n, config.neighborhood_bp)
    k = min(k, n - 1)
    ids = np.asarray([c.tweet_id for c in tweets], dtype=np.uint64)
    rows = np.asarray([embeddings.row_index(c.tweet_id) for c in tweets], dtype=np.int64)
    sub = embeddings.matrix[rows]
    # within the sub-matrix the query position equals its own index
    neighbors = topk_cosine(sub, ids, np.arange(n), k, native=config.native)
    return ids, neighbors, k


def knn_neighborhood(
    embeddings: EmbeddingMatrix,
    tweets: Sequence[CleanTweet],
    query: int,
    config: TprConfig = TprConfig(),
) -> set[int]:
    """Neighbor set of one tweet; mainly a convenience over compute_tpr."""
    ids, neighbors, _ = _neighbor_matrix(tweets, embeddings, config)
    pos = int(np.nonzero(ids == query)[0][0])
    return set(int(i) for i in neighbors[pos])


def compute_tpr(
    tweets: Sequence[CleanTweet],
    embeddings: EmbeddingMatrix,
    config: TprConfig = TprConfig(),
) -> list[TprResult]:
    """Raw and normalized TPR for every unique tweet of a hashtag.

    normalized_tpr is raw_tpr divided by the hashtag-wide template share,
    so 1 means the neighborhood mirrors the hashtag's template/normal mix.
    It is None for every tweet when the hashtag has no templates at all.
    """
    ids, neighbors, k = _neighbor_matrix(tweets, embeddings, config)
    is_template = np.asarray([c.is_template for c in tweets], dtype=bool)
    template_ids = set(int(i) for i in ids[is_template])
    rho = float(is_template.sum()) / len(tweets)

    template_neighbor_total = 0
    in_degree_of_templates = 0
    results = []
    for pos, c in enumerate(tweets):
        hits = sum(1 for nid in neighbors[pos] if int(nid) in template_ids)
        template_neighbor_total += hits
        raw = hits / k
        normalized = raw / rho if rho > 0 else None
        results.append(TprResult(c.tweet_id, k, raw, normalized, c.is_template))
    # double-count identity: summing template neighbors over queries must
    # equal summing the templates' in-degrees in the k-NN digraph
    flat = neighbors.ravel()
    in_degree_of_templates = 0
    if template_ids:
        template_arr = np.asarray(sorted(template_ids), dtype=np.uint64)
        in_degree_of_templates = int(np.isin(flat, template_arr).sum())
    if template_neighbor_total != in_degree_of_templates:
        raise AssertionError(
            "neighbor accounting mismatch: "
            f"{template_neighbor_total} != {in_degree_of_templates}"
        )
    if rho == 0.0 and is_template.any():
        raise AssertionError("template share inconsistent")
    return results


def require_normalized(results: Sequence[TprResult]) -> None:
    if any(r.normalized_tpr is None for r in results):
        raise DegenerateTemplateFraction(
            "hashtag-wide template fraction is zero; normalized TPR undefined"
        )


def tpr_ecdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """ECDF support points (x, F(x)) with F reaching exactly 1.0."""
    if not values:
        return []
    xs = np.sort(np.asarray(values, dtype=np.float64))
    support, counts = np.unique(xs, return_counts=True)
    cum = np.cumsum(counts)
    frac = cum / len(xs)
    frac[-1] = 1.0
    return [(float(x), float(f)) for x, f in zip(support, frac)]


def tpr_distribution(
    results: Sequence[TprResult],
) -> dict[str, list[tuple[float, float]]]:
    """Per tweet-type ECDF of normalized TPR.

    Returns keys 'template' and 'normal'; a key is absent when that side
    has no tweets (callers flag it).
    """
    out: dict[str, list[tuple[float, float]]] = {}
    for label, flag in (("template", True), ("normal", False)):
        vals = [
            r.normalized_tpr
            for r in results
            if r.is_template == flag and r.normalized_tpr is not None
        ]
        if vals:
            out[label] = tpr_ecdf(vals)
    return out


def low_tpr_exemplars(results: Sequence[TprResult], m: int) -> list[TprResult]:
    """The m template tweets with the least template-heavy neighborhoods."""
    templates = [r for r in results if r.is_template]
    if len(templates) < m:
        raise NotEnoughTemplates(
            f"asked for {m} exemplars but only {len(templates)} templates"
        )
    templates.sort(key=lambda r: (r.raw_tpr, r.tweet_id))
    return templates[:m]
