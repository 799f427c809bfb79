"""Exposure counting, network/trending classification and exposure curves.

A user's exposures are the hashtag tweets their friends posted strictly
before the user's own first use. Users with zero prior exposure are
assumed to have found the hashtag on the trending topics page. Template
authors are excluded from the classified population (their participation
is scripted) but their tweets still expose their followers.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datastore import CampaignDataset, TweetRecord
from .errors import NoFollowers, UserNotInDataset

NETWORK_EXPOSED = "network_exposed"
TRENDING_EXPOSED = "trending_exposed"


@dataclass(frozen=True)
class ExposureRecord:
    user_id: int
    first_use_ts: int
    template_exposures: int
    normal_exposures: int
    classification: str

    @property
    def total_exposures(self) -> int:
        return self.template_exposures + self.normal_exposures


def first_uses(dataset: CampaignDataset) -> dict[int, TweetRecord]:
    """Each user's earliest tweet in the hashtag (tweets are time sorted)."""
    first: dict[int, TweetRecord] = {}
    for t in dataset.tweets:
        if t.user_id not in first:
            first[t.user_id] = t
    return first


class _AuthorIndex:
    """Per author: sorted (ts, id) keys plus a template prefix count."""

    def __init__(self, dataset: CampaignDataset):
        keys: dict[int, list[tuple[int, int]]] = {}
        prefix: dict[int, list[int]] = {}
        for t in dataset.tweets:
            ks = keys.setdefault(t.user_id, [])
            ps = prefix.setdefault(t.user_id, [0])
            ks.append(t.sort_key())
            ps.append(ps[-1] + (1 if dataset.effective_template(t) else 0))
        self.keys = keys
        self.prefix = prefix

    def counts_before(self, author: int, key: tuple[int, int]) -> tuple[int, int]:
        """(template, normal) tweet counts of `author` strictly before key."""
        ks = self.keys.get(author)
        if not ks:
            return (0, 0)
        pos = bisect_left(ks, key)
        template = self.prefix[author][pos]
        return (template, pos - template)


def _exposure_record(
    user_id: int,
    first: TweetRecord,
    dataset: CampaignDataset,
    index: _AuthorIndex,
) -> ExposureRecord:
    key = first.sort_key()
    template = 0
    normal = 0
    for friend in dataset.graph.friends_of(user_id):
        t, n = index.counts_before(friend, key)
        template += t
        normal += n
    classification = (
        TRENDING_EXPOSED if template + normal == 0 else NETWORK_EXPOSED
    )
    return ExposureRecord(user_id, first.ts, template, normal, classification)


def count_exposures(user_id: int, dataset: CampaignDataset) -> ExposureRecord:
    firsts = first_uses(dataset)
    if user_id not in firsts:
        raise UserNotInDataset(user_id)
    return _exposure_record(user_id, firsts[user_id], dataset, _AuthorIndex(dataset))


def exposure_records(dataset: CampaignDataset) -> list[ExposureRecord]:
    """Exposure records for the classified population: every first-time
    user except template authors."""
    participants = dataset.participants()
    index = _AuthorIndex(dataset)
    out = []
    for user_id, first in first_uses(dataset).items():
        if user_id in participants:
            continue
        out.append(_exposure_record(user_id, first, dataset, index))
    out.sort(key=lambda r: r.user_id)
    return out


def classify_users(dataset: CampaignDataset) -> dict[int, str]:
    return {r.user_id: r.classification for r in exposure_records(dataset)}


def exposure_ecdf(
    records: Sequence[ExposureRecord], channel: str = "both"
) -> list[tuple[int, float]]:
    """ECDF of prior exposures at first use over the classified users.

    channel selects which exposures count: 'template', 'normal' or 'both'.
    The result is a nondecreasing step function whose last value is 1.0.
    """
    if channel == "template":
        values = [r.template_exposures for r in records]
    elif channel == "normal":
        values = [r.normal_exposures for r in records]
    elif channel == "both":
        values = [r.total_exposures for r in records]
    else:
        raise ValueError(f"unknown channel {channel!r}")
    if not values:
        return []
    values.sort()
    n = len(values)
    out: list[tuple[int, float]] = []
    i = 0
    while i < n:
        j = i
        while j < n and values[j] == values[i]:
            j += 1
        out.append((values[i], j / n if j < n else 1.0))
        i = j
    return out


def ecdf_at(ecdf: Sequence[tuple[int, float]], x: int) -> float:
    value = 0.0
    for support, frac in ecdf:
        if support <= x:
            value = frac
        else:
            break
    return value


def single_exposure_fraction(records: Sequence[ExposureRecord]) -> float:
    """Fraction of classified users whose first use followed exactly one
    exposure; report-only sensitivity statistic."""
    if not records:
        return 0.0
    ones = sum(1 for r in records if r.total_exposures == 1)
    return ones / len(records)


def exposure_effectiveness(user_id: int, dataset: CampaignDataset) -> float:
    """Fraction of a user's followers whose first hashtag use comes
    strictly after the user's own first use."""
    firsts = first_uses(dataset)
    if user_id not in firsts:
        raise UserNotInDataset(user_id)
    followers = dataset.graph.followers_of(user_id)
    if not followers:
        raise NoFollowers(user_id)
    key = firsts[user_id].sort_key()
    converted = sum(
        1
        for f in followers
        if f in firsts and firsts[f].sort_key() > key
    )
    return converted / len(followers)


@dataclass
class EffectivenessSummary:
    mean_by_class: dict[str, float]
    n_by_class: dict[str, int]
    difference: float  # trending mean minus network mean
    p_value: float
    n_permutations: int
    no_follower_users: int


def effectiveness_by_user(
    dataset: CampaignDataset,
) -> tuple[dict[int, tuple[str, float]], int]:
    """Per classified user with followers: (classification, fraction).

    Users without followers are excluded and counted in the second slot.
    """
    out: dict[int, tuple[str, float]] = {}
    skipped = 0
    for rec in exposure_records(dataset):
        try:
            frac = exposure_effectiveness(rec.user_id, dataset)
        except NoFollowers:
            skipped += 1
            continue
        out[rec.user_id] = (rec.classification, frac)
    return out, skipped


def effectiveness_summary(
    dataset: CampaignDataset,
    n_permutations: int = 10000,
    seed: int = 20240601,
) -> EffectivenessSummary:
    """Group means plus a two-sided permutation test of their difference."""
    per_user, skipped = effectiveness_by_user(dataset)
    groups: dict[str, list[float]] = {NETWORK_EXPOSED: [], TRENDING_EXPOSED: []}
    for classification, frac in per_user.values():
        groups[classification].append(frac)
    means = {
        c: (float(np.mean(vs)) if vs else float("nan")) for c, vs in groups.items()
    }
    n_by_class = {c: len(vs) for c, vs in groups.items()}
    diff = means[TRENDING_EXPOSED] - means[NETWORK_EXPOSED]
    if not groups[NETWORK_EXPOSED] or not groups[TRENDING_EXPOSED]:
        return EffectivenessSummary(
            means, n_by_class, diff, float("nan"), 0, skipped
        )
    pooled = np.asarray(
        groups[TRENDING_EXPOSED] + groups[NETWORK_EXPOSED], dtype=np.float64
    )
    n_trend = len(groups[TRENDING_EXPOSED])
    rng = np.random.default_rng(seed)
    observed = abs(diff)
    hits = 0
    for _ in range(n_permutations):
        perm = rng.permutation(pooled)
        d = perm[:n_trend].mean() - perm[n_trend:].mean()
        if abs(d) >= observed - 1e-15:
            hits += 1
    p_value = (hits + 1) / (n_permutations + 1)
    return EffectivenessSummary(
        means, n_by_class, diff, p_value, n_permutations, skipped
    )
