"""Synthetic campaign generator with known ground truth.

Realizes the three adoption channels the analysis distinguishes: scripted
template posting by participants, diffusion through the follower network
(each exposure converts independently), and trending-page arrivals drawn
per five-minute bin from a Poisson whose mean jumps by exp(lambda_true)
while the hashtag trends. Everything downstream (cascades, exposure
classes, the panel model) can be checked against the generator's labels.

All randomness flows from one seeded generator in a fixed draw order:
graph wiring, participant selection, template posting times, the
chronological event loop (follower conversion draws in sorted-follower
order), then embeddings per distinct text in first-appearance order.
Identical config and seed give byte-identical output files.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .datastore import (
    ORIGINAL,
    RETWEET,
    TOP10,
    TOP50,
    CampaignDataset,
    EmbeddingMatrix,
    FollowerGraph,
    TrendingTimeline,
    TweetRecord,
    write_embeddings,
    write_graph,
    write_trending,
    write_tweets,
)
from .errors import ConfigInvalid

CHANNEL_NETWORK = "network"
CHANNEL_TRENDING = "trending"
CHANNEL_ASTROTURF = "astroturf"

# Calibrated so the exposure curves over classified adopters land on the
# reference anchors: about 45% of adopters see no template tweet before
# first use, and about 2.5% see nothing at all through the network.
# Calibrated empirically; the values hold for this exact config and seed.
EXPOSURE_CURVE_PARAMS = dict(
    seed=84,
    n_users=6000,
    n_participants=22,
    participant_selection="top_degree",
    adoption_prob=0.08,
    base_trending_rate=0.35,
    retweet_prob=0.0,
    window_pre_s=7200,
    window_post_s=3600,
    trending_duration_s=7200,
    mean_adoption_delay_s=500.0,
)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 1
    n_users: int = 2000
    edges_per_user: int = 6
    n_participants: int = 40
    n_templates: int = 10
    adoption_prob: float = 0.02
    base_trending_rate: float = 2.0  # arrivals per bin when not trending
    lambda_true: float = 0.0
    trending_onset_ts: int = 1_000_000
    trending_duration_s: int = 7200
    uncertainty_s: int = 0
    retweet_prob: float = 0.3
    embedding_clusters: tuple[int, float, int] = (4, 40.0, 32)  # count, sep, dim
    hashtag: str = "simcampaign"
    campaign_lead_s: int = 900
    window_pre_s: int = 14400
    window_post_s: int = 3600
    mean_adoption_delay_s: float = 600.0
    participant_selection: str = "random"  # or "top_degree"
    reciprocal_prob: float = 0.25
    turkey_style: bool = False
    template_cascade_cap: int | None = None
    participant_retweet_prob: float = 0.0
    top10_onset_delay_s: int | None = None
    rho_true: float = 0.0  # extra log-boost while in the top 10
    bin_seconds: int = 300
    # id bases keep multi-campaign bundles collision free
    user_id_base: int = 1
    tweet_id_base: int = 1

    def validate(self) -> None:
        if not 0 <= self.seed <= 2**64 - 1:
            raise ConfigInvalid("seed must fit in 64 bits")
        probs = {
            "adoption_prob": self.adoption_prob,
            "retweet_prob": self.retweet_prob,
            "reciprocal_prob": self.reciprocal_prob,
            "participant_retweet_prob": self.participant_retweet_prob,
        }
        for name, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigInvalid(f"{name} must be in [0, 1], got {p}")
        if self.n_users <= 0:
            raise ConfigInvalid("n_users must be positive")
        if not 0 <= self.n_participants <= self.n_users:
            raise ConfigInvalid("need 0 <= n_participants <= n_users")
        if self.n_templates <= 0:
            raise ConfigInvalid("n_templates must be positive")
        if self.edges_per_user < 1:
            raise ConfigInvalid("edges_per_user must be >= 1")
        if self.base_trending_rate < 0:
            raise ConfigInvalid("base_trending_rate must be >= 0")
        count, separation, dim = self.embedding_clusters
        if count < 1:
            raise ConfigInvalid("embedding cluster count must be >= 1")
        if dim < 2:
            raise ConfigInvalid("embedding dim must be >= 2")
        if count > dim:
            raise ConfigInvalid("cluster count cannot exceed embedding dim")
        if separation < 0:
            raise ConfigInvalid("cluster separation must be >= 0")
        if self.trending_duration_s <= 0:
            raise ConfigInvalid("trending_duration_s must be positive")
        if self.campaign_lead_s <= 0 or self.campaign_lead_s > self.window_pre_s:
            raise ConfigInvalid("campaign_lead_s must be in (0, window_pre_s]")
        if self.bin_seconds <= 0:
            raise ConfigInvalid("bin_seconds must be positive")
        if self.participant_selection not in ("random", "top_degree"):
            raise ConfigInvalid(
                f"unknown participant_selection {self.participant_selection!r}"
            )


@dataclass
class GroundTruth:
    lambda_true: float
    onset_ts: int
    channels: dict[int, str]  # user_id -> network / trending / astroturf
    arrivals_skipped: int = 0

    def to_json(self) -> str:
        obj = {
            "lambda_true": self.lambda_true,
            "onset_ts": self.onset_ts,
            "arrivals_skipped": self.arrivals_skipped,
            "channels": {str(u): c for u, c in sorted(self.channels.items())},
        }
        return json.dumps(obj, indent=2, sort_keys=True)


@dataclass
class SimResult:
    dataset: CampaignDataset
    graph: FollowerGraph
    timeline: TrendingTimeline
    embeddings: EmbeddingMatrix
    ground_truth: GroundTruth


def _ba_edges(
    rng: np.random.Generator, users: Sequence[int], m: int, reciprocal_prob: float
) -> list[tuple[int, int]]:
    """Preferential-attachment follow edges: each new user follows m
    existing ones sampled by degree, optionally followed back."""
    n = len(users)
    edges: list[tuple[int, int]] = []
    if n < 2:
        return edges
    endpoints: list[int] = [0]
    for i in range(1, n):
        k = min(m, i)
        chosen: set[int] = set()
        while len(chosen) < k:
            j = int(endpoints[int(rng.integers(len(endpoints)))])
            if j == i or j in chosen:
                j = int(rng.integers(i))
                if j in chosen:
                    continue
            chosen.add(j)
        for j in sorted(chosen):
            edges.append((users[i], users[j]))
            endpoints.append(i)
            endpoints.append(j)
            if reciprocal_prob > 0 and rng.random() < reciprocal_prob:
                edges.append((users[j], users[i]))
                endpoints.append(i)
                endpoints.append(j)
    return edges


def generate_embeddings(
    config: SimConfig, items: Sequence[tuple[int, bool]], rng=None
) -> EmbeddingMatrix:
    """Planted-cluster unit vectors for (tweet_id, is_template) items.

    Templates go to cluster 0; other items are spread over the remaining
    clusters (or share cluster 0 when there is only one). Vectors are
    centroid * separation + standard Gaussian noise, normalized.
    """
    config.validate()
    count, separation, dim = config.embedding_clusters
    if rng is None:
        rng = np.random.default_rng(config.seed)
    rows = {}
    for tweet_id, is_template in items:
        if is_template or count == 1:
            cluster = 0
        else:
            cluster = 1 + int(rng.integers(count - 1))
        vec = rng.standard_normal(dim)
        vec[cluster] += separation
        vec /= np.linalg.norm(vec)
        rows[tweet_id] = vec.astype(np.float32)
    return EmbeddingMatrix(dim, rows)


# event kinds, ordered by (ts, seq) in one heap
_EV_POST = 0  # scheduled tweet by a known user
_EV_ARRIVAL = 1  # trending-page arrival; user drawn from the eligible pool


class _Pool:
    """Uniform sampling with O(1) removal (swap-with-last)."""

    def __init__(self, users: Sequence[int]):
        self.items = list(users)
        self.pos = {u: i for i, u in enumerate(self.items)}

    def __len__(self):
        return len(self.items)

    def __contains__(self, user):
        return user in self.pos

    def remove(self, user):
        i = self.pos.pop(user, None)
        if i is None:
            return
        last = self.items.pop()
        if last != user:
            self.items[i] = last
            self.pos[last] = i

    def sample(self, rng: np.random.Generator) -> int:
        return self.items[int(rng.integers(len(self.items)))]


def build_graph(config: SimConfig) -> FollowerGraph:
    """Just the follower graph of a config (campaigns can share one)."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    base = config.user_id_base
    all_users = list(range(base, base + config.n_users))
    if config.turkey_style:
        wired = all_users[: config.n_users - config.n_participants]
    else:
        wired = all_users
    return FollowerGraph(
        _ba_edges(rng, wired, config.edges_per_user, config.reciprocal_prob)
    )


def generate(config: SimConfig, graph: FollowerGraph | None = None) -> SimResult:
    """Generate one campaign: graph, tweets, timeline, embeddings, truth.

    A prebuilt `graph` (from build_graph, same n_users and user_id_base)
    lets several campaigns share one follower network, as the real
    datasets do. The eligible pool for trending arrivals is finite; when
    it runs dry, arrivals are dropped and counted in
    ground_truth.arrivals_skipped, and the arrival process no longer
    follows its nominal mean. Validation configs should keep that at 0.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    base = config.user_id_base
    all_users = list(range(base, base + config.n_users))

    if config.turkey_style:
        participants = all_users[config.n_users - config.n_participants :]
        wired = all_users[: config.n_users - config.n_participants]
    else:
        participants = []
        wired = all_users
    if graph is None:
        edges = _ba_edges(rng, wired, config.edges_per_user,
                          config.reciprocal_prob)
        graph = FollowerGraph(edges)
    else:
        # distinct stream: the graph draws were consumed elsewhere
        rng = np.random.default_rng(config.seed + (1 << 32))
    if not config.turkey_style and config.n_participants:
        if config.participant_selection == "top_degree":
            by_followers = sorted(
                wired, key=lambda u: (-len(graph.followers_of(u)), u)
            )
            participants = by_followers[: config.n_participants]
        else:
            idx = rng.choice(
                len(wired), size=config.n_participants, replace=False
            )
            participants = sorted(wired[int(i)] for i in idx)
    participants = sorted(participants)
    participant_set = set(participants)

    onset = config.trending_onset_ts
    sim_start = onset - config.window_pre_s
    sim_end = onset + config.trending_duration_s + config.window_post_s

    heap: list[tuple[int, int, int, tuple]] = []
    seq = 0

    def push(ts: int, kind: int, payload: tuple):
        nonlocal seq
        heapq.heappush(heap, (ts, seq, kind, payload))
        seq += 1

    template_texts = [
        f"template message {j} proudly supports the campaign cause"
        for j in range(config.n_templates)
    ]
    template_post_ts: dict[int, int] = {}
    for user in participants:
        ts = onset - config.campaign_lead_s + int(
            rng.integers(config.campaign_lead_s)
        )
        text = template_texts[int(rng.integers(config.n_templates))]
        template_post_ts[user] = ts
        push(ts, _EV_POST, (user, "template", text, None))

    # scripted retweets of templates by fellow participants, scheduled so
    # they flow through the same exposure semantics as any other tweet
    if config.participant_retweet_prob > 0 and len(participants) > 1:
        for user in participants:
            if rng.random() >= config.participant_retweet_prob:
                continue
            others = [p for p in participants if p != user]
            author = others[int(rng.integers(len(others)))]
            ts = template_post_ts[author] + 1 + int(rng.integers(120))
            push(ts, _EV_POST, (user, "scripted_rt", "", author))

    # trending-page arrivals per bin; mean jumps by exp(lambda) when
    # trending, with an extra exp(rho) while in the top 10
    trend_lo, trend_hi = onset, onset + config.trending_duration_s
    if config.top10_onset_delay_s is not None:
        top10_lo = trend_lo + config.top10_onset_delay_s
    else:
        top10_lo = trend_hi  # never reached
    for lo in range(sim_start, sim_end, config.bin_seconds):
        treated = trend_lo <= lo < trend_hi
        boosted = top10_lo <= lo < trend_hi
        log_rate = (config.lambda_true if treated else 0.0) + (
            config.rho_true if boosted else 0.0
        )
        mean = config.base_trending_rate * np.exp(log_rate)
        count = int(rng.poisson(mean))
        if count == 0:
            continue
        offsets = sorted(int(o) for o in rng.integers(config.bin_seconds, size=count))
        for off in offsets:
            push(lo + off, _EV_ARRIVAL, ())

    pool = _Pool([u for u in all_users if u not in participant_set])
    adopted: set[int] = set()
    scheduled: set[int] = set()
    channels: dict[int, str] = {}
    tweets: list[TweetRecord] = []
    by_id: dict[int, TweetRecord] = {}
    template_tweet_of: dict[int, int] = {}  # participant -> template tweet id
    retweet_counts: dict[int, int] = {}
    arrivals_skipped = 0
    next_id = config.tweet_id_base
    normal_counter = 0

    def post(ts: int, user: int, kind: str, text: str, root_id) -> TweetRecord:
        nonlocal next_id
        rec = TweetRecord(
            tweet_id=next_id,
            user_id=user,
            ts=ts,
            hashtag=config.hashtag,
            kind=RETWEET if root_id is not None else ORIGINAL,
            root_id=root_id,
            text=text,
            is_template=(kind == "template"),
        )
        next_id += 1
        tweets.append(rec)
        by_id[rec.tweet_id] = rec
        if root_id is not None:
            retweet_counts[root_id] = retweet_counts.get(root_id, 0) + 1
        pool.remove(user)
        # expose followers; each draw may convert them
        for follower in sorted(graph.followers_of(user)):
            pool.remove(follower)
            if (
                follower in participant_set
                or follower in adopted
                or follower in scheduled
            ):
                continue
            if rng.random() < config.adoption_prob:
                delay = 1 + int(rng.exponential(config.mean_adoption_delay_s))
                when = ts + delay
                if when >= sim_end:
                    continue
                scheduled.add(follower)
                push(when, _EV_POST, (follower, "adopt", "", rec.tweet_id))
        return rec

    while heap:
        ts, _, kind, payload = heapq.heappop(heap)
        if ts >= sim_end:
            continue
        if kind == _EV_ARRIVAL:
            if len(pool) == 0:
                arrivals_skipped += 1
                continue
            user = pool.sample(rng)
            normal_counter += 1
            channels[user] = CHANNEL_TRENDING
            adopted.add(user)
            post(ts, user, "normal",
                 f"organic reaction {normal_counter} about the campaign cause",
                 None)
            continue
        user, post_kind, text, extra = payload
        if post_kind == "template":
            channels[user] = CHANNEL_ASTROTURF
            adopted.add(user)
            rec = post(ts, user, "template", text, None)
            template_tweet_of[user] = rec.tweet_id
        elif post_kind == "scripted_rt":
            root_id = template_tweet_of.get(extra)
            if root_id is not None:
                post(ts, user, "retweet", "", root_id)
        else:  # adopt
            scheduled.discard(user)
            if user in adopted:
                continue
            adopted.add(user)
            channels[user] = CHANNEL_NETWORK
            exposing = by_id[extra]
            root = exposing if exposing.root_id is None else by_id[exposing.root_id]
            cap = config.template_cascade_cap
            can_retweet = not (
                root.is_template
                and cap is not None
                and retweet_counts.get(root.tweet_id, 0) >= cap
            )
            if can_retweet and rng.random() < config.retweet_prob:
                post(ts, user, "retweet", "", root.tweet_id)
            else:
                normal_counter += 1
                post(ts, user, "normal",
                     f"organic reaction {normal_counter} about the campaign cause",
                     None)

    tweets.sort(key=TweetRecord.sort_key)

    intervals: list[tuple[int, int, str]] = [(trend_lo, trend_hi, TOP50)]
    if config.top10_onset_delay_s is not None:
        t10_lo = trend_lo + config.top10_onset_delay_s
        if not trend_lo <= t10_lo < trend_hi:
            raise ConfigInvalid("top10 onset delay outside the trending window")
        intervals.append((t10_lo, trend_hi, TOP10))
    timeline = TrendingTimeline(
        config.hashtag, tuple(intervals), config.uncertainty_s
    )

    # one vector per distinct text, shared by exact duplicates
    text_first: dict[str, tuple[int, bool]] = {}
    for t in tweets:
        if t.is_retweet:
            continue
        if t.text not in text_first:
            text_first[t.text] = (t.tweet_id, t.is_template)
        else:
            rep, flag = text_first[t.text]
            text_first[t.text] = (rep, flag or t.is_template)
    items = sorted(text_first.values())
    reps = generate_embeddings(config, items, rng)
    rows = {}
    rep_of_text = {text: rep for text, (rep, _) in text_first.items()}
    for t in tweets:
        if not t.is_retweet:
            rows[t.tweet_id] = reps.vector(rep_of_text[t.text])
    embeddings = EmbeddingMatrix(reps.dim, rows)

    dataset = CampaignDataset(config.hashtag, tuple(tweets), graph, timeline)
    truth = GroundTruth(
        lambda_true=config.lambda_true,
        onset_ts=onset,
        channels=channels,
        arrivals_skipped=arrivals_skipped,
    )
    return SimResult(dataset, graph, timeline, embeddings, truth)


def generate_many(
    config: SimConfig, n_hashtags: int, share_graph: bool = True
) -> list[SimResult]:
    """Campaigns with derived seeds (seed + index).

    By default all campaigns share one follower graph, the way the real
    datasets do; with share_graph=False each builds its own and user ids
    get disjoint ranges so a merged bundle stays consistent. Tweet ids
    are always disjoint across campaigns.
    """
    shared = build_graph(config) if share_graph and n_hashtags > 0 else None
    results = []
    for i in range(n_hashtags):
        sub = replace(
            config,
            seed=config.seed + i,
            hashtag=f"{config.hashtag}{i:03d}" if n_hashtags > 1 else config.hashtag,
            user_id_base=(config.user_id_base if share_graph
                          else config.user_id_base + i * (1 << 24)),
            tweet_id_base=config.tweet_id_base + i * (1 << 32),
        )
        results.append(generate(sub, graph=shared))
    return results


def write_bundle(results: Sequence[SimResult], directory) -> None:
    """Emit the datastore file formats plus ground_truth.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tweets = [t for r in results for t in r.dataset.tweets]
    tweets.sort(key=TweetRecord.sort_key)
    write_tweets(tweets, directory / "tweets.jsonl")

    edges = set()
    for r in results:
        edges.update(r.graph.edges())
    write_graph(FollowerGraph(edges), directory / "graph.csv")
    write_trending([r.timeline for r in results], directory / "trending.csv")

    dim = results[0].embeddings.dim
    rows = {}
    for r in results:
        for tweet_id in r.embeddings.ids:
            rows[int(tweet_id)] = r.embeddings.vector(int(tweet_id))
    write_embeddings(EmbeddingMatrix(dim, rows), directory / "embeddings.bin")

    truth = {
        "lambda_true": results[0].ground_truth.lambda_true,
        "hashtags": {
            r.dataset.hashtag: {
                "lambda_true": r.ground_truth.lambda_true,
                "onset_ts": r.ground_truth.onset_ts,
                "arrivals_skipped": r.ground_truth.arrivals_skipped,
                "channels": {
                    str(u): c for u, c in sorted(r.ground_truth.channels.items())
                },
            }
            for r in results
        },
    }
    with open(directory / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
