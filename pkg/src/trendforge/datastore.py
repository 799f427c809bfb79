"""Canonical domain types and the file formats that feed them.

A dataset bundle is a directory holding:

* ``tweets.jsonl``    one JSON object per line (may mix hashtags)
* ``graph.csv``       header-less ``follower_id,followee_id`` rows
* ``trending.csv``    ``hashtag,start_ts,end_ts,rank_bucket,uncertainty_s``
* ``embeddings.bin``  binary: ``EMB1`` magic, u32-LE dim, u64-LE count,
                      then (u64-LE tweet_id, dim f32-LE floats) records

All loading is single threaded; everything returned is immutable in
practice and safe to share across threads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BadMagic,
    DanglingRetweetRoot,
    DatasetInvariantError,
    DimMismatch,
    DuplicateTweetId,
    MalformedLine,
    NonUnitVector,
)

ORIGINAL = "original"
RETWEET = "retweet"

TOP50 = "top50"
TOP10 = "top10"

U64_MAX = 2**64 - 1

UNIT_NORM_TOL = 1e-4


@dataclass(frozen=True)
class TweetRecord:
    """One tweet event, original or retweet."""

    tweet_id: int
    user_id: int
    ts: int
    hashtag: str
    kind: str  # ORIGINAL or RETWEET
    root_id: int | None
    text: str
    is_template: bool

    @property
    def is_retweet(self) -> bool:
        return self.kind == RETWEET

    def sort_key(self) -> tuple[int, int]:
        return (self.ts, self.tweet_id)


class FollowerGraph:
    """Directed follow relation.

    An edge (follower, followee) means `follower` follows `followee`.
    A user's friends are the accounts they follow (whose tweets they see);
    their followers are the accounts following them.
    """

    def __init__(self, edges: Iterable[tuple[int, int]]):
        friends: dict[int, set[int]] = {}
        followers: dict[int, set[int]] = {}
        n_edges = 0
        for follower, followee in edges:
            if follower == followee:
                continue
            out = friends.setdefault(follower, set())
            if followee in out:
                continue
            out.add(followee)
            followers.setdefault(followee, set()).add(follower)
            n_edges += 1
        self._friends = friends
        self._followers = followers
        self.n_edges = n_edges

    def friends_of(self, user_id: int) -> frozenset[int]:
        return frozenset(self._friends.get(user_id, ()))

    def followers_of(self, user_id: int) -> frozenset[int]:
        return frozenset(self._followers.get(user_id, ()))

    def follows(self, follower: int, followee: int) -> bool:
        return followee in self._friends.get(follower, ())

    def edges(self) -> Iterable[tuple[int, int]]:
        for follower, out in self._friends.items():
            for followee in out:
                yield (follower, followee)

    def __eq__(self, other):
        return isinstance(other, FollowerGraph) and self._friends == other._friends

    def __len__(self):
        return self.n_edges


@dataclass(frozen=True)
class TrendingTimeline:
    """Per-hashtag trending intervals, split by rank bucket.

    ``uncertainty_s`` is the treatment-time uncertainty: 0 for 5-minute
    granularity trending data, 3600 for hourly data.
    """

    hashtag: str
    intervals: tuple[tuple[int, int, str], ...]  # (start_ts, end_ts, bucket)
    uncertainty_s: int

    def __post_init__(self):
        for start, end, bucket in self.intervals:
            if start >= end:
                raise DatasetInvariantError(
                    f"{self.hashtag}: trending interval [{start}, {end}) is empty"
                )
            if bucket not in (TOP50, TOP10):
                raise DatasetInvariantError(
                    f"{self.hashtag}: unknown rank bucket {bucket!r}"
                )
        for bucket in (TOP50, TOP10):
            spans = sorted(
                (s, e) for s, e, b in self.intervals if b == bucket
            )
            for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
                if s2 < e1:
                    raise DatasetInvariantError(
                        f"{self.hashtag}: overlapping {bucket} intervals"
                    )
        top50 = self.bucket_spans(TOP50)
        for s, e in self.bucket_spans(TOP10):
            if not any(s >= s50 and e <= e50 for s50, e50 in top50):
                raise DatasetInvariantError(
                    f"{self.hashtag}: top10 interval [{s}, {e}) not contained "
                    f"in any top50 interval"
                )

    def bucket_spans(self, bucket: str) -> list[tuple[int, int]]:
        return sorted((s, e) for s, e, b in self.intervals if b == bucket)

    def has_top10(self) -> bool:
        return any(b == TOP10 for _, _, b in self.intervals)

    def onset_ts(self) -> int | None:
        spans = self.bucket_spans(TOP50)
        return spans[0][0] if spans else None


@dataclass(frozen=True)
class CampaignDataset:
    """All tweets of one hashtag plus the graph and trending context."""

    hashtag: str
    tweets: tuple[TweetRecord, ...]
    graph: FollowerGraph
    timeline: TrendingTimeline | None = None

    def __post_init__(self):
        by_id = {}
        for t in self.tweets:
            if t.hashtag != self.hashtag:
                raise DatasetInvariantError(
                    f"tweet {t.tweet_id} belongs to {t.hashtag!r}, "
                    f"not {self.hashtag!r}"
                )
            if t.tweet_id in by_id:
                raise DuplicateTweetId(t.tweet_id)
            by_id[t.tweet_id] = t
        keys = [t.sort_key() for t in self.tweets]
        if keys != sorted(keys):
            raise DatasetInvariantError("tweets not sorted by (ts, tweet_id)")
        for t in self.tweets:
            if not t.is_retweet:
                continue
            root = by_id.get(t.root_id)
            if root is None or root.is_retweet:
                raise DanglingRetweetRoot(t.tweet_id, t.root_id)
            if not root.sort_key() < t.sort_key():
                raise DatasetInvariantError(
                    f"retweet {t.tweet_id} does not come after its root"
                )
        object.__setattr__(self, "_by_id", by_id)

    def tweet(self, tweet_id: int) -> TweetRecord:
        return self._by_id[tweet_id]

    def effective_template(self, t: TweetRecord) -> bool:
        """Template flag a reader of the tweet sees: a retweet shows its
        root's content, so it carries the root's flag."""
        if t.is_retweet:
            return self._by_id[t.root_id].is_template
        return t.is_template

    def originals(self) -> list[TweetRecord]:
        return [t for t in self.tweets if not t.is_retweet]

    def participants(self) -> frozenset[int]:
        """Users who authored at least one template tweet in this hashtag."""
        return frozenset(
            t.user_id for t in self.tweets if not t.is_retweet and t.is_template
        )


class EmbeddingMatrix:
    """tweet_id -> unit vector, all rows the same dimension (float32)."""

    def __init__(self, dim: int, rows: Mapping[int, np.ndarray]):
        if dim <= 0:
            raise DatasetInvariantError("embedding dim must be positive")
        self.dim = dim
        ids = sorted(rows)
        mat = np.empty((len(ids), dim), dtype=np.float32)
        for i, tweet_id in enumerate(ids):
            vec = np.asarray(rows[tweet_id], dtype=np.float32)
            if vec.shape != (dim,):
                raise DimMismatch(
                    f"vector for tweet {tweet_id} has shape {vec.shape}"
                )
            mat[i] = vec
        norms = np.linalg.norm(mat.astype(np.float64), axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise NonUnitVector(ids[i], float(norms[i]))
        if len(ids):
            mat = (mat.astype(np.float64) / norms[:, None]).astype(np.float32)
        self.ids = np.asarray(ids, dtype=np.uint64)  # full u64 id range
        self.matrix = mat
        self._index = {tweet_id: i for i, tweet_id in enumerate(ids)}

    def __contains__(self, tweet_id: int) -> bool:
        return tweet_id in self._index

    def __len__(self) -> int:
        return len(self.ids)

    def vector(self, tweet_id: int) -> np.ndarray:
        return self.matrix[self._index[tweet_id]]

    def row_index(self, tweet_id: int) -> int:
        return self._index[tweet_id]


# --- tweets JSONL -------------------------------------------------------

_TWEET_FIELDS = {"tweet_id", "user_id", "ts", "hashtag", "kind", "root_id",
                 "text", "template"}


def _parse_tweet_line(line_no: int, obj) -> TweetRecord:
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "not a JSON object")
    unknown = set(obj) - _TWEET_FIELDS
    if unknown:
        raise MalformedLine(line_no, f"unknown fields {sorted(unknown)}")
    try:
        tweet_id = obj["tweet_id"]
        user_id = obj["user_id"]
        ts = obj["ts"]
        hashtag = obj["hashtag"]
        kind = obj["kind"]
        text = obj["text"]
        template = obj["template"]
    except KeyError as exc:
        raise MalformedLine(line_no, f"missing field {exc.args[0]}") from None

    for name, value in (("tweet_id", tweet_id), ("user_id", user_id)):
        if not isinstance(value, int) or isinstance(value, bool) \
                or not 0 <= value <= U64_MAX:
            raise MalformedLine(line_no, f"{name} is not a u64")
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise MalformedLine(line_no, "ts is not an integer")
    if not isinstance(hashtag, str) or not hashtag:
        raise MalformedLine(line_no, "hashtag is not a non-empty string")
    if not isinstance(text, str):
        raise MalformedLine(line_no, "text is not a string")
    if not isinstance(template, bool):
        raise MalformedLine(line_no, "template is not a boolean")

    if kind == ORIGINAL:
        if "root_id" in obj:
            raise MalformedLine(line_no, "original tweet carries root_id")
        root_id = None
    elif kind == RETWEET:
        root_id = obj.get("root_id")
        if not isinstance(root_id, int) or isinstance(root_id, bool) \
                or not 0 <= root_id <= U64_MAX:
            raise MalformedLine(line_no, "retweet requires a u64 root_id")
        if template:
            raise MalformedLine(
                line_no, "template flag is only valid on originals"
            )
    else:
        raise MalformedLine(line_no, f"unknown kind {kind!r}")

    # Twitter hashtags are case insensitive; fold here so variants merge.
    return TweetRecord(
        tweet_id=tweet_id,
        user_id=user_id,
        ts=ts,
        hashtag=hashtag.casefold(),
        kind=kind,
        root_id=root_id,
        text=text,
        is_template=template,
    )


def load_tweets(path) -> list[TweetRecord]:
    """Parse a tweets JSONL file into records sorted by (ts, tweet_id).

    Raises MalformedLine, DuplicateTweetId or DanglingRetweetRoot; on any
    failure nothing is returned (validation is all or nothing).
    """
    records: list[TweetRecord] = []
    seen: set[int] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from None
            rec = _parse_tweet_line(line_no, obj)
            if rec.tweet_id in seen:
                raise DuplicateTweetId(rec.tweet_id)
            seen.add(rec.tweet_id)
            records.append(rec)
    records.sort(key=TweetRecord.sort_key)
    originals_by_hashtag: dict[str, set[int]] = {}
    for rec in records:
        if not rec.is_retweet:
            originals_by_hashtag.setdefault(rec.hashtag, set()).add(rec.tweet_id)
    for rec in records:
        if rec.is_retweet and rec.root_id not in originals_by_hashtag.get(
            rec.hashtag, ()
        ):
            raise DanglingRetweetRoot(rec.tweet_id, rec.root_id)
    return records


def write_tweets(records: Sequence[TweetRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in records:
            obj = {
                "tweet_id": t.tweet_id,
                "user_id": t.user_id,
                "ts": t.ts,
                "hashtag": t.hashtag,
                "kind": t.kind,
            }
            if t.is_retweet:
                obj["root_id"] = t.root_id
            obj["text"] = t.text
            obj["template"] = t.is_template
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


# --- graph CSV ----------------------------------------------------------


@dataclass
class GraphLoadStats:
    n_edges: int = 0
    self_edges_dropped: int = 0
    duplicates_dropped: int = 0


def load_graph(path, stats: GraphLoadStats | None = None) -> FollowerGraph:
    """Load a header-less follower_id,followee_id CSV.

    Duplicate edges collapse silently; self-edges are dropped and counted
    in `stats` when given.
    """
    stats = stats if stats is not None else GraphLoadStats()
    edges: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise MalformedLine(line_no, "expected two comma-separated ids")
            try:
                follower = int(parts[0])
                followee = int(parts[1])
            except ValueError:
                raise MalformedLine(line_no, "ids must be integers") from None
            if not (0 <= follower <= U64_MAX and 0 <= followee <= U64_MAX):
                raise MalformedLine(line_no, "ids must be u64")
            if follower == followee:
                stats.self_edges_dropped += 1
                continue
            if (follower, followee) in edges:
                stats.duplicates_dropped += 1
                continue
            edges.add((follower, followee))
    stats.n_edges = len(edges)
    return FollowerGraph(edges)


def write_graph(graph: FollowerGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for follower, followee in sorted(graph.edges()):
            fh.write(f"{follower},{followee}\n")


# --- trending CSV -------------------------------------------------------


def load_trending(path) -> dict[str, TrendingTimeline]:
    rows: dict[str, list[tuple[int, int, str]]] = {}
    uncertainty: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise MalformedLine(line_no, "expected 5 columns")
            hashtag = parts[0].casefold()
            bucket = parts[3]
            if bucket not in (TOP50, TOP10):
                raise MalformedLine(line_no, f"bad rank_bucket {parts[3]!r}")
            try:
                start = int(parts[1])
                end = int(parts[2])
                unc = int(parts[4])
            except ValueError:
                raise MalformedLine(line_no, "timestamps must be integers") from None
            if unc < 0:
                raise MalformedLine(line_no, "uncertainty_s must be >= 0")
            prev = uncertainty.setdefault(hashtag, unc)
            if prev != unc:
                raise MalformedLine(
                    line_no, f"inconsistent uncertainty_s for {hashtag}"
                )
            rows.setdefault(hashtag, []).append((start, end, bucket))
    return {
        h: TrendingTimeline(h, tuple(sorted(iv)), uncertainty[h])
        for h, iv in rows.items()
    }


def write_trending(timelines: Iterable[TrendingTimeline], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tl in sorted(timelines, key=lambda t: t.hashtag):
            for start, end, bucket in sorted(tl.intervals):
                fh.write(f"{tl.hashtag},{start},{end},{bucket},{tl.uncertainty_s}\n")


# --- embeddings binary --------------------------------------------------

EMB_MAGIC = b"EMB1"


def load_embeddings(path) -> EmbeddingMatrix:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != EMB_MAGIC:
        raise BadMagic(f"{path}: missing EMB1 header")
    dim = struct.unpack_from("<I", data, 4)[0]
    count = struct.unpack_from("<Q", data, 8)[0]
    if dim == 0:
        raise DimMismatch(f"{path}: dim is zero")
    record = 8 + 4 * dim
    expected = 16 + record * count
    if len(data) != expected:
        raise DimMismatch(
            f"{path}: payload is {len(data)} bytes, header implies {expected}"
        )
    rows: dict[int, np.ndarray] = {}
    off = 16
    for _ in range(count):
        tweet_id = struct.unpack_from("<Q", data, off)[0]
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off + 8)
        if tweet_id in rows:
            raise DuplicateTweetId(tweet_id)
        rows[tweet_id] = vec
        off += record
    return EmbeddingMatrix(dim, rows)


def write_embeddings(matrix: EmbeddingMatrix, path) -> None:
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<I", matrix.dim))
        fh.write(struct.pack("<Q", len(matrix)))
        for i, tweet_id in enumerate(matrix.ids):
            fh.write(struct.pack("<Q", int(tweet_id)))
            fh.write(matrix.matrix[i].astype("<f4").tobytes())


# --- dataset bundles ----------------------------------------------------


@dataclass
class Bundle:
    """Everything loaded from one dataset directory."""

    datasets: dict[str, CampaignDataset]
    graph: FollowerGraph
    timelines: dict[str, TrendingTimeline]
    embeddings: EmbeddingMatrix | None = None
    graph_stats: GraphLoadStats = field(default_factory=GraphLoadStats)


def split_by_hashtag(
    records: Sequence[TweetRecord],
    graph: FollowerGraph,
    timelines: Mapping[str, TrendingTimeline] | None = None,
) -> dict[str, CampaignDataset]:
    timelines = timelines or {}
    grouped: dict[str, list[TweetRecord]] = {}
    for rec in records:
        grouped.setdefault(rec.hashtag, []).append(rec)
    return {
        h: CampaignDataset(h, tuple(recs), graph, timelines.get(h))
        for h, recs in grouped.items()
    }


def load_bundle(directory, require_embeddings: bool = False) -> Bundle:
    directory = Path(directory)
    stats = GraphLoadStats()
    graph = load_graph(directory / "graph.csv", stats)
    records = load_tweets(directory / "tweets.jsonl")
    trending_path = directory / "trending.csv"
    timelines = load_trending(trending_path) if trending_path.exists() else {}
    emb_path = directory / "embeddings.bin"
    embeddings = None
    if emb_path.exists():
        embeddings = load_embeddings(emb_path)
    elif require_embeddings:
        raise DatasetInvariantError(f"{emb_path} not found")
    return Bundle(
        datasets=split_by_hashtag(records, graph, timelines),
        graph=graph,
        timelines=timelines,
        embeddings=embeddings,
        graph_stats=stats,
    )
