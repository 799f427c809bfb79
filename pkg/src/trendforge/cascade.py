"""Retweet cascade reconstruction with last-retweeter attribution.

Retweet metadata only links back to the root, so the actual propagation
path is inferred: each retweet attaches to the cascade tweet (root or an
earlier retweet) whose author the retweeter follows and whose effective
time is latest, with ties at equal timestamps going to the smaller
tweet_id. A retweeter with no friend in the cascade attaches to the root.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .datastore import CampaignDataset, FollowerGraph, TweetRecord
from .errors import RootNotOriginal

PARTICIPANT = "participant"
NON_PARTICIPANT = "non_participant"


@dataclass
class CascadeTree:
    root_tweet_id: int
    parent: dict[int, int]  # retweet_id -> parent tweet_id
    children_count: dict[int, int]  # tweet_id -> number of children
    duplicate_retweets_dropped: int = 0

    @property
    def n_retweets(self) -> int:
        return len(self.parent)

    @property
    def size(self) -> int:
        return self.n_retweets


def reconstruct_cascade(
    root: TweetRecord,
    retweets: Sequence[TweetRecord],
    graph: FollowerGraph,
) -> CascadeTree:
    """Build one cascade tree from a root and its (ts, id)-sorted retweets.

    A user retweeting the same root twice contributes only their earliest
    retweet; later ones are dropped and counted.
    """
    if root.is_retweet:
        raise RootNotOriginal(root.tweet_id)
    parent: dict[int, int] = {}
    children: dict[int, int] = {root.tweet_id: 0}
    # cascade nodes in (ts, id) order; scanned backwards to find the most
    # recent friend activity
    nodes: list[TweetRecord] = [root]
    users_who_retweeted: set[int] = set()
    dropped = 0
    for rt in retweets:
        if rt.root_id != root.tweet_id:
            raise ValueError(
                f"retweet {rt.tweet_id} does not reference root {root.tweet_id}"
            )
        if rt.user_id in users_who_retweeted:
            dropped += 1
            continue
        friends = graph.friends_of(rt.user_id)
        chosen = root.tweet_id
        key = rt.sort_key()
        # latest friend activity wins; at equal timestamps the smaller
        # tweet_id does, so keep scanning while the timestamp ties
        found_ts = None
        for node in reversed(nodes):
            if found_ts is not None and node.ts < found_ts:
                break
            if node.sort_key() >= key:
                continue
            if node.user_id in friends:
                chosen = node.tweet_id
                found_ts = node.ts
        parent[rt.tweet_id] = chosen
        children[chosen] = children.get(chosen, 0) + 1
        children.setdefault(rt.tweet_id, 0)
        nodes.append(rt)
        users_who_retweeted.add(rt.user_id)
    return CascadeTree(root.tweet_id, parent, children, dropped)


def _cascade_groups(
    dataset: CampaignDataset, template_only: bool = False
) -> list[tuple[TweetRecord, list[TweetRecord]]]:
    retweets_by_root: dict[int, list[TweetRecord]] = {}
    for t in dataset.tweets:
        if t.is_retweet:
            retweets_by_root.setdefault(t.root_id, []).append(t)
    groups = []
    for t in dataset.tweets:
        if t.is_retweet:
            continue
        if template_only and not t.is_template:
            continue
        groups.append((t, retweets_by_root.get(t.tweet_id, [])))
    return groups


def user_types(dataset: CampaignDataset) -> Mapping[int, str]:
    """participant for template authors of this hashtag, else non_participant."""
    participants = dataset.participants()
    types = {}
    for t in dataset.tweets:
        types[t.user_id] = (
            PARTICIPANT if t.user_id in participants else NON_PARTICIPANT
        )
    return types


def implied_retweets_by_user(
    dataset: CampaignDataset, template_only: bool = False
) -> dict[int, tuple[str, int]]:
    """Per user: (user type, total children over their cascade tweets).

    Covers every user who authored a node in the cascades in scope; users
    whose tweets attracted no retweets appear with count 0.
    """
    types = user_types(dataset)
    counts: dict[int, int] = {}
    for root, retweets in _cascade_groups(dataset, template_only):
        tree = reconstruct_cascade(root, retweets, dataset.graph)
        authors = {root.tweet_id: root.user_id}
        for rt in retweets:
            if rt.tweet_id in tree.children_count:
                authors[rt.tweet_id] = rt.user_id
        for tweet_id, n_children in tree.children_count.items():
            user = authors[tweet_id]
            counts[user] = counts.get(user, 0) + n_children
    return {user: (types[user], n) for user, n in counts.items()}


def cascade_sizes(
    dataset: CampaignDataset,
) -> list[tuple[int, str, int]]:
    """(root_tweet_id, tweet type, retweet count) per original tweet."""
    out = []
    for root, retweets in _cascade_groups(dataset):
        tree = reconstruct_cascade(root, retweets, dataset.graph)
        kind = "template" if root.is_template else "normal"
        out.append((root.tweet_id, kind, tree.size))
    return out


def cascade_size_histogram(
    dataset: CampaignDataset,
) -> dict[str, list[tuple[int, int]]]:
    """Exact-integer histogram of cascade sizes, split by tweet type."""
    hist: dict[str, dict[int, int]] = {"template": {}, "normal": {}}
    for _, kind, size in cascade_sizes(dataset):
        hist[kind][size] = hist[kind].get(size, 0) + 1
    return {
        kind: sorted(sizes.items()) for kind, sizes in hist.items()
    }
