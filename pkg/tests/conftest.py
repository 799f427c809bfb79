import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trendforge.datastore import (
    ORIGINAL,
    RETWEET,
    CampaignDataset,
    FollowerGraph,
    TweetRecord,
)


def make_tweet(
    tweet_id,
    user_id,
    ts,
    hashtag="h",
    kind=ORIGINAL,
    root_id=None,
    text="some text",
    template=False,
):
    return TweetRecord(
        tweet_id=tweet_id,
        user_id=user_id,
        ts=ts,
        hashtag=hashtag,
        kind=kind,
        root_id=root_id,
        text=text,
        is_template=template,
    )


def make_retweet(tweet_id, user_id, ts, root_id, hashtag="h"):
    return make_tweet(
        tweet_id, user_id, ts, hashtag=hashtag, kind=RETWEET,
        root_id=root_id, text="",
    )


def make_dataset(tweets, edges, hashtag="h", timeline=None):
    """edges are (follower, followee): follower sees followee's tweets."""
    graph = FollowerGraph(edges)
    ordered = tuple(sorted(tweets, key=TweetRecord.sort_key))
    return CampaignDataset(hashtag, ordered, graph, timeline)


@pytest.fixture
def tmp_bundle_dir(tmp_path):
    return tmp_path / "bundle"
