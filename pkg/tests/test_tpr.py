import numpy as np
import pytest

from trendforge import simgen, tpr
from trendforge.datastore import EmbeddingMatrix
from trendforge.errors import (
    HashtagTooSmall,
    MissingEmbedding,
    NotEnoughTemplates,
)

from conftest import make_dataset, make_retweet, make_tweet

DESK = tpr.TprConfig(min_unique=2)


class TestCleanText:
    def test_full_example(self):
        assert tpr.clean_text("RT @user Modi rocks https://t.co/x #India") \
            == "modi rocks"

    def test_dropped_when_empty(self):
        assert tpr.clean_text("#Tag1 #Tag2 @a") is None

    def test_whitespace_and_case(self):
        assert tpr.clean_text("  Corruption   ENDS now ") == "corruption ends now"

    def test_leading_rt_only(self):
        assert tpr.clean_text("no RT here") == "no rt here"
        assert tpr.clean_text("RT RT twice") == "rt twice"

    def test_rt_check_is_case_sensitive_and_pre_lowercase(self):
        assert tpr.clean_text("rt lowercase stays") == "rt lowercase stays"

    def test_url_variants(self):
        assert tpr.clean_text("see www.example.com and http://x.y now") == \
            "see and now"

    def test_nfc_normalization(self):
        decomposed = "café time"  # e + combining acute
        composed = "café time"
        assert tpr.clean_text(decomposed) == tpr.clean_text(composed)


class TestCleanTweets:
    def test_dedup_keeps_smallest_id_and_any_template(self):
        d = make_dataset(
            [
                make_tweet(5, 1, 100, text="Same Words"),
                make_tweet(3, 2, 200, text="same   words", template=True),
                make_tweet(9, 3, 300, text="other thing"),
            ],
            [],
        )
        unique, dropped = tpr.clean_tweets(d)
        assert dropped == 0
        by_text = {c.cleaned_text: c for c in unique}
        assert by_text["same words"].tweet_id == 3
        assert by_text["same words"].is_template is True
        assert by_text["other thing"].is_template is False

    def test_retweets_and_empty_excluded(self):
        d = make_dataset(
            [
                make_tweet(1, 1, 100, text="keep me"),
                make_tweet(2, 2, 150, text="#only #tags"),
                make_retweet(4, 3, 200, root_id=1),
            ],
            [],
        )
        unique, dropped = tpr.clean_tweets(d)
        assert [c.tweet_id for c in unique] == [1]
        assert dropped == 1


class TestNeighborhoodSize:
    def test_paper_scale(self):
        assert tpr.neighborhood_size(3000) == 30

    def test_half_up(self):
        assert tpr.neighborhood_size(3049) == 30
        assert tpr.neighborhood_size(3050) == 31

    def test_floor_one(self):
        assert tpr.neighborhood_size(10) == 1


def planted_clusters(n_template, n_normal, dim=8, seed=0):
    """Templates hug axis 0, normals hug axis 1; exactly separable."""
    rng = np.random.default_rng(seed)
    rows = {}
    flags = {}
    next_id = 1
    for is_template, count, axis in ((True, n_template, 0), (False, n_normal, 1)):
        for _ in range(count):
            v = rng.standard_normal(dim) * 0.01
            v[axis] += 10.0
            v /= np.linalg.norm(v)
            rows[next_id] = v.astype(np.float32)
            flags[next_id] = is_template
            next_id += 1
    tweets = [
        tpr.CleanTweet(i, f"text {i}", flags[i]) for i in sorted(rows)
    ]
    return tweets, EmbeddingMatrix(dim, rows)


class TestComputeTpr:
    def test_too_small_hashtag(self):
        tweets, emb = planted_clusters(2, 3)
        with pytest.raises(HashtagTooSmall):
            tpr.compute_tpr(tweets, emb, tpr.TprConfig(min_unique=3000))

    def test_missing_embedding(self):
        tweets, emb = planted_clusters(2, 3)
        tweets = tweets + [tpr.CleanTweet(999, "no vector", False)]
        with pytest.raises(MissingEmbedding):
            tpr.compute_tpr(tweets, emb, DESK)

    def test_separated_clusters(self):
        tweets, emb = planted_clusters(20, 60)
        config = tpr.TprConfig(min_unique=2, neighborhood_bp=1000)  # k = 8
        results = tpr.compute_tpr(tweets, emb, config)
        for r in results:
            if r.is_template:
                assert r.raw_tpr == 1.0
            else:
                assert r.raw_tpr == 0.0

    def test_all_templates_normalized_one(self):
        tweets, emb = planted_clusters(30, 0)
        results = tpr.compute_tpr(tweets, emb, DESK)
        for r in results:
            assert r.normalized_tpr == 1.0
            assert r.raw_tpr == 1.0

    def test_no_templates_normalized_none(self):
        # raw TPR is still emitted; normalized is undefined and callers
        # that need it get the degenerate-fraction error
        from trendforge.errors import DegenerateTemplateFraction

        tweets, emb = planted_clusters(0, 30)
        results = tpr.compute_tpr(tweets, emb, DESK)
        assert all(r.normalized_tpr is None for r in results)
        assert all(r.raw_tpr == 0.0 for r in results)
        with pytest.raises(DegenerateTemplateFraction):
            tpr.require_normalized(results)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        for trial in range(5):
            n = int(rng.integers(20, 101))
            dim = 6
            mat = rng.standard_normal((n, dim))
            mat /= np.linalg.norm(mat, axis=1)[:, None]
            ids = sorted(int(i) for i in
                         rng.choice(10 * n, size=n, replace=False))
            flags = rng.random(n) < 0.3
            rows = {ids[i]: mat[i].astype(np.float32) for i in range(n)}
            emb = EmbeddingMatrix(dim, rows)
            tweets = [tpr.CleanTweet(ids[i], f"t{i}", bool(flags[i]))
                      for i in range(n)]
            config = tpr.TprConfig(min_unique=2, neighborhood_bp=500)
            results = {r.tweet_id: r for r in tpr.compute_tpr(tweets, emb, config)}
            k = tpr.neighborhood_size(n, 500)
            template_ids = {ids[i] for i in range(n) if flags[i]}
            # brute force per query
            fmat = emb.matrix.astype(np.float64)
            order = {tid: i for i, tid in enumerate(ids)}
            for tid in ids:
                qi = order[tid]
                scored = sorted(
                    (-float(np.dot(fmat[qi], fmat[j])), ids[j])
                    for j in range(n) if j != qi
                )
                nb = [t for _, t in scored[:k]]
                raw = sum(1 for t in nb if t in template_ids) / k
                assert results[tid].raw_tpr == raw, f"trial {trial} id {tid}"

    def test_permutation_invariance(self):
        tweets, emb = planted_clusters(10, 30)
        config = tpr.TprConfig(min_unique=2, neighborhood_bp=1000)
        a = tpr.compute_tpr(tweets, emb, config)
        b = tpr.compute_tpr(list(reversed(tweets)), emb, config)
        assert sorted(a, key=lambda r: r.tweet_id) == \
            sorted(b, key=lambda r: r.tweet_id)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(9)
        tweets, emb = planted_clusters(10, 40, dim=8)
        # random orthogonal rotation via QR
        q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        rotated = EmbeddingMatrix(
            8,
            {int(i): (emb.matrix[emb.row_index(int(i))].astype(np.float64) @ q)
             .astype(np.float32)
             for i in emb.ids},
        )
        config = tpr.TprConfig(min_unique=2, neighborhood_bp=1000)
        a = tpr.compute_tpr(tweets, emb, config)
        b = tpr.compute_tpr(tweets, rotated, config)
        assert [(r.tweet_id, r.raw_tpr) for r in a] == \
            [(r.tweet_id, r.raw_tpr) for r in b]

    def test_bounds(self):
        tweets, emb = planted_clusters(7, 23)
        results = tpr.compute_tpr(tweets, emb, DESK)
        rho = 7 / 30
        for r in results:
            assert 0.0 <= r.raw_tpr <= 1.0
            assert 0.0 <= r.normalized_tpr <= 1.0 / rho + 1e-12


class TestDistributionAndExemplars:
    def test_unit_step_when_uniform(self):
        results = [
            tpr.TprResult(i, 5, 0.4, 1.0, i % 2 == 0) for i in range(10)
        ]
        dist = tpr.tpr_distribution(results)
        assert dist["template"] == [(1.0, 1.0)]
        assert dist["normal"] == [(1.0, 1.0)]

    def test_template_key_absent_when_no_templates(self):
        results = [tpr.TprResult(i, 5, 0.0, 0.5, False) for i in range(4)]
        dist = tpr.tpr_distribution(results)
        assert "template" not in dist and "normal" in dist

    def test_cluster_separation_dominance(self):
        tweets, emb = planted_clusters(20, 60)
        config = tpr.TprConfig(min_unique=2, neighborhood_bp=1000)
        dist = tpr.tpr_distribution(tpr.compute_tpr(tweets, emb, config))
        # template mass sits entirely above normal mass
        max_normal = max(x for x, _ in dist["normal"])
        min_template = min(x for x, _ in dist["template"])
        assert max_normal < min_template

    def test_exemplars(self):
        results = [
            tpr.TprResult(1, 5, 0.9, 1.0, True),
            tpr.TprResult(2, 5, 0.1, 1.0, True),
            tpr.TprResult(3, 5, 0.5, 1.0, True),
            tpr.TprResult(4, 5, 0.0, 1.0, False),
        ]
        picked = tpr.low_tpr_exemplars(results, 1)
        assert [r.tweet_id for r in picked] == [2]
        all_sorted = tpr.low_tpr_exemplars(results, 3)
        assert [r.tweet_id for r in all_sorted] == [2, 3, 1]

    def test_exemplar_tie_break(self):
        results = [
            tpr.TprResult(9, 5, 0.1, 1.0, True),
            tpr.TprResult(4, 5, 0.1, 1.0, True),
        ]
        assert tpr.low_tpr_exemplars(results, 1)[0].tweet_id == 4

    def test_not_enough_templates(self):
        with pytest.raises(NotEnoughTemplates):
            tpr.low_tpr_exemplars([tpr.TprResult(1, 5, 0.1, 1.0, False)], 1)


class TestKnnNeighborhood:
    def test_matches_brute_force_for_one_query(self):
        tweets, emb = planted_clusters(5, 25, seed=3)
        config = tpr.TprConfig(min_unique=2, neighborhood_bp=1000)  # k = 3
        query = tweets[7].tweet_id
        got = tpr.knn_neighborhood(emb, tweets, query, config)
        q = emb.vector(query).astype(np.float64)
        scored = sorted(
            (-float(np.dot(q, emb.vector(c.tweet_id).astype(np.float64))),
             c.tweet_id)
            for c in tweets if c.tweet_id != query
        )
        assert got == {tid for _, tid in scored[:3]}


class TestSingleClusterExchangeability:
    def test_normalized_tpr_centers_at_one(self):
        from trendforge import simgen

        means = []
        for seed in range(5):
            cfg = simgen.SimConfig(seed=seed, embedding_clusters=(1, 10.0, 16))
            items = [(i, i < 30) for i in range(1, 151)]
            emb = simgen.generate_embeddings(cfg, items)
            tweets = [tpr.CleanTweet(i, f"t{i}", i < 30) for i in range(1, 151)]
            results = tpr.compute_tpr(
                tweets, emb, tpr.TprConfig(min_unique=2, neighborhood_bp=1000)
            )
            means.append(np.mean([r.normalized_tpr for r in results]))
        assert abs(float(np.mean(means)) - 1.0) < 0.15


class TestSimulatedSeparation:
    def test_paper_style_separation(self):
        # disjoint template/normal topic clusters: at least 75% of normal
        # tweets see no template in their 1%-scale neighborhood
        cfg = simgen.SimConfig(seed=21, n_users=1500, n_participants=60,
                               n_templates=40, adoption_prob=0.05,
                               base_trending_rate=4.0,
                               embedding_clusters=(4, 40.0, 32))
        res = simgen.generate(cfg)
        unique, _ = tpr.clean_tweets(res.dataset)
        config = tpr.TprConfig(min_unique=100, neighborhood_bp=100)
        results = tpr.compute_tpr(unique, res.embeddings, config)
        normals = [r for r in results if not r.is_template]
        assert normals
        zero_fraction = sum(1 for r in normals if r.raw_tpr == 0.0) / len(normals)
        assert zero_fraction >= 0.75
