import numpy as np
import pytest

from trendforge import hashing


def test_fnv1a_known_values():
    # published FNV-1a 64-bit test vectors
    assert hashing.fnv1a64(b"") == 0xCBF29CE484222325
    assert hashing.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert hashing.fnv1a64(b"foobar") == 0x85944171F73967E8


def test_unit_norm_and_dtype():
    v = hashing.embed_text("the quick brown fox")
    assert v.dtype == np.float32
    assert v.shape == (256,)
    assert abs(float(np.linalg.norm(v.astype(np.float64))) - 1.0) < 1e-6


def test_deterministic():
    a = hashing.embed_text("modi rocks")
    b = hashing.embed_text("modi rocks")
    np.testing.assert_array_equal(a, b)


def test_short_text_single_token():
    # below 3 code points the whole text is one token: a single signed
    # one-hot at its hash bucket
    v = hashing.embed_text("ab")
    assert np.count_nonzero(v) == 1
    h = hashing.fnv1a64("ab".encode("utf-8"))
    expected_sign = 1.0 if (h & 1) == 0 else -1.0
    assert v[h % 256] == np.float32(expected_sign)


def test_trigram_construction():
    # "abcd" -> trigrams "abc", "bcd"
    v = hashing.embed_text("abcd")
    buckets = set()
    for tok in ("abc", "bcd"):
        buckets.add(hashing.fnv1a64(tok.encode("utf-8")) % 256)
    assert set(np.nonzero(v)[0]) <= buckets


def test_unicode_code_points_not_bytes():
    # a 4-byte emoji is one code point; three of them make one trigram
    text = "\U0001f600" * 3
    v = hashing.embed_text(text)
    assert np.count_nonzero(v) == 1


def test_seed_changes_vectors():
    a = hashing.embed_text("hello world", seed=0)
    b = hashing.embed_text("hello world", seed=1)
    assert not np.array_equal(a, b)


def test_empty_text_rejected():
    with pytest.raises(ValueError):
        hashing.embed_text("")


def test_corpus_builder_matches_single():
    m = hashing.embed_corpus([(1, "alpha beta"), (2, "gamma delta")])
    np.testing.assert_array_equal(m.vector(1), hashing.embed_text("alpha beta"))
    np.testing.assert_array_equal(m.vector(2), hashing.embed_text("gamma delta"))
