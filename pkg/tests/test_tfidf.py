import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsforensics.tfidf import build_tfidf, cosine

from oracles import dense_cosine


def random_corpus(rng, n_docs=20, vocab_size=50, doc_len=30):
    vocab = [f"w{i}" for i in range(vocab_size)]
    return {
        f"doc{i}": [rng.choice(vocab) for _ in range(rng.randint(1, doc_len))]
        for i in range(n_docs)
    }


class TestBuildTfidf:
    def test_single_document_weights(self):
        vecs = build_tfidf({"d": ["a", "a", "b"]})
        # idf = ln(2/2) + 1 = 1 for both terms, weights 2 and 1 before norm
        assert vecs["d"]["a"] == pytest.approx(2 / math.sqrt(5))
        assert vecs["d"]["b"] == pytest.approx(1 / math.sqrt(5))

    def test_term_in_every_document_gets_idf_one(self):
        corpus = {f"d{i}": ["shared", f"only{i}"] for i in range(4)}
        vecs = build_tfidf(corpus)
        # idf(shared) = ln(5/5) + 1 = 1; idf(only) = ln(5/2) + 1
        idf_shared, idf_only = 1.0, math.log(5 / 2) + 1
        norm = math.sqrt(idf_shared**2 + idf_only**2)
        assert vecs["d0"]["shared"] == pytest.approx(idf_shared / norm)

    def test_empty_document_empty_vector(self):
        vecs = build_tfidf({"d0": ["a"], "d1": []})
        assert vecs["d1"] == {}

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty corpus"):
            build_tfidf({})

    def test_vectors_unit_norm_no_zero_entries(self):
        rng = random.Random(7)
        vecs = build_tfidf(random_corpus(rng))
        for vec in vecs.values():
            if vec:
                assert math.sqrt(sum(w * w for w in vec.values())) == pytest.approx(
                    1.0, abs=1e-9
                )
            assert all(w > 0 for w in vec.values())


class TestCosine:
    def test_identical_vectors(self):
        vecs = build_tfidf({"a": ["x", "y", "z"], "b": ["x", "y", "z"]})
        assert cosine(vecs["a"], vecs["b"]) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_vocabulary_exactly_zero(self):
        vecs = build_tfidf({"a": ["x", "y"], "b": ["p", "q"]})
        assert cosine(vecs["a"], vecs["b"]) == 0.0

    def test_empty_operand(self):
        vecs = build_tfidf({"a": ["x"], "b": []})
        assert cosine(vecs["a"], vecs["b"]) == 0.0
        assert cosine(vecs["b"], vecs["b"]) == 0.0

    def test_matches_dense_oracle(self):
        rng = random.Random(42)
        corpus = random_corpus(rng)
        vecs = build_tfidf(corpus)
        ids = sorted(corpus)
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                expected = dense_cosine(corpus[a], corpus[b], corpus)
                assert cosine(vecs[a], vecs[b]) == pytest.approx(
                    expected, abs=1e-9
                ), (a, b)

    def test_symmetry(self):
        rng = random.Random(3)
        corpus = random_corpus(rng, n_docs=6)
        vecs = build_tfidf(corpus)
        for a in vecs:
            for b in vecs:
                assert cosine(vecs[a], vecs[b]) == cosine(vecs[b], vecs[a])


@given(
    st.lists(
        st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=15),
        min_size=2,
        max_size=6,
    ),
    st.floats(min_value=0.1, max_value=10.0),
)
@settings(max_examples=100, deadline=None)
def test_cosine_invariant_under_weight_rescaling(docs, scale):
    """Scaling all raw tf-idf weights before normalization changes nothing."""
    corpus = {f"d{i}": doc for i, doc in enumerate(docs)}
    vecs = build_tfidf(corpus)

    def renormalize(vec, s):
        scaled = {t: w * s for t, w in vec.items()}
        norm = math.sqrt(sum(w * w for w in scaled.values()))
        return {t: w / norm for t, w in scaled.items()} if norm else {}

    a, b = vecs["d0"], vecs["d1"]
    assert cosine(renormalize(a, scale), renormalize(b, scale)) == pytest.approx(
        cosine(a, b), abs=1e-9
    )
