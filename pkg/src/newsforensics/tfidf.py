"""Sparse TF-IDF vectors with smoothed logarithmic idf, plus cosine scoring.

Weights use raw term counts scaled by idf = ln((1 + N) / (1 + df)) + 1
and are L2-normalized, so cosine similarity reduces to a sparse dot
product.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Mapping

# term -> weight; L2 norm 1 unless empty, zero weights never stored
TfidfVector = dict[str, float]


def build_tfidf(corpus: Mapping[str, Iterable[str]]) -> dict[str, TfidfVector]:
    """Vectorize one month's documents (doc id -> token sequence).

    Documents with no tokens map to the empty vector, which scores 0
    against everything.
    """
    docs = {doc_id: list(tokens) for doc_id, tokens in corpus.items()}
    if not docs:
        raise ValueError("empty corpus")
    n = len(docs)
    df = Counter()
    for tokens in docs.values():
        df.update(set(tokens))
    idf = {term: math.log((1 + n) / (1 + d)) + 1.0 for term, d in df.items()}

    out: dict[str, TfidfVector] = {}
    for doc_id, tokens in docs.items():
        counts = Counter(tokens)
        weights = {term: c * idf[term] for term, c in counts.items()}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        out[doc_id] = {t: w / norm for t, w in weights.items()} if norm else {}
    return out


def cosine(u: TfidfVector, v: TfidfVector) -> float:
    """Dot product of two normalized sparse vectors, clamped to [0, 1]."""
    if not u or not v:
        return 0.0
    if len(u) > len(v):
        u, v = v, u
    dot = sum(w * v[t] for t, w in u.items() if t in v)
    return min(max(dot, 0.0), 1.0)
