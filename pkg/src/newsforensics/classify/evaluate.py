"""Training, cross-validation and rank-split evaluation of news classifiers.

A fitted classifier bundles the feature encoder with the model so
predictions are reproducible from one JSON document.  Folds are
stratified by label and every source of randomness is derived from the
master seed.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from ..traffic import TrafficProfile
from .encoder import FeatureEncoder, complete_profiles, missing_features
from .metrics import MetricsReport, compute_metrics
from .models import MODEL_KINDS, make_model

log = logging.getLogger(__name__)

PERSIST_FORMAT_VERSION = 1


@dataclass
class NewsClassifier:
    kind: str
    encoder: FeatureEncoder
    model: object

    def score_profile(self, profile: TrafficProfile) -> float:
        x = self.encoder.transform_one(profile)
        return float(self.model.score(x[None, :])[0])

    def predict_profile(self, profile: TrafficProfile, threshold: float = 0.5):
        """(label, score) at the decision threshold."""
        score = self.score_profile(profile)
        return ("fake" if score >= threshold else "real", score)

    def to_dict(self) -> dict:
        return {
            "format_version": PERSIST_FORMAT_VERSION,
            "kind": self.kind,
            "encoder": self.encoder.to_dict(),
            "model": self.model.to_dict(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
        )

    @classmethod
    def from_dict(cls, data: dict) -> "NewsClassifier":
        version = data.get("format_version")
        if version != PERSIST_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version: {version}")
        kind = data["kind"]
        return cls(
            kind=kind,
            encoder=FeatureEncoder.from_dict(data["encoder"]),
            model=MODEL_KINDS[kind].from_dict(data["model"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "NewsClassifier":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check_trainable(labels: np.ndarray) -> None:
    pos, neg = int((labels == 1).sum()), int((labels == 0).sum())
    if pos < 2 or neg < 2:
        raise ValueError(
            f"need at least two examples per class, got fake={pos} real={neg}"
        )


def train_classifier(
    kind: str,
    profiles: Iterable[TrafficProfile],
    seed: int = 0,
    **model_params,
) -> NewsClassifier:
    """Fit the encoder and one model on all complete profiles."""
    rows = complete_profiles(profiles)
    encoder = FeatureEncoder.fit(rows)
    X = encoder.transform(rows)
    y = encoder.labels(rows)
    _check_trainable(y)
    model = make_model(kind, **model_params).fit(X, y, seed=seed)
    return NewsClassifier(kind, encoder, model)


def stratified_folds(labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified k-fold assignment (round-robin per class).

    Falls back to plain shuffled folds with a warning when some class
    has fewer members than k.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    n = len(labels)
    if n < k:
        raise ValueError(f"dataset of {n} rows cannot form {k} folds")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    folds: list[list[int]] = [[] for _ in range(k)]
    class_counts = [int((labels == c).sum()) for c in (0, 1)]
    if min(class_counts) < k:
        log.warning(
            "class with %d examples cannot be stratified into %d folds; "
            "falling back to unstratified folds",
            min(class_counts),
            k,
        )
        order = rng.permutation(n)
        for i, idx in enumerate(order):
            folds[i % k].append(int(idx))
    else:
        for c in (0, 1):
            members = np.nonzero(labels == c)[0]
            order = rng.permutation(len(members))
            for i, j in enumerate(order):
                folds[i % k].append(int(members[j]))
    return [np.array(sorted(f), dtype=int) for f in folds]


def cross_validate(
    kind: str,
    profiles: Iterable[TrafficProfile],
    k: int = 10,
    seed: int = 0,
    threshold: float = 0.5,
    **model_params,
) -> MetricsReport:
    """Stratified k-fold cross-validation with per-fold encoders.

    Test scores are pooled across folds for the aggregate report;
    per-fold reports ride along in ``folds``.
    """
    rows = complete_profiles(profiles)
    labels = FeatureEncoder.labels(rows)
    _check_trainable(labels)
    folds = stratified_folds(labels, k, seed)
    fold_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]

    pooled_scores = np.empty(len(rows))
    fold_reports = []
    for fold_id, test_idx in enumerate(folds):
        test_set = set(test_idx.tolist())
        train_rows = [r for i, r in enumerate(rows) if i not in test_set]
        test_rows = [rows[i] for i in test_idx]
        encoder = FeatureEncoder.fit(train_rows)
        model = make_model(kind, **model_params).fit(
            encoder.transform(train_rows),
            encoder.labels(train_rows),
            seed=fold_seeds[fold_id],
        )
        scores = model.score(encoder.transform(test_rows))
        pooled_scores[test_idx] = scores
        fold_reports.append(
            compute_metrics(scores, labels[test_idx], threshold=threshold)
        )

    report = compute_metrics(pooled_scores, labels, threshold=threshold)
    report.folds = fold_reports
    return report


_PREDICATE_RE = re.compile(r"^\s*rank\s*(<=|>=|<|>)\s*(\d+)\s*$")

_OPS: dict[str, Callable[[int, int], bool]] = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class RankPredicate:
    op: str
    value: int

    def __call__(self, profile: TrafficProfile) -> bool:
        if profile.global_rank is None:
            return False
        return _OPS[self.op](profile.global_rank, self.value)

    def __str__(self) -> str:
        return f"rank{self.op}{self.value}"


@dataclass(frozen=True)
class SplitSpec:
    """Train/test predicates over global rank, e.g. ``rank>10000|rank<=10000``."""

    train: RankPredicate
    test: RankPredicate

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        parts = text.split("|")
        if len(parts) != 2:
            raise ValueError(
                f"expected 'TRAIN|TEST' rank predicates, got {text!r}"
            )
        preds = []
        for part in parts:
            m = _PREDICATE_RE.match(part)
            if not m:
                raise ValueError(f"bad rank predicate {part.strip()!r}")
            preds.append(RankPredicate(m.group(1), int(m.group(2))))
        return cls(preds[0], preds[1])


def rank_split_experiment(
    profiles: Iterable[TrafficProfile],
    spec: SplitSpec,
    kind: str = "random_forest",
    seed: int = 0,
    threshold: float = 0.5,
    **model_params,
) -> MetricsReport:
    """Train on one rank band and test on the other (no cross-validation)."""
    rows = complete_profiles(profiles)
    train_rows = [p for p in rows if spec.train(p)]
    test_rows = [p for p in rows if spec.test(p)]
    overlap = {p.site for p in train_rows} & {p.site for p in test_rows}
    if overlap:
        raise ValueError(f"split predicates overlap on: {sorted(overlap)[:5]}")
    if not train_rows:
        raise ValueError(f"no profiles satisfy train predicate {spec.train}")
    if not test_rows:
        raise ValueError(f"no profiles satisfy test predicate {spec.test}")

    encoder = FeatureEncoder.fit(train_rows)
    y_train = encoder.labels(train_rows)
    y_test = encoder.labels(test_rows)
    _check_trainable(y_train)
    if len(set(y_test.tolist())) < 2:
        raise ValueError("test side must contain both classes")
    model = make_model(kind, **model_params).fit(
        encoder.transform(train_rows), y_train, seed=seed
    )
    scores = model.score(encoder.transform(test_rows))
    return compute_metrics(scores, y_test, threshold=threshold)


def predict_profiles(
    classifier: NewsClassifier,
    profiles: Sequence[TrafficProfile],
    threshold: float = 0.5,
) -> list[tuple[str, str, float]]:
    """Per-profile (site, label, score); raises on incomplete profiles."""
    out = []
    for p in profiles:
        missing = missing_features(p)
        if missing:
            raise ValueError(f"profile {p.site} missing features: {missing}")
        label, score = classifier.predict_profile(p, threshold)
        out.append((p.site, label, score))
    return out
