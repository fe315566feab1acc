"""Binary classification metrics with class-weighted aggregation.

The fake class is positive.  Per-class TP rate equals that class's
recall; aggregate values are support-weighted means of the per-class
values.  AUC uses mid-ranks for tied scores, equivalent to trapezoidal
integration of the ROC curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

POSITIVE_LABEL = 1  # fake
NEGATIVE_LABEL = 0  # real


@dataclass(frozen=True)
class ClassMetrics:
    tp_rate: float
    fp_rate: float
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricsReport:
    tp_rate: float
    fp_rate: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    weighted_auc: float | None
    per_class: dict[str, ClassMetrics]
    confusion: dict[str, int]  # tp / fp / tn / fn at the threshold
    n: int
    folds: list["MetricsReport"] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "tp_rate": self.tp_rate,
            "fp_rate": self.fp_rate,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "weighted_auc": self.weighted_auc,
            "per_class": {k: vars(v) for k, v in sorted(self.per_class.items())},
            "confusion": dict(sorted(self.confusion.items())),
            "n": self.n,
        }
        if self.folds:
            out["folds"] = [f.to_dict() for f in self.folds]
        return out


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    return _safe_div(2 * precision * recall, precision + recall)


def auc_score(scores, labels) -> float:
    """Probability a positive outranks a negative, ties counted half.

    Computed from mid-ranks of the scores (Mann-Whitney statistic),
    which equals the area under the ROC curve with trapezoidal tie
    handling.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int((labels == POSITIVE_LABEL).sum())
    n_neg = int((labels == NEGATIVE_LABEL).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: both classes must be present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1  # mid-rank, 1-based
        i = j + 1
    rank_sum = float(ranks[labels == POSITIVE_LABEL].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def compute_metrics(scores, labels, threshold: float = 0.5) -> MetricsReport:
    """Confusion counts at the threshold plus weighted per-class metrics.

    With a single class present, AUC is undefined and reported as None;
    everything else is still computed.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    if scores.size == 0:
        raise ValueError("cannot compute metrics on empty input")
    predicted = (scores >= threshold).astype(int)

    tp = int(((predicted == 1) & (labels == 1)).sum())
    fp = int(((predicted == 1) & (labels == 0)).sum())
    tn = int(((predicted == 0) & (labels == 0)).sum())
    fn = int(((predicted == 0) & (labels == 1)).sum())

    recall_fake = _safe_div(tp, tp + fn)
    precision_fake = _safe_div(tp, tp + fp)
    fpr_fake = _safe_div(fp, fp + tn)
    recall_real = _safe_div(tn, tn + fp)
    precision_real = _safe_div(tn, tn + fn)
    fpr_real = _safe_div(fn, fn + tp)

    per_class = {
        "fake": ClassMetrics(
            tp_rate=recall_fake,
            fp_rate=fpr_fake,
            precision=precision_fake,
            recall=recall_fake,
            f1=_f1(precision_fake, recall_fake),
            support=tp + fn,
        ),
        "real": ClassMetrics(
            tp_rate=recall_real,
            fp_rate=fpr_real,
            precision=precision_real,
            recall=recall_real,
            f1=_f1(precision_real, recall_real),
            support=tn + fp,
        ),
    }

    n = len(labels)
    weights = {name: m.support / n for name, m in per_class.items()}

    def weighted(attr: str) -> float:
        return sum(getattr(per_class[name], attr) * w for name, w in weights.items())

    try:
        auc = auc_score(scores, labels)
        # the per-class ROC curves of a binary scorer mirror each other, so
        # the support-weighted per-class AUC coincides with the plain AUC
        weighted_auc = auc
    except ValueError:
        auc = None
        weighted_auc = None

    return MetricsReport(
        tp_rate=weighted("tp_rate"),
        fp_rate=weighted("fp_rate"),
        precision=weighted("precision"),
        recall=weighted("recall"),
        f1=weighted("f1"),
        auc=auc,
        weighted_auc=weighted_auc,
        per_class=per_class,
        confusion={"tp": tp, "fp": fp, "tn": tn, "fn": fn},
        n=n,
    )
