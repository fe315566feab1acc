"""Feature encoding for traffic profiles.

Numeric features are standardized, country and category are one-hot
encoded, and near-zero-variance features are dropped.  Column order is
canonicalized lexicographically so encodings never depend on input
order, and all statistics come from the data the encoder was fitted on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..traffic import TrafficProfile

NUMERIC_FEATURES = (
    "global_rank",
    "country_rank",
    "category_rank",
    "total_visits",
    "pages_per_visit",
    "bounce_rate",
    "src_direct",
    "src_referrals",
    "src_search",
    "src_social",
    "src_mail",
    "src_display",
)

CATEGORICAL_FEATURES = ("country", "category")

REQUIRED_FEATURES = NUMERIC_FEATURES + CATEGORICAL_FEATURES

LABEL_CODES = {"real": 0, "fake": 1}


def missing_features(profile: TrafficProfile) -> list[str]:
    return [f for f in REQUIRED_FEATURES if getattr(profile, f) is None]


def complete_profiles(profiles) -> list[TrafficProfile]:
    """Profiles carrying every classification feature."""
    return [p for p in profiles if not missing_features(p)]


@dataclass
class FeatureEncoder:
    columns: list[str]
    means: dict[str, float]
    stds: dict[str, float]
    vocab: dict[str, list[str]]  # categorical feature -> seen values
    dropped: list[str]

    @classmethod
    def fit(cls, profiles, variance_threshold: float = 1e-12) -> "FeatureEncoder":
        rows = complete_profiles(profiles)
        if not rows:
            raise ValueError("no profiles with a complete feature set")

        means, stds, dropped = {}, {}, []
        columns = []
        for name in NUMERIC_FEATURES:
            values = np.array([float(getattr(p, name)) for p in rows])
            if values.var() < variance_threshold:
                dropped.append(name)
                continue
            means[name] = float(values.mean())
            stds[name] = float(values.std())
            columns.append(name)

        vocab = {}
        for name in CATEGORICAL_FEATURES:
            seen = sorted({getattr(p, name) for p in rows})
            if len(seen) < 2:
                # a single observed value is a constant column
                dropped.append(name)
                continue
            vocab[name] = seen
            columns.extend(f"{name}={v}" for v in seen)

        return cls(sorted(columns), means, stds, vocab, sorted(dropped))

    @property
    def dimension(self) -> int:
        return len(self.columns)

    def transform_one(self, profile: TrafficProfile) -> np.ndarray:
        missing = missing_features(profile)
        if missing:
            raise ValueError(f"profile {profile.site} missing features: {missing}")
        row = np.zeros(len(self.columns))
        for i, column in enumerate(self.columns):
            if "=" in column:
                name, value = column.split("=", 1)
                row[i] = 1.0 if str(getattr(profile, name)) == value else 0.0
            else:
                row[i] = (float(getattr(profile, column)) - self.means[column]) / self.stds[
                    column
                ]
        return row

    def transform(self, profiles) -> np.ndarray:
        return np.array([self.transform_one(p) for p in profiles])

    @staticmethod
    def labels(profiles) -> np.ndarray:
        bad = sorted({p.label for p in profiles} - set(LABEL_CODES))
        if bad:
            raise ValueError(f"profiles must be labeled fake/real, found {bad}")
        return np.array([LABEL_CODES[p.label] for p in profiles], dtype=int)

    def to_dict(self) -> dict:
        return {
            "columns": self.columns,
            "means": self.means,
            "stds": self.stds,
            "vocab": self.vocab,
            "dropped": self.dropped,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureEncoder":
        return cls(
            columns=list(data["columns"]),
            means=dict(data["means"]),
            stds=dict(data["stds"]),
            vocab={k: list(v) for k, v in data["vocab"].items()},
            dropped=list(data["dropped"]),
        )
