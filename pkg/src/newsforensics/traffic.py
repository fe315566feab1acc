"""Audience-engagement statistics over per-site traffic profiles.

Profiles come from provider exports (CSV or JSON lines) with a fixed
schema; invalid rows are rejected with row-level diagnostics.  Summary
statistics use population standard deviation and linear-interpolation
percentiles so that published tables are reproducible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .timeline import normalize_site

REQUIRED_COLUMNS = [
    "domain",
    "label",
    "global_rank",
    "country_rank",
    "category_rank",
    "country",
    "category",
    "total_visits",
    "pages_per_visit",
    "visit_duration_s",
    "bounce_rate",
    "src_direct",
    "src_referrals",
    "src_search",
    "src_social",
    "src_mail",
    "src_display",
    "backlinks",
    "referring_domains",
    "edu_backlinks",
    "gov_backlinks",
    "edu_ref_domains",
    "gov_ref_domains",
]

SHARE_FIELDS = (
    "src_direct",
    "src_referrals",
    "src_search",
    "src_social",
    "src_mail",
    "src_display",
)

_INT_FIELDS = (
    "global_rank",
    "country_rank",
    "category_rank",
    "total_visits",
    "backlinks",
    "referring_domains",
    "edu_backlinks",
    "gov_backlinks",
    "edu_ref_domains",
    "gov_ref_domains",
)

_FLOAT_FIELDS = ("pages_per_visit", "visit_duration_s", "bounce_rate") + SHARE_FIELDS

_SUFFIX_MULTIPLIERS = {"K": 1000, "M": 1000000, "B": 1000000000}


@dataclass(frozen=True)
class TrafficProfile:
    site: str
    label: str  # "fake" or "real"
    global_rank: int | None = None
    country_rank: int | None = None
    category_rank: int | None = None
    country: str | None = None
    category: str | None = None
    total_visits: int | None = None
    pages_per_visit: float | None = None
    visit_duration_s: float | None = None
    bounce_rate: float | None = None
    src_direct: float | None = None
    src_referrals: float | None = None
    src_search: float | None = None
    src_social: float | None = None
    src_mail: float | None = None
    src_display: float | None = None
    backlinks: int | None = None
    referring_domains: int | None = None
    edu_backlinks: int | None = None
    gov_backlinks: int | None = None
    edu_ref_domains: int | None = None
    gov_ref_domains: int | None = None


METRIC_FIELDS = [
    f.name
    for f in fields(TrafficProfile)
    if f.name not in ("site", "label", "country", "category")
]


def parse_quantity(raw: str) -> int:
    """Parse provider-style counts like ``4.7K`` or ``23.2M`` into exact ints."""
    text = raw.strip().replace(",", "")
    mult = 1
    if text and text[-1].upper() in _SUFFIX_MULTIPLIERS:
        mult = _SUFFIX_MULTIPLIERS[text[-1].upper()]
        text = text[:-1]
    try:
        value = Decimal(text) * mult
    except InvalidOperation:
        raise ValueError(f"not a quantity: {raw!r}") from None
    if value != value.to_integral_value():
        raise ValueError(f"not a whole count: {raw!r}")
    return int(value)


@dataclass(frozen=True)
class RowError:
    line: int
    site: str
    reason: str


def _blank(value) -> bool:
    return value is None or (isinstance(value, str) and not value.strip())


def _parse_row(row: dict, line: int, allow_unlabeled: bool = False) -> TrafficProfile:
    site = normalize_site(str(row["domain"]))
    label = str(row.get("label") or "").strip().lower()
    if label not in ("fake", "real"):
        if allow_unlabeled and not label:
            label = "unknown"
        else:
            raise ValueError(f"label must be fake or real, got {row.get('label')!r}")

    values: dict = {"site": site, "label": label}
    for name in ("country", "category"):
        values[name] = None if _blank(row.get(name)) else str(row[name]).strip()
    for name in _INT_FIELDS:
        raw = row.get(name)
        if _blank(raw):
            values[name] = None
            continue
        if isinstance(raw, float) and not raw.is_integer():
            raise ValueError(f"{name} must be a whole count, got {raw}")
        v = parse_quantity(str(raw)) if isinstance(raw, str) else int(raw)
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v}")
        values[name] = v
    for name in _FLOAT_FIELDS:
        raw = row.get(name)
        values[name] = None if _blank(raw) else float(raw)

    for name in ("global_rank", "country_rank", "category_rank"):
        if values[name] is not None and values[name] < 1:
            raise ValueError(f"{name} must be positive, got {values[name]}")
    for name in ("bounce_rate",) + SHARE_FIELDS:
        v = values[name]
        if v is not None and not 0.0 <= v <= 100.0:
            raise ValueError(f"{name} out of [0, 100]: {v}")
    shares = [values[name] for name in SHARE_FIELDS]
    if all(s is not None for s in shares):
        total = sum(shares)
        if not 99.0 <= total <= 101.0:
            raise ValueError(f"traffic source shares sum to {total:.2f}, not ~100")
    for part, whole in (
        ("edu_backlinks", "backlinks"),
        ("gov_backlinks", "backlinks"),
        ("edu_ref_domains", "referring_domains"),
        ("gov_ref_domains", "referring_domains"),
    ):
        if (
            values[part] is not None
            and values[whole] is not None
            and values[part] > values[whole]
        ):
            raise ValueError(f"{part} ({values[part]}) exceeds {whole} ({values[whole]})")
    return TrafficProfile(**values)


def load_profiles(
    path: str | Path, schema: str | None = None, allow_unlabeled: bool = False
) -> tuple[list[TrafficProfile], list[RowError]]:
    """Load traffic profiles from a CSV or JSON-lines export.

    The schema is inferred from the file extension unless given
    ("csv" or "json-lines").  A missing required column is a hard
    error; rows violating value invariants are returned as RowErrors.
    With allow_unlabeled, rows may leave the label blank (prediction
    inputs) and get label "unknown".
    """
    path = Path(path)
    if schema is None:
        schema = "json-lines" if path.suffix in (".jsonl", ".ndjson", ".json") else "csv"
    if schema not in ("csv", "json-lines"):
        raise ValueError(f"unknown schema {schema!r}")

    required = [
        c for c in REQUIRED_COLUMNS if not (allow_unlabeled and c == "label")
    ]
    rows: list[tuple[int, dict]] = []
    if schema == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = set(reader.fieldnames or [])
            for col in required:
                if col not in header:
                    raise ValueError(f"missing required column: {col}")
            rows = [(i, row) for i, row in enumerate(reader, start=2)]
    else:
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                for col in required:
                    if col not in rec:
                        raise ValueError(f"missing required column: {col} (line {i})")
                rows.append((i, rec))

    profiles, errors = [], []
    for line, row in rows:
        try:
            profiles.append(_parse_row(row, line, allow_unlabeled=allow_unlabeled))
        except (ValueError, KeyError) as exc:
            errors.append(RowError(line, str(row.get("domain", "?")), str(exc)))
    return profiles, errors


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    std: float
    median: float
    p90: float
    count: int


def describe(values: Sequence[float], sample_std: bool = False) -> DescriptiveStats:
    """Mean, std, median and 90th percentile (linear interpolation).

    Std is population (divide by N) by default; sample_std switches to
    the N-1 divisor.
    """
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("cannot describe an empty sequence")
    ddof = 1 if sample_std and arr.size > 1 else 0
    return DescriptiveStats(
        mean=float(arr.mean()),
        std=float(arr.std(ddof=ddof)),
        median=float(np.median(arr)),
        p90=float(np.percentile(arr, 90, method="linear")),
        count=int(arr.size),
    )


def ecdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF points (value, fraction of observations <= value)."""
    arr = sorted(values)
    if not arr:
        raise ValueError("cannot compute the ECDF of an empty sequence")
    n = len(arr)
    points = []
    for i, v in enumerate(arr, start=1):
        if i == n or arr[i] != v:
            points.append((float(v), i / n))
    return points


@dataclass(frozen=True)
class EduGovRatios:
    edu_backlink_ratio: float
    gov_backlink_ratio: float
    edu_ref_domain_ratio: float
    gov_ref_domain_ratio: float


def _ratio(part: int | None, whole: int | None) -> float:
    if not whole or part is None:
        return 0.0
    return part / whole


def edu_gov_ratios(p: TrafficProfile) -> EduGovRatios:
    """EDU/GOV shares of backlinks and referring domains; 0 for empty totals."""
    return EduGovRatios(
        _ratio(p.edu_backlinks, p.backlinks),
        _ratio(p.gov_backlinks, p.backlinks),
        _ratio(p.edu_ref_domains, p.referring_domains),
        _ratio(p.gov_ref_domains, p.referring_domains),
    )


@dataclass
class CohortReport:
    """Per-metric, per-label descriptive statistics plus ECDF exports."""

    stats: dict[str, dict[str, DescriptiveStats]]  # metric -> label -> stats
    ecdfs: dict[str, dict[str, list[tuple[float, float]]]]
    ratio_ecdfs: dict[str, dict[str, list[tuple[float, float]]]]
    warnings: list[str]

    def to_dict(self) -> dict:
        return {
            "stats": {
                metric: {
                    label: vars(s) for label, s in sorted(per_label.items())
                }
                for metric, per_label in sorted(self.stats.items())
            },
            "ecdfs": self.ecdfs,
            "ratio_ecdfs": self.ratio_ecdfs,
            "warnings": self.warnings,
        }


def cohort_report(
    profiles: Iterable[TrafficProfile], sample_std: bool = False
) -> CohortReport:
    """Summary table over fake and real cohorts; absent values excluded per metric."""
    profiles = list(profiles)
    labels = sorted({p.label for p in profiles})
    warnings = []
    if len(labels) < 2:
        warnings.append(
            f"only {labels or 'no'} label(s) present; table is partial"
        )

    stats: dict[str, dict[str, DescriptiveStats]] = {}
    ecdfs: dict[str, dict[str, list]] = {}
    for metric in METRIC_FIELDS:
        for label in labels:
            values = [
                getattr(p, metric)
                for p in profiles
                if p.label == label and getattr(p, metric) is not None
            ]
            if not values:
                continue
            stats.setdefault(metric, {})[label] = describe(values, sample_std=sample_std)
            ecdfs.setdefault(metric, {})[label] = ecdf(values)

    ratio_ecdfs: dict[str, dict[str, list]] = {}
    ratio_fields = [f.name for f in fields(EduGovRatios)]
    for label in labels:
        ratios = [edu_gov_ratios(p) for p in profiles if p.label == label]
        if not ratios:
            continue
        for name in ratio_fields:
            ratio_ecdfs.setdefault(name, {})[label] = ecdf(
                [getattr(r, name) for r in ratios]
            )
    return CohortReport(stats, ecdfs, ratio_ecdfs, warnings)
