"""Detection of sites that synchronize their uptime or published content.

Uptime synchronization compares quarter-aggregated alive counts by
euclidean distance; content synchronization compares per-month TF-IDF
vectors of landing-page text by cosine similarity and groups matched
pairs into clusters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .textproc import Preprocessor, default_preprocessor
from .tfidf import build_tfidf, cosine
from .timeline import MonthStamp, MonthlyTimeline, Quarter, SiteState


@dataclass(frozen=True)
class QuarterSeries:
    """Alive-month counts (0..3) per quarter for one site."""

    site: str
    start: Quarter
    values: tuple[int, ...]

    def __post_init__(self):
        if any(v not in (0, 1, 2, 3) for v in self.values):
            raise ValueError("quarter values must be in 0..3")


def quarterize(
    t: MonthlyTimeline, window: tuple[Quarter, Quarter]
) -> QuarterSeries:
    """Count alive months per quarter; months outside the timeline count 0."""
    start, end = window
    if end < start:
        raise ValueError(f"empty quarter window: {start}..{end}")
    values = []
    q = start
    while q <= end:
        values.append(
            sum(1 for m in q.months() if t.state_at(m) is SiteState.ALIVE)
        )
        q = q.plus(1)
    return QuarterSeries(t.site, start, tuple(values))


@dataclass(frozen=True)
class UptimePair:
    site_a: str
    site_b: str
    distance: float


def euclidean(a: QuarterSeries, b: QuarterSeries) -> float:
    if a.start != b.start or len(a.values) != len(b.values):
        raise ValueError(f"quarter windows differ: {a.site} vs {b.site}")
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a.values, b.values)))


def pairwise_uptime(
    series: Iterable[QuarterSeries], max_distance: float = 0.0
) -> list[UptimePair]:
    """All unordered site pairs within max_distance, closest first."""
    ss = sorted(series, key=lambda s: s.site)
    if len(ss) < 2:
        raise ValueError("need at least two series")
    pairs = []
    for i, a in enumerate(ss):
        for b in ss[i + 1 :]:
            d = euclidean(a, b)
            if d <= max_distance:
                pairs.append(UptimePair(a.site, b.site, d))
    pairs.sort(key=lambda p: (p.distance, p.site_a, p.site_b))
    return pairs


@dataclass(frozen=True)
class ContentMatch:
    site_a: str
    site_b: str
    month: MonthStamp
    similarity: float


@dataclass(frozen=True)
class SyncCluster:
    """Sites found publishing near-identical content, with the months involved."""

    sites: frozenset[str]
    months: frozenset[MonthStamp]


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def detect_content_sync(
    texts_by_month: Mapping[MonthStamp, Mapping[str, str]],
    threshold: float = 0.5,
    min_tokens: int = 10,
    preprocessor: Preprocessor | None = None,
) -> tuple[list[ContentMatch], list[SyncCluster]]:
    """Find site pairs serving near-duplicate content, month by month.

    Input is extracted landing-page text keyed by month then site.
    Months with fewer than two usable documents are skipped, and
    near-empty documents (< min_tokens tokens) are excluded to suppress
    trivially similar parked pages.  Matched pairs form per-month
    connected components, merged across consecutive months that share a
    member site.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    pre = preprocessor or default_preprocessor()

    matches: list[ContentMatch] = []
    components_by_month: dict[MonthStamp, list[frozenset[str]]] = {}
    for month in sorted(texts_by_month):
        corpus = {}
        for site in sorted(texts_by_month[month]):
            tokens = pre.tokens(texts_by_month[month][site])
            if len(tokens) >= min_tokens:
                corpus[site] = tokens
        if len(corpus) < 2:
            continue
        vectors = build_tfidf(corpus)
        sites = sorted(vectors)
        uf = _UnionFind()
        month_matched = set()
        for i, a in enumerate(sites):
            for b in sites[i + 1 :]:
                sim = cosine(vectors[a], vectors[b])
                if sim >= threshold:
                    matches.append(ContentMatch(a, b, month, sim))
                    uf.union(a, b)
                    month_matched.update((a, b))
        groups: dict[str, set[str]] = {}
        for site in sorted(month_matched):
            groups.setdefault(uf.find(site), set()).add(site)
        components_by_month[month] = [frozenset(g) for g in groups.values()]

    # merge components of consecutive months that share a member
    cluster_uf = _UnionFind()
    nodes = [
        (month, comp)
        for month in sorted(components_by_month)
        for comp in components_by_month[month]
    ]
    for month, comp in nodes:
        nxt = month.plus(1)
        for other in components_by_month.get(nxt, []):
            if comp & other:
                cluster_uf.union((month, comp), (nxt, other))
    merged: dict = {}
    for node in nodes:
        root = cluster_uf.find(node)
        sites_acc, months_acc = merged.setdefault(root, (set(), set()))
        sites_acc.update(node[1])
        months_acc.add(node[0])
    clusters = [
        SyncCluster(frozenset(s), frozenset(m)) for s, m in merged.values()
    ]
    clusters.sort(key=lambda c: (min(c.months), sorted(c.sites)))
    return matches, clusters
