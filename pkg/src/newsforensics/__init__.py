"""Lifecycle forensics toolkit for news websites.

Reconstructs per-site monthly state timelines from web-archive snapshots,
detects uptime- and content-synchronized site clusters, audits embedded
third-party trackers, summarizes audience-engagement data and trains
content-agnostic fake/real news classifiers on traffic features.
"""

__version__ = "0.1.0"

from .timeline import (  # noqa: F401
    MonthStamp,
    MonthlyTimeline,
    Quarter,
    SiteState,
    aggregate_month,
    interpolate,
    interpolate_p1,
    interpolate_p2,
    lifetime_summary,
    normalize_site,
)
