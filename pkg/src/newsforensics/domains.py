"""Registrable-domain extraction against a pinned public-suffix snapshot.

Implements the publicsuffix.org matching algorithm (longest matching
rule wins, exception rules beat wildcards, unlisted TLDs fall back to
the implicit "*" rule) over a bundled snapshot file that callers can
replace with a newer list.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable


class PublicSuffixList:
    def __init__(self, rules: Iterable[str]):
        self._rules: set[tuple[str, ...]] = set()
        self._exceptions: set[tuple[str, ...]] = set()
        for raw in rules:
            line = raw.strip()
            if not line or line.startswith("//"):
                continue
            line = line.split()[0].lower()
            if line.startswith("!"):
                self._exceptions.add(tuple(line[1:].split(".")))
            else:
                self._rules.add(tuple(line.split(".")))

    @classmethod
    def from_file(cls, path: str | Path) -> "PublicSuffixList":
        return cls(Path(path).read_text("utf-8").splitlines())

    @classmethod
    def bundled(cls) -> "PublicSuffixList":
        text = (
            resources.files("newsforensics.data") / "public_suffix_list.dat"
        ).read_text("utf-8")
        return cls(text.splitlines())

    @staticmethod
    def _matches(rule: tuple[str, ...], labels: tuple[str, ...]) -> bool:
        if len(rule) > len(labels):
            return False
        for rule_label, label in zip(reversed(rule), reversed(labels)):
            if rule_label != "*" and rule_label != label:
                return False
        return True

    def public_suffix(self, host: str) -> str | None:
        """Longest public suffix of a hostname, or None for invalid input."""
        host = host.strip().lower().rstrip(".")
        if not host or host.startswith(".") or ".." in host:
            return None
        labels = tuple(host.split("."))
        if any(not label for label in labels):
            return None
        for rule in self._exceptions:
            if self._matches(rule, labels):
                # an exception rule's suffix is the rule minus its first label
                return ".".join(labels[len(labels) - len(rule) + 1 :])
        best = 1  # implicit "*": the bare TLD is always a public suffix
        for rule in self._rules:
            if self._matches(rule, labels) and len(rule) > best:
                best = len(rule)
        return ".".join(labels[len(labels) - best :])

    def registrable_domain(self, host: str) -> str | None:
        """Public suffix plus one label; None if the host is a bare suffix."""
        suffix = self.public_suffix(host)
        if suffix is None:
            return None
        host = host.strip().lower().rstrip(".")
        n_suffix = suffix.count(".") + 1
        labels = host.split(".")
        if len(labels) <= n_suffix:
            return None
        return ".".join(labels[len(labels) - n_suffix - 1 :])


@lru_cache(maxsize=1)
def bundled_psl() -> PublicSuffixList:
    return PublicSuffixList.bundled()


def registrable_domain(host: str, psl: PublicSuffixList | None = None) -> str | None:
    return (psl or bundled_psl()).registrable_domain(host)
