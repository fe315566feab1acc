"""Visible-text extraction from landing-page HTML and token preprocessing."""

from __future__ import annotations

import re
from functools import lru_cache
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path

_NON_CONTENT_TAGS = {"script", "style", "noscript", "template"}


class _VisibleTextParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self._suppress = 0
        self.chunks: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in _NON_CONTENT_TAGS:
            self._suppress += 1

    def handle_endtag(self, tag):
        if tag in _NON_CONTENT_TAGS and self._suppress:
            self._suppress -= 1

    def handle_data(self, data):
        if not self._suppress and data:
            self.chunks.append(data)


def extract_text(html: bytes | str) -> str:
    """Visible text of an HTML document.

    Markup is dropped, script/style/noscript/template contents removed,
    character references decoded and whitespace collapsed to single
    spaces.  Byte input is decoded as UTF-8 with replacement, so this
    never fails on malformed documents.
    """
    if isinstance(html, bytes):
        html = html.decode("utf-8", errors="replace")
    parser = _VisibleTextParser()
    try:
        parser.feed(html)
        parser.close()
    except Exception:
        # html.parser is tolerant; anything it still chokes on yields
        # whatever text was gathered before the failure
        pass
    return " ".join(" ".join(parser.chunks).split())


_TOKEN_RE = re.compile(r"[a-z]+")
_COMMENT_RE = re.compile(r"^\s*#")


def _load_lines(path: str | Path | None, default_resource: str) -> list[str]:
    if path is None:
        text = (resources.files("newsforensics.data") / default_resource).read_text(
            "utf-8"
        )
    else:
        text = Path(path).read_text("utf-8")
    out = []
    for line in text.splitlines():
        if not line.strip() or _COMMENT_RE.match(line):
            continue
        out.append(line.rstrip("\n"))
    return out


class Preprocessor:
    """Tokenizer with stopword removal and deterministic suffix normalization.

    Both word lists ship as plain-text data files and can be replaced by
    path; rules apply first-match-wins, once per token.
    """

    def __init__(self, stopwords_path=None, suffix_rules_path=None, min_token_len: int = 2):
        self.stopwords = frozenset(
            w.strip().lower() for w in _load_lines(stopwords_path, "stopwords.txt")
        )
        self.rules = self._parse_rules(_load_lines(suffix_rules_path, "suffix_rules.txt"))
        self.min_token_len = min_token_len

    @staticmethod
    def _parse_rules(lines: list[str]) -> list[tuple[re.Pattern, str]]:
        rules = []
        for line in lines:
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"bad suffix rule line: {line!r}")
            rules.append((re.compile(parts[0]), parts[1]))
        return rules

    def normalize(self, token: str) -> str:
        for pattern, replacement in self.rules:
            new, n = pattern.subn(replacement, token)
            if n:
                return new
        return token

    def tokens(self, text: str) -> list[str]:
        out = []
        for tok in _TOKEN_RE.findall(text.lower()):
            if len(tok) < self.min_token_len or tok in self.stopwords:
                continue
            out.append(self.normalize(tok))
        return out


@lru_cache(maxsize=1)
def default_preprocessor() -> Preprocessor:
    return Preprocessor()


def preprocess(text: str) -> list[str]:
    """Tokenize with the bundled stopword list and suffix rules."""
    return default_preprocessor().tokens(text)
