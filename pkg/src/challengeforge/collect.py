"""Web collection: SERP ingestion, domain blocking, page text extraction and
judge-scored page filtering.

Live SERP APIs and headless crawling sit behind the PageFetcher interface;
the default implementation reads file fixtures so the whole stage is
deterministic and offline.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from typing import Iterable, Sequence
from urllib.parse import urlsplit

from .model import BadUrl, CorpusStats, PageDocument, SearchResultRecord, normalize_url
from .providers import Judge, JudgeRequest, map_settled

logger = logging.getLogger(__name__)

SCORE_TEXT_CHARS = 4000  # judge cost bound: score on the first 4k chars only
DEFAULT_KEEP_THRESHOLD = 6


class ParseError(ValueError):
    def __init__(self, file: str, line: int, reason: str):
        super().__init__(f"{file}:{line}: {reason}")
        self.file = file
        self.line = line


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    theme: str  # "general" or "themed"


@dataclass
class QuerySet:
    queries: list[Query] = field(default_factory=list)

    def __post_init__(self):
        ids = [q.id for q in self.queries]
        if len(ids) != len(set(ids)):
            raise ValueError("query ids must be unique")

    @classmethod
    def default(cls) -> "QuerySet":
        """The 25 stock queries: 11 general, 14 theme-specific."""
        text = resources.files("challengeforge.data").joinpath("queries.tsv").read_text("utf-8")
        queries = []
        for line in text.splitlines():
            if not line.strip():
                continue
            qid, theme, qtext = line.split("\t")
            queries.append(Query(qid, qtext, theme))
        return cls(queries)


@dataclass
class Blocklist:
    """Registrable base domains to drop; lowercase, no scheme."""

    base_domains: set[str] = field(default_factory=set)

    @classmethod
    def default(cls) -> "Blocklist":
        text = resources.files("challengeforge.data").joinpath("blocklist.txt").read_text("utf-8")
        return cls.from_lines(text.splitlines())

    @classmethod
    def from_file(cls, path) -> "Blocklist":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Blocklist":
        domains = set()
        for line in lines:
            line = line.split("#", 1)[0].strip().lower()
            if line:
                domains.add(line)
        return cls(domains)

    def blocks(self, url: str) -> bool:
        """True when the URL's host is a blocked domain or a subdomain of one.

        Suffix matching is on whole labels, so pinterest.com.evil.org is not
        caught by pinterest.com.
        """
        host = (urlsplit(url).hostname or "").lower()
        return any(host == d or host.endswith("." + d) for d in self.base_domains)


def ingest_serp(files: Sequence, stats: CorpusStats | None = None) -> list[SearchResultRecord]:
    """Read SERP fixture files (JSONL: query_id, url, title, snippet) into
    records unique by normalized URL; first occurrence wins, first-seen order."""
    records: list[SearchResultRecord] = []
    seen: set[str] = set()
    n_raw = 0
    for path in files:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(str(path), lineno, f"bad JSON: {exc.msg}") from exc
                if not isinstance(raw, dict) or not raw.get("url"):
                    raise ParseError(str(path), lineno, "record must have a url")
                n_raw += 1
                try:
                    url = normalize_url(raw["url"])
                except BadUrl as exc:
                    raise ParseError(str(path), lineno, str(exc)) from exc
                if url in seen:
                    continue
                seen.add(url)
                records.append(
                    SearchResultRecord(
                        url=url,
                        title=raw.get("title", ""),
                        snippet=raw.get("snippet", ""),
                        query_id=raw.get("query_id", ""),
                    )
                )
    if stats is not None:
        stats.n_raw_results += n_raw
        stats.n_unique_urls += len(records)
    return records


def apply_blocklist(
    records: Sequence[SearchResultRecord], blocklist: Blocklist
) -> list[SearchResultRecord]:
    """Drop records whose registrable base domain is blocked."""
    return [r for r in records if not blocklist.blocks(r.url)]


_SKIP_TAGS = {"script", "style", "nav", "header", "footer", "noscript", "template", "iframe", "svg"}
_BLOCK_TAGS = {
    "p", "div", "br", "hr", "li", "ul", "ol", "dl", "dt", "dd", "h1", "h2", "h3",
    "h4", "h5", "h6", "section", "article", "main", "aside", "blockquote", "pre",
    "table", "tr", "figure", "figcaption", "form",
}


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_startendtag(self, tag, attrs):
        if tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        if self._skip_depth == 0:
            self.parts.append(data)


def html_to_text(html: str) -> str:
    """Extract body text: script/style/nav/header/footer subtrees are dropped,
    block elements become line breaks, whitespace is collapsed. Malformed
    markup degrades to best-effort text."""
    parser = _TextExtractor()
    parser.feed(html)
    parser.close()
    lines = []
    for chunk in "".join(parser.parts).split("\n"):
        line = " ".join(chunk.split())
        if line:
            lines.append(line)
    return "\n".join(lines)


class PageFetcher:
    """Resolves a URL to raw HTML, or None when the page is unavailable."""

    def fetch(self, url: str) -> str | None:
        raise NotImplementedError


class FixturePageFetcher(PageFetcher):
    """Serves HTML from a JSONL fixture of {url, html} records (urls normalized)."""

    def __init__(self, pages: dict[str, str]):
        self.pages = pages

    @classmethod
    def from_file(cls, path) -> "FixturePageFetcher":
        pages = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    raw = json.loads(line)
                    pages[normalize_url(raw["url"])] = raw["html"]
        return cls(pages)

    def fetch(self, url: str) -> str | None:
        return self.pages.get(url)


def fetch_pages(
    records: Sequence[SearchResultRecord], fetcher: PageFetcher
) -> tuple[list[PageDocument], dict]:
    """Fetch and text-extract every record's page; pages that are missing or
    reduce to empty text are skipped and counted."""
    docs = []
    counters = {"fetched": 0, "missing": 0, "empty": 0}
    for rec in records:
        html = fetcher.fetch(rec.url)
        if html is None:
            counters["missing"] += 1
            continue
        text = html_to_text(html)
        if not text:
            counters["empty"] += 1
            continue
        counters["fetched"] += 1
        docs.append(PageDocument(url=rec.url, text=text, title=rec.title, snippet=rec.snippet))
    return docs, counters


def score_page(doc: PageDocument, judge: Judge) -> int:
    """Judge-scored likelihood (0-10) that the page holds usable challenges."""
    if not doc.text:
        raise ValueError("cannot score a page with empty text")
    response = judge.judge_json(
        JudgeRequest(
            "page_filter",
            {
                "url": doc.url,
                "title": doc.title,
                "snippet": doc.snippet,
                "text": doc.text[:SCORE_TEXT_CHARS],
            },
        )
    )
    return int(response.value["score"])


def filter_pages(
    docs: Sequence[PageDocument],
    judge: Judge,
    keep_threshold: int = DEFAULT_KEEP_THRESHOLD,
    max_workers: int = 8,
    stats: CorpusStats | None = None,
) -> tuple[list[PageDocument], dict]:
    """Score pages in parallel and keep those with score >= keep_threshold.

    A page whose judge call fails is left unscored and excluded (counted as
    failed), so one outage never aborts the stage.
    """
    results = map_settled(lambda d: score_page(d, judge), docs, max_workers=max_workers)
    kept: list[PageDocument] = []
    counters = {"scored": 0, "kept": 0, "dropped": 0, "failed": 0}
    for doc, (ok, value) in zip(docs, results):
        if not ok:
            counters["failed"] += 1
            logger.warning("page scoring failed for %s: %s", doc.url, value)
            continue
        counters["scored"] += 1
        doc.likelihood = value
        if value >= keep_threshold:
            counters["kept"] += 1
            kept.append(doc)
        else:
            counters["dropped"] += 1
    if stats is not None:
        stats.n_filtered_pages += len(kept)
    return kept, counters
