"""Domain types shared by every pipeline stage, plus record validation and URL normalization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Iterable, Mapping
from urllib.parse import urlsplit, urlunsplit, parse_qsl, urlencode

CREATED_FROM = ("extracted", "fixture")

TRACKING_PARAMS = ("fbclid", "gclid")
TRACKING_PREFIXES = ("utm_",)

DEFAULT_PORTS = {"http": 80, "https": 443}


class BadUrl(ValueError):
    """Raised when a URL cannot be parsed into an absolute http(s) URL."""


@dataclass(frozen=True)
class FieldError:
    """One validation failure: code is 'missing_field', 'empty_field' or 'bad_url'."""

    code: str
    field: str

    def __str__(self) -> str:
        return f"{self.code}({self.field})"


@dataclass
class Challenge:
    """One 30-day challenge record, the corpus atom."""

    id: str
    title: str
    description: str
    wish: str
    daily_action: str
    source_url: str
    created_from: str = "extracted"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "Challenge":
        return cls(
            id=d["id"],
            title=d["title"],
            description=d.get("description", ""),
            wish=d["wish"],
            daily_action=d["daily_action"],
            source_url=d["source_url"],
            created_from=d.get("created_from", "extracted"),
        )


@dataclass
class SearchResultRecord:
    """A single SERP hit."""

    url: str
    title: str = ""
    snippet: str = ""
    query_id: str = ""


@dataclass
class PageDocument:
    """A fetched page with extracted body text.

    likelihood is the 0-10 usefulness score; None until the page is scored.
    title/snippet carry SERP provenance used when scoring.
    """

    url: str
    text: str
    likelihood: int | None = None
    title: str = ""
    snippet: str = ""

    def __post_init__(self):
        if self.likelihood is not None and not 0 <= self.likelihood <= 10:
            raise ValueError(f"likelihood out of range: {self.likelihood}")


@dataclass
class CorpusStats:
    """Per-stage corpus counts; monotone shrinkage is enforced by validate()."""

    n_raw_results: int = 0
    n_unique_urls: int = 0
    n_filtered_pages: int = 0
    n_extracted: int = 0
    n_deduped: int = 0

    def validate(self) -> None:
        if not self.n_filtered_pages <= self.n_unique_urls <= self.n_raw_results:
            raise ValueError("page counts must shrink: filtered <= unique <= raw")
        if self.n_deduped > self.n_extracted:
            raise ValueError("deduped count exceeds extracted count")

    def to_dict(self) -> dict:
        return asdict(self)


def challenge_id(counter: int) -> str:
    """Stable id for the counter-th extracted challenge (insertion order)."""
    return f"c{counter:05d}"


def normalize_url(raw: str) -> str:
    """Canonicalize a URL: lowercase scheme/host, strip default port, trailing
    slash, fragment and tracking params (utm_*, fbclid, gclid); sort the rest.

    Raises BadUrl when the input is not an absolute http(s) URL.
    """
    if not raw or not raw.strip():
        raise BadUrl("empty URL")
    try:
        parts = urlsplit(raw.strip())
    except ValueError as exc:
        raise BadUrl(f"unparseable URL: {raw!r}") from exc

    scheme = parts.scheme.lower()
    if scheme not in DEFAULT_PORTS:
        raise BadUrl(f"not an absolute http(s) URL: {raw!r}")
    if not parts.netloc:
        raise BadUrl(f"missing host: {raw!r}")

    try:
        port = parts.port
    except ValueError as exc:
        raise BadUrl(f"invalid port: {raw!r}") from exc

    host = (parts.hostname or "").lower()
    if not host:
        raise BadUrl(f"missing host: {raw!r}")
    netloc = host
    if port is not None and port != DEFAULT_PORTS[scheme]:
        netloc = f"{host}:{port}"

    path = parts.path.rstrip("/")

    pairs = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if k not in TRACKING_PARAMS and not k.startswith(TRACKING_PREFIXES)
    ]
    query = urlencode(sorted(pairs))

    return urlunsplit((scheme, netloc, path, query, ""))


def validate_challenge(
    record: Mapping[str, object], id: str = "", created_from: str = "extracted"
) -> tuple[Challenge | None, list[FieldError]]:
    """Build a Challenge from a raw field map, or report every violation.

    Returns (challenge, []) when all invariants hold, else (None, errors).
    The record's "url" key (falling back to "source_url") is normalized into
    source_url. description may be empty; title, wish and daily_action may not.
    """
    errors: list[FieldError] = []

    def text_field(name: str, required: bool) -> str:
        value = record.get(name)
        if value is None:
            if required:
                errors.append(FieldError("missing_field", name))
            return ""
        value = str(value).strip()
        if required and not value:
            errors.append(FieldError("empty_field", name))
        return value

    title = text_field("title", required=True)
    description = text_field("description", required=False)
    wish = text_field("wish", required=True)
    daily_action = text_field("daily_action", required=True)

    raw_url = record.get("url", record.get("source_url"))
    source_url = ""
    if raw_url is None:
        errors.append(FieldError("missing_field", "url"))
    else:
        try:
            source_url = normalize_url(str(raw_url))
        except BadUrl:
            errors.append(FieldError("bad_url", "url"))

    if errors:
        return None, errors
    return (
        Challenge(
            id=id,
            title=title,
            description=description,
            wish=wish,
            daily_action=daily_action,
            source_url=source_url,
            created_from=created_from,
        ),
        [],
    )


def write_challenges_jsonl(path, challenges: Iterable[Challenge]) -> None:
    """One JSON object per line, UTF-8, field names as on the type."""
    with open(path, "w", encoding="utf-8") as fh:
        for ch in challenges:
            fh.write(json.dumps(ch.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_challenges_jsonl(path) -> list[Challenge]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Challenge.from_dict(json.loads(line)))
    return out
