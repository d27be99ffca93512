"""Provider interfaces: embedding, structured judgment, reranking.

All three are abstract; deterministic in-process mocks live in mock.py and
HTTP-backed clients in remote.py. Retry and bounded fan-out helpers here are
shared so callers stay sequential-looking.
"""

from __future__ import annotations

import random
import string
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_MAX_WORKERS = 8
RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 0.5


class ProviderError(Exception):
    """Base class for provider failures."""


class ProviderUnavailable(ProviderError):
    """Transport or service failure that survived bounded retries."""


class EmptyInput(ProviderError):
    """Caller passed no texts / no candidates."""


class SchemaViolation(ProviderError):
    """Judge output did not conform to the requested schema after a reformat retry."""


class UnknownTemplate(ProviderError):
    """Judge request referenced a template id that is not registered."""


class DimensionMismatch(ProviderError):
    """Vector dimensionality does not match the expected dim."""


@dataclass(frozen=True)
class JudgeTemplate:
    """A registered prompt template with its output schema."""

    template_id: str
    prompt_file: str
    schema_id: str

    def render(self, bindings: dict) -> str:
        text = (
            resources.files("challengeforge.prompts")
            .joinpath(self.prompt_file)
            .read_text(encoding="utf-8")
        )
        return string.Template(text).safe_substitute(
            {k: _binding_text(v) for k, v in bindings.items()}
        )


def _binding_text(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        return "\n".join(_binding_text(v) for v in value)
    if isinstance(value, dict):
        return ", ".join(f"{k}: {_binding_text(v)}" for k, v in value.items())
    return str(value)


TEMPLATES: dict[str, JudgeTemplate] = {
    t.template_id: t
    for t in (
        JudgeTemplate("page_filter", "page_filter.txt", "likelihood"),
        JudgeTemplate("challenge_extract", "challenge_extract.txt", "challenge_items"),
        JudgeTemplate("pair_duplicate", "pair_duplicate.txt", "duplicate_verdict"),
        JudgeTemplate("search_validate", "search_validate.txt", "relevance_flags"),
    )
}


def get_template(template_id: str) -> JudgeTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise UnknownTemplate(template_id) from None


@dataclass
class JudgeRequest:
    """Prompt template id plus variable bindings."""

    template_id: str
    bindings: dict = field(default_factory=dict)


@dataclass
class JudgeResponse:
    """Schema-conforming structured value plus the raw model text."""

    value: object
    raw_text: str = ""


class Embedder:
    """Maps texts to unit-normalized vectors, one row per input, same order."""

    dim: int
    provider_tag: str

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        raise NotImplementedError

    def embed_one(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]


class Judge:
    """Structured judgment behind a prompt-template registry."""

    def judge_json(self, request: JudgeRequest) -> JudgeResponse:
        raise NotImplementedError


class Reranker:
    """Scores candidates against a query; returns (index, score) sorted by score."""

    def rerank(self, query: str, candidates: Sequence[str]) -> list[tuple[int, float]]:
        raise NotImplementedError


def check_texts(texts: Sequence[str]) -> None:
    if len(texts) == 0:
        raise EmptyInput("no texts to embed")
    for t in texts:
        if not t or not t.strip():
            raise EmptyInput("empty text in batch")


def call_with_retries(
    fn: Callable,
    *,
    attempts: int = RETRY_ATTEMPTS,
    base_delay: float = RETRY_BASE_DELAY,
    retry_on: tuple = (ProviderUnavailable,),
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
):
    """Call fn() with exponential backoff and jitter; re-raise after the last attempt."""
    rng = rng or random.Random()
    last: Exception | None = None
    for attempt in range(attempts):
        try:
            return fn()
        except retry_on as exc:
            last = exc
            if attempt + 1 < attempts:
                delay = base_delay * (2**attempt)
                sleep(delay + rng.uniform(0, delay * 0.1))
    raise ProviderUnavailable(f"gave up after {attempts} attempts: {last}") from last


def map_settled(
    fn: Callable, items: Iterable, max_workers: int = DEFAULT_MAX_WORKERS
) -> list[tuple[bool, object]]:
    """Apply fn to every item with bounded parallelism.

    Results come back in input order as (ok, value-or-exception) pairs so a
    failed item never aborts the batch.
    """
    items = list(items)
    if not items:
        return []

    def settled(item):
        try:
            return True, fn(item)
        except Exception as exc:
            return False, exc

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(settled, items))


def map_bounded(fn: Callable, items: Iterable, max_workers: int = DEFAULT_MAX_WORKERS) -> list:
    """Like map_settled but re-raises the first failure."""
    out = []
    for ok, value in map_settled(fn, items, max_workers=max_workers):
        if not ok:
            raise value
        out.append(value)
    return out
