"""Runtime search: embed the wish, retrieve by cosine, rerank, validate.

Rerank and validation degrade gracefully: when their provider fails the
retrieval result is still served, flagged degraded. Only an embedding failure
is fatal to a query.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .model import Challenge
from .providers import Judge, JudgeRequest, ProviderError, Reranker
from .store import ChallengeStore, ProviderTagMismatch, topk

logger = logging.getLogger(__name__)

DEFAULT_K = 5
MAX_K = 50
DEFAULT_RETRIEVE_K = 50
MAX_RETRIEVE_K = 200
VALIDATE_DEPTH = 20


class BadRequest(ValueError):
    """Request violates the parameter contract."""


class ServiceUnavailable(Exception):
    """Embedding provider failure; the query cannot be served at all."""


@dataclass
class SearchRequest:
    wish: str
    k: int = DEFAULT_K
    retrieve_k: int = DEFAULT_RETRIEVE_K
    validate: bool = True

    def check(self) -> None:
        if not self.wish or not self.wish.strip():
            raise BadRequest("wish must be nonempty")
        if not 1 <= self.k <= MAX_K:
            raise BadRequest(f"k must be in [1, {MAX_K}]: {self.k}")
        if not self.k <= self.retrieve_k <= MAX_RETRIEVE_K:
            raise BadRequest(
                f"retrieve_k must be in [k, {MAX_RETRIEVE_K}]: {self.retrieve_k}"
            )


@dataclass
class SearchResult:
    challenge: Challenge
    retrieval_score: float
    rerank_score: float | None = None
    validated: bool = False
    rank: int = 0

    def to_dict(self) -> dict:
        return {
            "id": self.challenge.id,
            "title": self.challenge.title,
            "description": self.challenge.description,
            "wish": self.challenge.wish,
            "daily_action": self.challenge.daily_action,
            "retrieval_score": self.retrieval_score,
            "rerank_score": self.rerank_score,
            "validated": self.validated,
            "rank": self.rank,
        }


@dataclass
class SearchOutcome:
    """Ranked results plus whether any stage fell back to degraded mode."""

    results: list[SearchResult] = field(default_factory=list)
    degraded: bool = False

    def ranked_ids(self) -> list[str]:
        return [r.challenge.id for r in self.results]


def embed_wish(store: ChallengeStore, wish: str, embedder):
    """Encode the wish, guarding against vectors from a different embedder
    configuration than the one that built the store."""
    if embedder.provider_tag != store.provider_tag:
        raise ProviderTagMismatch(
            f"store built with {store.provider_tag!r}, embedder is {embedder.provider_tag!r}"
        )
    try:
        return embedder.embed_one(wish)
    except ProviderError as exc:
        raise ServiceUnavailable(f"embedding failed: {exc}") from exc


def retrieve(
    store: ChallengeStore, wish: str, retrieve_k: int, embedder
) -> list[SearchResult]:
    """Top retrieve_k challenges by exact cosine against the wish embedding."""
    if not wish or not wish.strip():
        raise BadRequest("wish must be nonempty")
    if not len(store):
        return []
    query_vec = embed_wish(store, wish, embedder)
    by_id = store.by_id()
    return [
        SearchResult(challenge=by_id[cid], retrieval_score=score)
        for cid, score in topk(store, query_vec, retrieve_k)
    ]


def rerank_candidates(
    wish: str, candidates: list[SearchResult], reranker: Reranker
) -> tuple[list[SearchResult], bool]:
    """Reorder candidates by reranker relevance of their daily actions.

    Returns (candidates, degraded); on provider failure the retrieval order
    is kept and degraded is True.
    """
    if len(candidates) <= 1:
        return list(candidates), False
    try:
        ranking = reranker.rerank(wish, [c.challenge.daily_action for c in candidates])
    except ProviderError as exc:
        logger.warning("rerank failed, keeping retrieval order: %s", exc)
        return list(candidates), True
    reordered = []
    for index, score in ranking:
        candidate = candidates[index]
        candidate.rerank_score = score
        reordered.append(candidate)
    return reordered, False


def validate_candidates(
    wish: str,
    candidates: list[SearchResult],
    judge: Judge,
    depth: int = VALIDATE_DEPTH,
) -> tuple[list[SearchResult], bool]:
    """Keep only candidates the judge confirms as serving the wish.

    The top min(depth, n) candidates go to the judge in a single call (one
    boolean per item, order preserved); confirmed ones are returned, the rest
    dropped. Unexamined tail items are dropped too: nothing unvalidated is
    served. On judge failure the input is returned unfiltered with the
    degraded flag set.
    """
    if not candidates:
        return [], False
    examined = candidates[:depth]
    try:
        response = judge.judge_json(
            JudgeRequest(
                "search_validate",
                {
                    "wish": wish,
                    "items": [
                        {"title": c.challenge.title, "daily_action": c.challenge.daily_action}
                        for c in examined
                    ],
                },
            )
        )
        flags = list(response.value)
        if len(flags) != len(examined):
            raise ProviderError(
                f"expected {len(examined)} relevance flags, got {len(flags)}"
            )
    except ProviderError as exc:
        logger.warning("validation failed, serving unfiltered: %s", exc)
        return list(candidates), True
    kept = []
    for candidate, flag in zip(examined, flags):
        candidate.validated = bool(flag)
        if candidate.validated:
            kept.append(candidate)
    return kept, False


def search(store: ChallengeStore, request: SearchRequest, providers) -> SearchOutcome:
    """Full pipeline: retrieve, rerank, optionally validate, truncate, rank."""
    request.check()
    candidates = retrieve(store, request.wish, request.retrieve_k, providers.embedder)
    candidates, rerank_degraded = rerank_candidates(request.wish, candidates, providers.reranker)
    validate_degraded = False
    if request.validate:
        candidates, validate_degraded = validate_candidates(
            request.wish, candidates, providers.judge
        )
    results = candidates[: request.k]
    for position, result in enumerate(results, start=1):
        result.rank = position
    return SearchOutcome(results=results, degraded=rerank_degraded or validate_degraded)
