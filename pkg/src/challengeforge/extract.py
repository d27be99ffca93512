"""Structured challenge extraction: one judge call per filtered page, schema
validation of every returned item, deterministic id assignment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .model import Challenge, CorpusStats, FieldError, PageDocument, challenge_id, validate_challenge
from .providers import Judge, JudgeRequest, ProviderError, map_settled

logger = logging.getLogger(__name__)

ITEM_CAP = 100  # guards against degenerate judge output on one page


@dataclass
class ExtractionBatch:
    """All extraction outcomes for one page; accepted + rejected cover raw_items."""

    page: PageDocument
    raw_items: list = field(default_factory=list)
    accepted: list[Challenge] = field(default_factory=list)
    rejected: list[tuple[dict, list[FieldError]]] = field(default_factory=list)


def extract_challenges(doc: PageDocument, judge: Judge) -> ExtractionBatch:
    """Ask the judge for every challenge on the page and validate each item.

    Accepted challenges carry the page URL as source_url and empty ids; the
    caller assigns ids once all pages are assembled in order.
    """
    if not doc.text:
        raise ValueError("cannot extract from a page with empty text")
    response = judge.judge_json(
        JudgeRequest(
            "challenge_extract",
            {"url": doc.url, "title": doc.title, "text": doc.text},
        )
    )
    batch = ExtractionBatch(page=doc, raw_items=list(response.value)[:ITEM_CAP])
    for raw in batch.raw_items:
        challenge, errors = validate_challenge({**raw, "url": doc.url})
        if challenge is None:
            batch.rejected.append((raw, errors))
        else:
            batch.accepted.append(challenge)
    return batch


def extract_corpus(
    docs: Sequence[PageDocument],
    judge: Judge,
    max_workers: int = 8,
    stats: CorpusStats | None = None,
) -> tuple[list[Challenge], dict]:
    """Extract from every page with a bounded pool, reassemble in input page
    order, then assign ids by insertion counter so output is deterministic.

    A page whose judge call fails is retried once end-to-end; a second failure
    drops the page and counts it.
    """

    def run_with_retry(doc: PageDocument) -> ExtractionBatch:
        try:
            return extract_challenges(doc, judge)
        except ProviderError:
            return extract_challenges(doc, judge)

    settled = map_settled(run_with_retry, docs, max_workers=max_workers)

    challenges: list[Challenge] = []
    report = {"pages": len(docs), "accepted": 0, "rejected": 0, "zero_yield": 0, "failed": 0}
    counter = 1
    for doc, (ok, value) in zip(docs, settled):
        if not ok:
            report["failed"] += 1
            logger.warning("extraction failed for %s: %s", doc.url, value)
            continue
        batch: ExtractionBatch = value
        report["rejected"] += len(batch.rejected)
        for raw, errors in batch.rejected:
            logger.info("rejected item from %s: %s", doc.url, ", ".join(map(str, errors)))
        if not batch.accepted:
            report["zero_yield"] += 1
            continue
        for challenge in batch.accepted:
            challenge.id = challenge_id(counter)
            counter += 1
            challenges.append(challenge)
        report["accepted"] += len(batch.accepted)
    if stats is not None:
        stats.n_extracted += len(challenges)
    return challenges, report
