"""Deterministic in-process providers used by every test and by mock-mode runs.

The embedder is a hashed token bag: near-duplicate texts land close in cosine,
unrelated texts far, which makes dedup behave realistically without a network.
The judge is an explicit lookup table with per-template default verdicts, so
tests control the oracle exactly. Everything is bit-deterministic under a
fixed seed.
"""

from __future__ import annotations

import json
import re
from hashlib import blake2b
from typing import Mapping, Sequence

import numpy as np

from .base import (
    Embedder,
    EmptyInput,
    Judge,
    JudgeRequest,
    JudgeResponse,
    ProviderUnavailable,
    Reranker,
    check_texts,
    get_template,
)
from .schemas import validate_payload

_TOKEN_RE = re.compile(r"[a-z0-9]+")

PAIR_SEP = "\x1f"


def pair_key(a: str, b: str) -> str:
    """Order-free lookup key for a pair of daily-action strings."""
    x, y = sorted((a, b))
    return x + PAIR_SEP + y


class MockEmbedder(Embedder):
    """Hashed-token-bag embedding: lowercase, split on non-alphanumerics, hash
    each token into one of dim buckets, count, L2-normalize. The seed perturbs
    the hash so distinct configurations yield distinct vector spaces."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._key = f"s{seed}".encode()[:16]
        self.calls = 0

    @property
    def provider_tag(self) -> str:
        return f"mock-embed:dim={self.dim}:seed={self.seed}"

    def _bucket(self, token: str) -> int:
        digest = blake2b(token.encode("utf-8"), digest_size=8, key=self._key).digest()
        return int.from_bytes(digest, "little") % self.dim

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        check_texts(texts)
        self.calls += 1
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            tokens = _TOKEN_RE.findall(text.lower())
            if not tokens:
                # no alphanumeric content: fall back to hashing the raw text
                tokens = [text]
            for tok in tokens:
                out[i, self._bucket(tok)] += 1.0
            out[i] /= np.linalg.norm(out[i])
        return out


class MockJudge(Judge):
    """Lookup-table judge.

    Tables by template:
      page_filter:       url -> score (int 0-10)
      challenge_extract: url -> list of raw challenge items
      pair_duplicate:    (action_a, action_b) -> bool, order-free
      search_validate:   (wish, daily_action) -> bool, applied per candidate

    Unlisted keys fall back to the per-template default; pair_duplicate
    defaults to non-duplicate. fail_keys simulates provider outages for
    specific lookups.
    """

    def __init__(
        self,
        page_scores: Mapping[str, int] | None = None,
        extract_items: Mapping[str, list] | None = None,
        pair_verdicts: Mapping | None = None,
        validate_flags: Mapping | None = None,
        defaults: Mapping[str, object] | None = None,
        fail_keys: set | None = None,
    ):
        self.page_scores = dict(page_scores or {})
        self.extract_items = dict(extract_items or {})
        self.pair_verdicts = {
            (pair_key(*k) if isinstance(k, tuple) else k): v
            for k, v in dict(pair_verdicts or {}).items()
        }
        self.validate_flags = {
            (k if isinstance(k, tuple) else tuple(k)): v
            for k, v in dict(validate_flags or {}).items()
        }
        self.defaults = {
            "page_filter": 0,
            "pair_duplicate": False,
            "search_validate": True,
            **(defaults or {}),
        }
        self.fail_keys = fail_keys or set()
        self.calls = 0

    @classmethod
    def from_file(cls, path) -> "MockJudge":
        """Load tables from the JSON fixture format (see fixtures/judge_table.json)."""
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            page_scores=raw.get("page_filter", {}),
            extract_items=raw.get("challenge_extract", {}),
            pair_verdicts={
                (e["a"], e["b"]): e["duplicate"] for e in raw.get("pair_duplicate", [])
            },
            validate_flags={
                (e["wish"], e["daily_action"]): e["relevant"]
                for e in raw.get("search_validate", [])
            },
            defaults=raw.get("defaults", {}),
        )

    def _maybe_fail(self, template_id: str, key) -> None:
        if (template_id, key) in self.fail_keys:
            raise ProviderUnavailable(f"mock outage for {template_id}:{key!r}")

    def judge_json(self, request: JudgeRequest) -> JudgeResponse:
        template = get_template(request.template_id)
        self.calls += 1
        b = request.bindings

        if template.template_id == "page_filter":
            key = b["url"]
            self._maybe_fail("page_filter", key)
            value = {"score": int(self.page_scores.get(key, self.defaults["page_filter"]))}
        elif template.template_id == "challenge_extract":
            key = b["url"]
            self._maybe_fail("challenge_extract", key)
            value = self.extract_items.get(key, [])
        elif template.template_id == "pair_duplicate":
            key = pair_key(b["action_a"], b["action_b"])
            self._maybe_fail("pair_duplicate", key)
            value = {"duplicate": bool(self.pair_verdicts.get(key, self.defaults["pair_duplicate"]))}
        else:  # search_validate
            wish = b["wish"]
            self._maybe_fail("search_validate", wish)
            default = bool(self.defaults["search_validate"])
            value = [
                bool(self.validate_flags.get((wish, item["daily_action"]), default))
                for item in b["items"]
            ]

        validate_payload(template.schema_id, value)
        return JudgeResponse(value=value, raw_text=json.dumps(value, sort_keys=True))


class MockReranker(Reranker):
    """Reranks by cosine similarity of the mock embeddings (a stand-in for a
    cross-encoder); stable tie-break on candidate index."""

    def __init__(self, embedder: Embedder | None = None):
        self.embedder = embedder or MockEmbedder()
        self.calls = 0

    def rerank(self, query: str, candidates: Sequence[str]) -> list[tuple[int, float]]:
        if len(candidates) == 0:
            raise EmptyInput("no candidates to rerank")
        self.calls += 1
        vectors = self.embedder.embed_batch([query] + list(candidates))
        scores = vectors[1:] @ vectors[0]
        order = sorted(range(len(candidates)), key=lambda i: (-scores[i], i))
        return [(i, float(scores[i])) for i in order]
