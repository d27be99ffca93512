"""HTTP-backed providers.

Model names are opaque wire strings sent to endpoints configured by base URL;
API keys come from EMBED_API_KEY / JUDGE_API_KEY / RERANK_API_KEY. Every call
goes through bounded retries with exponential backoff.
"""

from __future__ import annotations

import json
import os
import re
from typing import Sequence

import httpx
import numpy as np

from .base import (
    Embedder,
    EmptyInput,
    Judge,
    JudgeRequest,
    JudgeResponse,
    ProviderUnavailable,
    Reranker,
    SchemaViolation,
    call_with_retries,
    check_texts,
    get_template,
)
from .schemas import validate_payload

_RETRY_STATUSES = {429, 500, 502, 503, 504}

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n|\n?```$")


def _strip_fences(text: str) -> str:
    return _FENCE_RE.sub("", text.strip())


def _post_json(client: httpx.Client, url: str, payload: dict, api_key: str) -> dict:
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    def attempt():
        try:
            resp = client.post(url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(str(exc)) from exc
        if resp.status_code in _RETRY_STATUSES:
            raise ProviderUnavailable(f"HTTP {resp.status_code} from {url}")
        if resp.status_code != 200:
            raise ProviderUnavailable(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
        return resp.json()

    return call_with_retries(attempt)


class RemoteEmbedder(Embedder):
    """OpenAI-style /embeddings endpoint; output is unit-normalized locally."""

    def __init__(self, model: str, base_url: str, dim: int | None = None,
                 client: httpx.Client | None = None):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.dim = dim or 0  # discovered from the first response when unset
        self._client = client or httpx.Client(timeout=60)
        self._api_key = os.environ.get("EMBED_API_KEY", "")

    @property
    def provider_tag(self) -> str:
        return f"remote-embed:{self.model}"

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        check_texts(texts)
        data = _post_json(
            self._client,
            f"{self.base_url}/embeddings",
            {"model": self.model, "input": list(texts)},
            self._api_key,
        )
        rows = [item["embedding"] for item in data["data"]]
        if len(rows) != len(texts):
            raise ProviderUnavailable("embedding count does not match input count")
        out = np.asarray(rows, dtype=np.float32)
        if not self.dim:
            self.dim = out.shape[1]
        if out.shape[1] != self.dim:
            raise ProviderUnavailable(f"embedding dim changed: {out.shape[1]} != {self.dim}")
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return out / norms


class RemoteJudge(Judge):
    """Chat-completions style judge; responses are parsed as JSON and schema
    checked locally, with one reformat retry on non-conforming output."""

    def __init__(self, model: str, base_url: str, client: httpx.Client | None = None):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=120)
        self._api_key = os.environ.get("JUDGE_API_KEY", "")

    def _complete(self, prompt: str) -> str:
        data = _post_json(
            self._client,
            f"{self.base_url}/chat/completions",
            {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": 0,
            },
            self._api_key,
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError) as exc:
            raise ProviderUnavailable(f"malformed completion response: {exc}") from exc

    def judge_json(self, request: JudgeRequest) -> JudgeResponse:
        template = get_template(request.template_id)
        prompt = template.render(request.bindings)

        raw = self._complete(prompt)
        for retry in (False, True):
            try:
                value = json.loads(_strip_fences(raw))
                validate_payload(template.schema_id, value)
                return JudgeResponse(value=value, raw_text=raw)
            except (json.JSONDecodeError, SchemaViolation):
                if retry:
                    raise SchemaViolation(
                        f"{request.template_id}: output failed schema check twice"
                    ) from None
                raw = self._complete(
                    prompt + "\n\nYour previous reply was not valid JSON for the "
                    "required schema. Reply with only the JSON value, no prose."
                )
        raise AssertionError("unreachable")


class RemoteReranker(Reranker):
    """Rerank endpoint in the Pinecone/BGE wire shape."""

    def __init__(self, model: str, base_url: str, client: httpx.Client | None = None):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=60)
        self._api_key = os.environ.get("RERANK_API_KEY", "")

    def rerank(self, query: str, candidates: Sequence[str]) -> list[tuple[int, float]]:
        if len(candidates) == 0:
            raise EmptyInput("no candidates to rerank")
        data = _post_json(
            self._client,
            f"{self.base_url}/rerank",
            {"model": self.model, "query": query, "documents": list(candidates)},
            self._api_key,
        )
        results = [(int(r["index"]), float(r["relevance_score"])) for r in data["results"]]
        if sorted(i for i, _ in results) != list(range(len(candidates))):
            raise ProviderUnavailable("rerank response is not a permutation of candidates")
        results.sort(key=lambda pair: (-pair[1], pair[0]))
        return results
