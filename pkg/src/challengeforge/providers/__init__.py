"""Uniform interfaces to embedding, judgment and reranking services."""

from __future__ import annotations

from typing import Mapping

from .base import (
    DEFAULT_MAX_WORKERS,
    DimensionMismatch,
    Embedder,
    EmptyInput,
    Judge,
    JudgeRequest,
    JudgeResponse,
    JudgeTemplate,
    ProviderError,
    ProviderUnavailable,
    Reranker,
    SchemaViolation,
    TEMPLATES,
    UnknownTemplate,
    call_with_retries,
    get_template,
    map_bounded,
    map_settled,
)
from .mock import MockEmbedder, MockJudge, MockReranker, pair_key
from .remote import RemoteEmbedder, RemoteJudge, RemoteReranker

DEFAULT_EMBED_MODEL = "text-embedding-3-large"
DEFAULT_JUDGE_MODEL = "gemini-2.0-flash"
DEFAULT_RERANK_MODEL = "bge-reranker-v2-m3"
MOCK_DIM = 64


class ProviderSet:
    """The three providers a pipeline run needs, built from one config block."""

    def __init__(self, embedder: Embedder, judge: Judge, reranker: Reranker):
        self.embedder = embedder
        self.judge = judge
        self.reranker = reranker


def build_providers(cfg: Mapping, seed: int = 0, base_dir=None) -> ProviderSet:
    """Construct providers from the `providers` config section.

    mode=mock wires the deterministic in-process providers (judge tables load
    from providers.judge.table, resolved against base_dir); mode=remote wires
    HTTP clients against the configured base URLs.
    """
    mode = cfg.get("mode", "mock")
    embed_cfg = cfg.get("embedding", {})
    judge_cfg = cfg.get("judge", {})
    rerank_cfg = cfg.get("rerank", {})

    if mode == "mock":
        embedder = MockEmbedder(dim=int(embed_cfg.get("dim", MOCK_DIM)), seed=seed)
        table = judge_cfg.get("table")
        if table:
            path = (base_dir / table) if base_dir is not None else table
            judge = MockJudge.from_file(path)
        else:
            judge = MockJudge()
        return ProviderSet(embedder, judge, MockReranker(embedder))

    if mode == "remote":
        return ProviderSet(
            RemoteEmbedder(
                model=embed_cfg.get("model", DEFAULT_EMBED_MODEL),
                base_url=embed_cfg.get("base_url", "https://api.openai.com/v1"),
                dim=embed_cfg.get("dim"),
            ),
            RemoteJudge(
                model=judge_cfg.get("model", DEFAULT_JUDGE_MODEL),
                base_url=judge_cfg.get("base_url", ""),
            ),
            RemoteReranker(
                model=rerank_cfg.get("model", DEFAULT_RERANK_MODEL),
                base_url=rerank_cfg.get("base_url", ""),
            ),
        )

    raise ValueError(f"unknown providers.mode: {mode!r}")
