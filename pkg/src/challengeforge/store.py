"""Persisted corpus with aligned embeddings and exact top-k cosine search.

File layout: one JSON header line (version, dim, count, provider tag, section
byte lengths and sha256 checksums), the challenges as JSONL, then the vectors
as a raw little-endian float32 block. Loads verify both checksums, and a
loaded store saves back byte-identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Challenge
from .providers import DimensionMismatch, Embedder

FORMAT_NAME = "challenge-store"
FORMAT_VERSION = 1

UNIT_NORM_ATOL = 1e-4


class StoreError(Exception):
    """Base for store file failures."""


class FormatVersionMismatch(StoreError):
    pass


class ChecksumMismatch(StoreError):
    pass


class ProviderTagMismatch(StoreError):
    """Query-time embedder does not match the embedder that built the store."""


@dataclass
class ChallengeStore:
    """Immutable corpus + unit-normalized vectors, row i belonging to challenge i."""

    challenges: list[Challenge]
    vectors: np.ndarray  # float32, shape (n, dim)
    dim: int
    provider_tag: str

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.provider_tag:
            raise ValueError("provider_tag must be nonempty")
        if self.vectors.dtype != np.float32 or self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d float32 array")
        if self.vectors.shape != (len(self.challenges), self.dim):
            raise ValueError(
                f"vector shape {self.vectors.shape} does not match "
                f"{len(self.challenges)} challenges of dim {self.dim}"
            )
        if len(self.challenges):
            norms = np.linalg.norm(self.vectors, axis=1)
            if not np.allclose(norms, 1.0, atol=UNIT_NORM_ATOL):
                raise ValueError("vectors must be unit-normalized")

    def __len__(self) -> int:
        return len(self.challenges)

    def by_id(self) -> dict[str, Challenge]:
        return {c.id: c for c in self.challenges}


def build_store(challenges: Sequence[Challenge], embedder: Embedder) -> ChallengeStore:
    """Embed every challenge's daily action and assemble the store."""
    ordered = sorted(challenges, key=lambda c: c.id)
    if ordered:
        vectors = np.ascontiguousarray(
            embedder.embed_batch([c.daily_action for c in ordered]), dtype=np.float32
        )
    else:
        vectors = np.zeros((0, embedder.dim), dtype=np.float32)
    return ChallengeStore(
        challenges=list(ordered),
        vectors=vectors,
        dim=embedder.dim,
        provider_tag=embedder.provider_tag,
    )


def _challenge_bytes(challenges: Sequence[Challenge]) -> bytes:
    lines = [json.dumps(c.to_dict(), ensure_ascii=False, sort_keys=True) for c in challenges]
    return ("".join(line + "\n" for line in lines)).encode("utf-8")


def save_store(store: ChallengeStore, path) -> None:
    store.validate()
    challenge_block = _challenge_bytes(store.challenges)
    vector_block = np.ascontiguousarray(store.vectors.astype("<f4", copy=False)).tobytes()
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dim": store.dim,
        "count": len(store.challenges),
        "provider_tag": store.provider_tag,
        "challenges_bytes": len(challenge_block),
        "challenges_sha256": hashlib.sha256(challenge_block).hexdigest(),
        "vectors_bytes": len(vector_block),
        "vectors_sha256": hashlib.sha256(vector_block).hexdigest(),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(challenge_block)
        fh.write(vector_block)


def load_store(path) -> ChallengeStore:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except ValueError as exc:  # covers JSON and unicode decode failures
            raise FormatVersionMismatch(f"not a {FORMAT_NAME} file: {path}") from exc
        if header.get("format") != FORMAT_NAME or header.get("version") != FORMAT_VERSION:
            raise FormatVersionMismatch(
                f"unsupported format {header.get('format')!r} v{header.get('version')!r}"
            )
        challenge_block = fh.read(header["challenges_bytes"])
        vector_block = fh.read(header["vectors_bytes"])
        if fh.read(1):
            raise ChecksumMismatch("trailing bytes after vector block")

    if len(challenge_block) != header["challenges_bytes"]:
        raise ChecksumMismatch("challenge section truncated")
    if len(vector_block) != header["vectors_bytes"]:
        raise ChecksumMismatch("vector section truncated")
    if hashlib.sha256(challenge_block).hexdigest() != header["challenges_sha256"]:
        raise ChecksumMismatch("challenge section checksum mismatch")
    if hashlib.sha256(vector_block).hexdigest() != header["vectors_sha256"]:
        raise ChecksumMismatch("vector section checksum mismatch")

    challenges = [
        Challenge.from_dict(json.loads(line))
        for line in challenge_block.decode("utf-8").splitlines()
        if line
    ]
    count, dim = header["count"], header["dim"]
    if len(challenges) != count:
        raise ChecksumMismatch(f"header count {count} != {len(challenges)} records")
    vectors = np.frombuffer(vector_block, dtype="<f4").reshape(count, dim).copy()
    return ChallengeStore(
        challenges=challenges, vectors=vectors, dim=dim, provider_tag=header["provider_tag"]
    )


def topk(store: ChallengeStore, query_vec: np.ndarray, k: int) -> list[tuple[str, float]]:
    """Exact brute-force top-k by cosine over the whole store.

    Scores are non-increasing; exact score ties break by ascending id.
    """
    if k < 1:
        raise ValueError(f"k must be positive: {k}")
    query = np.asarray(query_vec, dtype=np.float32).reshape(-1)
    if query.shape[0] != store.dim:
        raise DimensionMismatch(f"query dim {query.shape[0]} != store dim {store.dim}")
    if not len(store):
        return []
    scores = store.vectors @ query
    # stable sort on -score keeps row order (= id order) within ties
    order = np.argsort(-scores, kind="stable")[: min(k, len(store))]
    return [(store.challenges[i].id, float(scores[i])) for i in order]
