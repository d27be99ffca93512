"""Semantic deduplication of challenge corpora.

Four stages: a cheap string prefilter, exhaustive pairwise embedding
similarity split into match / ambiguous / non-match bands, judge resolution
of the ambiguous band, and a greedy correlation-clustering pass that turns
pairwise verdicts into clusters. Baselines (MinHash, vector threshold with
transitive closure) and the ablation switches live here too so evaluations
compare like with like.
"""

from __future__ import annotations

import logging
import random
import re
import time
from dataclasses import dataclass, field
from hashlib import blake2b
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import Challenge, CorpusStats
from .providers import DimensionMismatch, Embedder, Judge, JudgeRequest, map_settled

logger = logging.getLogger(__name__)

DEFAULT_LOW = 0.625
DEFAULT_HIGH = 0.7
DEFAULT_PREFILTER_ACTION = 0.92
DEFAULT_PREFILTER_TITLE = 0.80
MINHASH_PERMS = 128
MINHASH_THRESHOLD = 0.5

_WORD_RE = re.compile(r"[^a-z0-9\s]+")
_MERSENNE61 = (1 << 61) - 1

BAND_MATCH = "match"
BAND_AMBIGUOUS = "ambiguous"
BAND_NON_MATCH = "non_match"


def load_stopwords(path=None) -> frozenset[str]:
    """Stopword set: standard English plus domain terms (30day, challenge, day,
    improve and friends) that carry no distinguishing content here."""
    if path is None:
        text = resources.files("challengeforge.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    return frozenset(words)


@dataclass(frozen=True)
class NormalizedText:
    original: str
    normalized: str


def normalize_for_match(text: str, stopwords: frozenset[str]) -> NormalizedText:
    """Lowercase, strip punctuation, drop stopwords, collapse whitespace.
    Idempotent: normalizing a normalized string is the identity."""
    lowered = _WORD_RE.sub(" ", text.lower())
    tokens = [t for t in lowered.split() if t not in stopwords]
    return NormalizedText(original=text, normalized=" ".join(tokens))


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_similarity(a: str, b: str) -> float:
    """1 - distance / max length; two empty strings are fully similar."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


@dataclass
class PairVerdict:
    """One unordered candidate pair with its similarity band and outcome."""

    a_id: str
    b_id: str
    similarity: float
    band: str
    judge_verdict: bool | None = None

    @property
    def final(self) -> bool:
        return self.band == BAND_MATCH or (
            self.band == BAND_AMBIGUOUS and self.judge_verdict is True
        )


@dataclass
class MatchGraph:
    """Undirected duplicate-verdict graph; nodes keep corpus order."""

    nodes: list[str]
    edges: set[tuple[str, str]] = field(default_factory=set)

    def add_edge(self, a: str, b: str) -> None:
        if a == b:
            raise ValueError("self-loops are not allowed")
        self.edges.add((a, b) if a < b else (b, a))

    def has_edge(self, a: str, b: str) -> bool:
        return ((a, b) if a < b else (b, a)) in self.edges

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj


@dataclass
class Cluster:
    """A duplicate group; representative_id is fixed by pick_representatives."""

    member_ids: list[str]
    representative_id: str = ""


def band_of(similarity: float, low: float, high: float) -> str:
    """match at or above high, non_match strictly below low, ambiguous between.
    The boundaries: sim = high is a match, sim = low is ambiguous."""
    if similarity >= high:
        return BAND_MATCH
    if similarity < low:
        return BAND_NON_MATCH
    return BAND_AMBIGUOUS


def prefilter_pairs(
    challenges: Sequence[Challenge],
    stopwords: frozenset[str],
    action_threshold: float = DEFAULT_PREFILTER_ACTION,
    title_threshold: float = DEFAULT_PREFILTER_TITLE,
) -> tuple[list[Challenge], dict[str, str]]:
    """Drop obvious string-level duplicates before any embedding work.

    A challenge is removed in favor of the earliest survivor whose normalized
    daily_action is equal, or whose daily_action and title Levenshtein
    similarities clear both thresholds. Returns survivors plus removed -> kept.
    """
    survivors: list[Challenge] = []
    norm_actions: list[str] = []
    norm_titles: list[str] = []
    by_action: dict[str, str] = {}
    removed: dict[str, str] = {}

    # a similarity of s requires distance <= (1-s) * maxlen, so a length gap
    # larger than that bound can never clear the threshold
    def may_clear(a: str, b: str, threshold: float) -> bool:
        longest = max(len(a), len(b))
        return longest == 0 or abs(len(a) - len(b)) <= (1.0 - threshold) * longest

    for ch in challenges:
        action = normalize_for_match(ch.daily_action, stopwords).normalized
        title = normalize_for_match(ch.title, stopwords).normalized
        if action in by_action:
            removed[ch.id] = by_action[action]
            continue
        kept_id = None
        for srv, srv_action, srv_title in zip(survivors, norm_actions, norm_titles):
            if not may_clear(action, srv_action, action_threshold):
                continue
            if levenshtein_similarity(action, srv_action) < action_threshold:
                continue
            if levenshtein_similarity(title, srv_title) >= title_threshold:
                kept_id = srv.id
                break
        if kept_id is not None:
            removed[ch.id] = kept_id
            continue
        survivors.append(ch)
        norm_actions.append(action)
        norm_titles.append(title)
        by_action[action] = ch.id
    return survivors, removed


def pairwise_band(
    ids: Sequence[str],
    vectors: np.ndarray,
    low: float = DEFAULT_LOW,
    high: float = DEFAULT_HIGH,
    block: int = 256,
) -> tuple[list[PairVerdict], int]:
    """Exact all-pairs cosine over unit vectors, banded by the two thresholds.

    Returns the match and ambiguous verdicts (non-matches are only counted:
    the full pair set is quadratic and non-matches carry no information).
    """
    if not 0.0 <= low < high <= 1.0:
        raise ValueError(f"thresholds must satisfy 0 <= low < high <= 1: {low}, {high}")
    if len(ids) != vectors.shape[0]:
        raise DimensionMismatch(f"{len(ids)} ids for {vectors.shape[0]} vectors")
    kept: list[PairVerdict] = []
    non_match = 0
    n = len(ids)
    for start in range(0, n, block):
        stop = min(start + block, n)
        sims = vectors[start:stop] @ vectors.T
        for i in range(start, stop):
            row = sims[i - start]
            for j in range(i + 1, n):
                sim = float(row[j])
                band = band_of(sim, low, high)
                if band == BAND_NON_MATCH:
                    non_match += 1
                else:
                    kept.append(PairVerdict(ids[i], ids[j], sim, band))
    return kept, non_match


def judge_band(
    pairs: Sequence[PairVerdict],
    challenges_by_id: Mapping[str, Challenge],
    judge: Judge,
    max_workers: int = 8,
) -> int:
    """Resolve ambiguous pairs with one judge call each (in-place).

    A failed call leaves the pair unmatched, preserving removal precision at
    the cost of recall; returns the failure count.
    """
    ambiguous = [p for p in pairs if p.band == BAND_AMBIGUOUS]

    def ask(pair: PairVerdict) -> bool:
        a = challenges_by_id[pair.a_id]
        b = challenges_by_id[pair.b_id]
        response = judge.judge_json(
            JudgeRequest(
                "pair_duplicate",
                {
                    "title_a": a.title,
                    "action_a": a.daily_action,
                    "title_b": b.title,
                    "action_b": b.daily_action,
                },
            )
        )
        return bool(response.value["duplicate"])

    failures = 0
    for pair, (ok, value) in zip(ambiguous, map_settled(ask, ambiguous, max_workers=max_workers)):
        if ok:
            pair.judge_verdict = value
        else:
            pair.judge_verdict = False
            failures += 1
            logger.warning("pair judgment failed for (%s, %s): %s", pair.a_id, pair.b_id, value)
    return failures


def cluster_greedy(nodes: Sequence[str], graph: MatchGraph) -> list[Cluster]:
    """Sequential majority-join clustering.

    Each node joins the cluster where it matches the most members, provided it
    matches at least half of them (exact rational comparison); ties go to the
    earliest cluster; otherwise it starts its own. Processing order is the
    given node order, so the result is deterministic.
    """
    adj = graph.adjacency()
    clusters: list[list[str]] = []
    for node in nodes:
        neighbors = adj.get(node, set())
        best = -1
        best_count = 0
        for idx, members in enumerate(clusters):
            count = sum(1 for m in members if m in neighbors)
            if 2 * count >= len(members) and count > best_count:
                best = idx
                best_count = count
        if best >= 0:
            clusters[best].append(node)
        else:
            clusters.append([node])
    return [Cluster(member_ids=members) for members in clusters]


def cluster_transitive(graph: MatchGraph) -> list[Cluster]:
    """Connected components; cluster and member order follow the node order."""
    adj = graph.adjacency()
    seen: set[str] = set()
    order = {n: i for i, n in enumerate(graph.nodes)}
    clusters = []
    for node in graph.nodes:
        if node in seen:
            continue
        component = {node}
        frontier = [node]
        while frontier:
            cur = frontier.pop()
            for neighbor in adj[cur]:
                if neighbor not in component:
                    component.add(neighbor)
                    frontier.append(neighbor)
        seen |= component
        clusters.append(Cluster(member_ids=sorted(component, key=order.__getitem__)))
    return clusters


def shingles(text: str, n: int = 3) -> frozenset[str]:
    """Character n-grams; a string shorter than n is its own single shingle."""
    if len(text) < n:
        return frozenset([text]) if text else frozenset()
    return frozenset(text[i : i + n] for i in range(len(text) - n + 1))


def _minhash_permutations(num_perm: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = random.Random(seed)
    a = np.array([rng.randrange(1, _MERSENNE61) for _ in range(num_perm)], dtype=np.uint64)
    b = np.array([rng.randrange(0, _MERSENNE61) for _ in range(num_perm)], dtype=np.uint64)
    return a, b


def _minhash_signature(shingle_set: frozenset[str], a: np.ndarray, b: np.ndarray) -> np.ndarray:
    hashes = np.array(
        [
            int.from_bytes(blake2b(s.encode("utf-8"), digest_size=8).digest(), "little")
            for s in sorted(shingle_set)
        ],
        dtype=np.uint64,
    )
    with np.errstate(over="ignore"):
        table = (hashes[:, None] * a[None, :] + b[None, :]) % _MERSENNE61
    return table.min(axis=0)


def minhash_pairs(
    challenges: Sequence[Challenge],
    stopwords: frozenset[str],
    jaccard_threshold: float = MINHASH_THRESHOLD,
    num_perm: int = MINHASH_PERMS,
    seed: int = 0,
) -> MatchGraph:
    """MinHash duplicate graph over 3-gram shingles of normalized daily
    actions: edge when the estimated Jaccard reaches the threshold."""
    if not 0.0 < jaccard_threshold <= 1.0:
        raise ValueError(f"jaccard_threshold must be in (0, 1]: {jaccard_threshold}")
    a, b = _minhash_permutations(num_perm, seed)
    ids = [c.id for c in challenges]
    shingle_sets = [
        shingles(normalize_for_match(c.daily_action, stopwords).normalized) for c in challenges
    ]
    signatures = [_minhash_signature(s, a, b) if s else None for s in shingle_sets]
    graph = MatchGraph(nodes=list(ids))
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            si, sj = signatures[i], signatures[j]
            if si is None or sj is None:
                estimate = 1.0 if shingle_sets[i] == shingle_sets[j] else 0.0
            else:
                estimate = float(np.mean(si == sj))
            if estimate >= jaccard_threshold:
                graph.add_edge(ids[i], ids[j])
    return graph


def pick_representatives(
    clusters: Sequence[Cluster], challenges_by_id: Mapping[str, Challenge]
) -> list[Challenge]:
    """One challenge per cluster: the longest description wins, ties go to the
    smallest id. Output is ordered by representative id."""
    for cluster in clusters:
        cluster.representative_id = min(
            cluster.member_ids,
            key=lambda cid: (-len(challenges_by_id[cid].description), cid),
        )
    return [
        challenges_by_id[c.representative_id]
        for c in sorted(clusters, key=lambda c: c.representative_id)
    ]


@dataclass
class DedupResult:
    """Deduplicated corpus plus a complete account of every removal."""

    challenges: list[Challenge]
    removed: list[dict]  # {removed_id, kept_id, stage}
    audit: dict
    judge_failures: int = 0

    @property
    def removed_map(self) -> dict[str, str]:
        return {r["removed_id"]: r["kept_id"] for r in self.removed}


def _assemble(
    challenges: Sequence[Challenge],
    clusters: Sequence[Cluster],
    prefilter_removed: Mapping[str, str],
    audit: dict,
) -> DedupResult:
    by_id = {c.id: c for c in challenges}
    deduplicated = pick_representatives(clusters, by_id)
    cluster_map = {
        member: cluster.representative_id
        for cluster in clusters
        for member in cluster.member_ids
        if member != cluster.representative_id
    }
    removed = [
        {"removed_id": rid, "kept_id": cluster_map.get(kept, kept), "stage": "prefilter"}
        for rid, kept in prefilter_removed.items()
    ]
    removed.extend(
        {"removed_id": rid, "kept_id": kept, "stage": "cluster"}
        for rid, kept in cluster_map.items()
    )
    removed.sort(key=lambda r: r["removed_id"])
    audit = dict(audit, clusters=len(clusters), output=len(deduplicated))
    return DedupResult(challenges=deduplicated, removed=removed, audit=audit)


def dedup_run(
    challenges: Sequence[Challenge],
    embedder: Embedder,
    judge: Judge | None,
    stopwords: frozenset[str] | None = None,
    low: float = DEFAULT_LOW,
    high: float = DEFAULT_HIGH,
    prefilter_action: float = DEFAULT_PREFILTER_ACTION,
    prefilter_title: float = DEFAULT_PREFILTER_TITLE,
    use_judge: bool = True,
    clustering: str = "greedy",
    max_workers: int = 8,
    stats: CorpusStats | None = None,
) -> DedupResult:
    """The full pipeline: prefilter, embed survivors' daily actions, band all
    pairs, judge the ambiguous band, cluster, pick representatives.

    use_judge=False leaves the ambiguous band unmatched (the no-judge
    ablation); clustering="transitive" swaps the greedy pass for connected
    components (the clustering ablation).
    """
    if clustering not in ("greedy", "transitive"):
        raise ValueError(f"unknown clustering mode: {clustering!r}")
    if use_judge and judge is None:
        raise ValueError("use_judge=True requires a judge provider")
    if stopwords is None:
        stopwords = load_stopwords()

    started = time.monotonic()
    survivors, prefilter_removed = prefilter_pairs(
        challenges, stopwords, prefilter_action, prefilter_title
    )

    graph = MatchGraph(nodes=[c.id for c in survivors])
    audit = {
        "input": len(challenges),
        "prefilter_removed": len(prefilter_removed),
        "pairs_match": 0,
        "pairs_ambiguous": 0,
        "judge_true": 0,
    }
    judge_failures = 0
    if survivors:
        vectors = embedder.embed_batch([c.daily_action for c in survivors])
        pairs, _ = pairwise_band(graph.nodes, vectors, low, high)
        audit["pairs_match"] = sum(1 for p in pairs if p.band == BAND_MATCH)
        audit["pairs_ambiguous"] = sum(1 for p in pairs if p.band == BAND_AMBIGUOUS)
        if use_judge:
            by_id = {c.id: c for c in survivors}
            judge_failures = judge_band(pairs, by_id, judge, max_workers=max_workers)
            audit["judge_true"] = sum(
                1 for p in pairs if p.band == BAND_AMBIGUOUS and p.judge_verdict is True
            )
        for pair in pairs:
            if pair.final:
                graph.add_edge(pair.a_id, pair.b_id)

    if clustering == "greedy":
        clusters = cluster_greedy(graph.nodes, graph)
    else:
        clusters = cluster_transitive(graph)

    result = _assemble(challenges, clusters, prefilter_removed, audit)
    result.judge_failures = judge_failures
    logger.info(
        "dedup: %d -> %d in %.2fs (%d prefiltered, %d match, %d ambiguous, %d failures)",
        len(challenges),
        len(result.challenges),
        time.monotonic() - started,
        audit["prefilter_removed"],
        audit["pairs_match"],
        audit["pairs_ambiguous"],
        judge_failures,
    )
    if stats is not None:
        stats.n_deduped += len(result.challenges)
    return result


def baseline_minhash(
    challenges: Sequence[Challenge],
    stopwords: frozenset[str] | None = None,
    jaccard_threshold: float = MINHASH_THRESHOLD,
    num_perm: int = MINHASH_PERMS,
    seed: int = 0,
) -> DedupResult:
    """MinHash pairwise matching plus transitive-closure clustering."""
    if stopwords is None:
        stopwords = load_stopwords()
    graph = minhash_pairs(challenges, stopwords, jaccard_threshold, num_perm, seed)
    clusters = cluster_transitive(graph)
    audit = {"input": len(challenges), "prefilter_removed": 0,
             "pairs_match": len(graph.edges), "pairs_ambiguous": 0, "judge_true": 0}
    return _assemble(challenges, clusters, {}, audit)


def baseline_vector_transitive(
    challenges: Sequence[Challenge],
    embedder: Embedder,
    threshold: float = DEFAULT_HIGH,
) -> DedupResult:
    """Vector pairwise matching at a single threshold plus transitive-closure
    clustering."""
    graph = MatchGraph(nodes=[c.id for c in challenges])
    audit = {"input": len(challenges), "prefilter_removed": 0,
             "pairs_match": 0, "pairs_ambiguous": 0, "judge_true": 0}
    if challenges:
        vectors = embedder.embed_batch([c.daily_action for c in challenges])
        pairs, _ = pairwise_band(graph.nodes, vectors, low=0.0, high=threshold)
        for pair in pairs:
            if pair.band == BAND_MATCH:
                graph.add_edge(pair.a_id, pair.b_id)
                audit["pairs_match"] += 1
    clusters = cluster_transitive(graph)
    return _assemble(challenges, clusters, {}, audit)
