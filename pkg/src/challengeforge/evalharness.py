"""Offline evaluation: ranking metrics over a labeled query set, dedup recall
estimation, and seeded audit worksheets for manual duplicate annotation."""

from __future__ import annotations

import csv
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import Challenge
from .providers import map_settled
from .search import SearchRequest, search
from .store import ChallengeStore

logger = logging.getLogger(__name__)

TIERS = ("general", "fairly_specific", "ultra_specific")
EVAL_K = 20
AUDIT_NEIGHBORS = 5


@dataclass(frozen=True)
class LabeledQuery:
    id: str
    text: str
    tier: str
    relevant_ids: frozenset[str]

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValueError(f"unknown tier {self.tier!r}, expected one of {TIERS}")


def load_labeled_queries(path) -> list[LabeledQuery]:
    import json

    queries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                raw = json.loads(line)
                queries.append(
                    LabeledQuery(
                        id=raw["id"],
                        text=raw["text"],
                        tier=raw["tier"],
                        relevant_ids=frozenset(raw["relevant_ids"]),
                    )
                )
    return queries


def hit_at_k(ranked_ids: Sequence[str], relevant_ids, k: int) -> int:
    """1 iff any of the top k ids is relevant."""
    if k < 1:
        raise ValueError(f"k must be positive: {k}")
    return int(any(rid in relevant_ids for rid in ranked_ids[:k]))


def prf_at_k(ranked_ids: Sequence[str], relevant_ids, k: int) -> tuple[float, float, float]:
    """Precision, recall, F1 at k.

    Precision divides by k; recall divides by min(k, number of relevant)
    so a query with fewer relevant items than k can still reach recall 1.
    An empty relevant set yields (0, 0, 0).
    """
    if k < 1:
        raise ValueError(f"k must be positive: {k}")
    if not relevant_ids:
        return 0.0, 0.0, 0.0
    hits = sum(1 for rid in ranked_ids[:k] if rid in relevant_ids)
    precision = hits / k
    recall = hits / min(k, len(relevant_ids))
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def ndcg_at_k(ranked_ids: Sequence[str], relevant_ids, k: int) -> float:
    """Binary-gain NDCG: DCG over the top k against the ideal DCG of
    min(k, number of relevant) perfectly placed items; 0 when that ideal is 0."""
    if k < 1:
        raise ValueError(f"k must be positive: {k}")
    dcg = sum(
        1.0 / math.log2(position + 1)
        for position, rid in enumerate(ranked_ids[:k], start=1)
        if rid in relevant_ids
    )
    ideal_hits = min(k, len(relevant_ids))
    idcg = sum(1.0 / math.log2(position + 1) for position in range(1, ideal_hits + 1))
    if idcg == 0:
        return 0.0
    return dcg / idcg


def dedup_recall_estimate(prec: float, removed_frac: float, m: float) -> float:
    """Estimated dedup recall from removal precision, the fraction of the
    corpus removed, and the duplicate rate m measured among survivors:

        prec * removed / (prec * removed + m * (1 - removed))
    """
    for name, value in (("prec", prec), ("removed_frac", removed_frac), ("m", m)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]: {value}")
    numerator = prec * removed_frac
    if numerator == 0:
        return 0.0
    return numerator / (numerator + m * (1.0 - removed_frac))


@dataclass
class EvalReport:
    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    pr_points: dict = field(default_factory=dict)
    header: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "header": self.header,
            "aggregates": self.aggregates,
            "pr_points": self.pr_points,
            "rows": self.rows,
        }

    def write_csv(self, path) -> None:
        columns = [
            "query_id", "tier", "config", "failed", "n_results",
            "hit3", "p3", "r3", "f3", "p20", "r20", "f20", "ndcg20",
        ]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow(row)

    def write_pr_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["config", "rank", "precision", "recall"])
            for config in sorted(self.pr_points):
                for point in self.pr_points[config]:
                    writer.writerow(
                        [config, point["rank"], point["precision"], point["recall"]]
                    )


def _metric_row(query: LabeledQuery, config: str, ranked_ids: list[str]) -> dict:
    p3, r3, f3 = prf_at_k(ranked_ids, query.relevant_ids, 3)
    p20, r20, f20 = prf_at_k(ranked_ids, query.relevant_ids, EVAL_K)
    return {
        "query_id": query.id,
        "tier": query.tier,
        "config": config,
        "failed": False,
        "n_results": len(ranked_ids),
        "hit3": hit_at_k(ranked_ids, query.relevant_ids, 3),
        "p3": p3, "r3": r3, "f3": f3,
        "p20": p20, "r20": r20, "f20": f20,
        "ndcg20": ndcg_at_k(ranked_ids, query.relevant_ids, EVAL_K),
        "empty_relevant": not query.relevant_ids,
    }


def _aggregate(rows: list[dict]) -> dict:
    metrics = ("hit3", "p3", "r3", "f3", "p20", "r20", "f20", "ndcg20")
    groups: dict[str, list[dict]] = {"overall": []}
    for row in rows:
        if row["failed"]:
            continue
        groups["overall"].append(row)
        groups.setdefault(row["tier"], []).append(row)
    out = {}
    for name, members in groups.items():
        if not members:
            continue
        out[name] = {"n": len(members)}
        for metric in metrics:
            out[name][metric] = sum(r[metric] for r in members) / len(members)
    return out


def _pr_curve(per_query_ids: list[tuple[LabeledQuery, list[str]]]) -> list[dict]:
    points = []
    for rank in range(1, EVAL_K + 1):
        precisions, recalls = [], []
        for query, ranked_ids in per_query_ids:
            p, r, _ = prf_at_k(ranked_ids, query.relevant_ids, rank)
            precisions.append(p)
            recalls.append(r)
        if precisions:
            points.append(
                {
                    "rank": rank,
                    "precision": sum(precisions) / len(precisions),
                    "recall": sum(recalls) / len(recalls),
                }
            )
    return points


def evaluate_search(
    store: ChallengeStore,
    queries: Sequence[LabeledQuery],
    providers,
    retrieve_k: int = 50,
    max_workers: int = 8,
) -> EvalReport:
    """Run every labeled query through search twice, with and without the
    validation pass, and report per-query, per-tier and PR-curve metrics.

    A query whose search fails is kept as a failed row and excluded from
    aggregates; macro averages are over successful queries only.
    """
    if not queries:
        raise ValueError("no labeled queries to evaluate")
    ordered = sorted(queries, key=lambda q: q.id)
    configs = (("validated", True), ("unvalidated", False))

    def run(query: LabeledQuery) -> dict[str, list[str]]:
        out = {}
        for name, validate in configs:
            request = SearchRequest(
                wish=query.text, k=EVAL_K, retrieve_k=max(EVAL_K, retrieve_k), validate=validate
            )
            out[name] = search(store, request, providers).ranked_ids()
        return out

    settled = map_settled(run, ordered, max_workers=max_workers)

    report = EvalReport()
    failures = {name: 0 for name, _ in configs}
    curve_input: dict[str, list] = {name: [] for name, _ in configs}
    for query, (ok, value) in zip(ordered, settled):
        if not ok:
            logger.warning("evaluation failed for %s: %s", query.id, value)
            for name, _ in configs:
                failures[name] += 1
                report.rows.append(
                    {
                        "query_id": query.id, "tier": query.tier, "config": name,
                        "failed": True, "n_results": 0,
                        "hit3": 0.0, "p3": 0.0, "r3": 0.0, "f3": 0.0,
                        "p20": 0.0, "r20": 0.0, "f20": 0.0, "ndcg20": 0.0,
                        "empty_relevant": not query.relevant_ids,
                    }
                )
            continue
        for name, _ in configs:
            report.rows.append(_metric_row(query, name, value[name]))
            curve_input[name].append((query, value[name]))

    by_config: dict[str, list[dict]] = {name: [] for name, _ in configs}
    for row in report.rows:
        by_config[row["config"]].append(row)
    report.aggregates = {name: _aggregate(rows) for name, rows in by_config.items()}
    report.pr_points = {name: _pr_curve(curve_input[name]) for name, _ in configs}
    report.header = {
        "n_queries": len(ordered),
        "failed": failures,
        "eval_k": EVAL_K,
        "retrieve_k": retrieve_k,
    }
    return report


def audit_dedup(
    sample_size: int,
    rng_seed: int,
    removed: Sequence[Mapping],
    corpus_before: Sequence[Challenge],
    corpus_after: Sequence[Challenge],
    embedder,
) -> dict:
    """Build the two manual-annotation worksheets.

    Precision worksheet: a seeded sample of removed -> kept pairs with blank
    is_duplicate fields. Recall worksheet: a seeded sample of survivors, each
    with its top similar pre-dedup neighbors by daily-action embedding. When
    a population is smaller than sample_size the whole population is used and
    flagged.
    """
    rng = random.Random(rng_seed)
    by_id = {c.id: c for c in corpus_before}

    def sample(population: list, want: int) -> tuple[list, bool]:
        if want >= len(population):
            return list(population), True
        return rng.sample(population, want), False

    removed_rows = sorted(removed, key=lambda r: r["removed_id"])
    removed_sample, removed_all = sample(removed_rows, sample_size)
    precision_rows = []
    for entry in removed_sample:
        gone, kept = by_id[entry["removed_id"]], by_id[entry["kept_id"]]
        precision_rows.append(
            {
                "removed_id": gone.id,
                "removed_title": gone.title,
                "removed_daily_action": gone.daily_action,
                "kept_id": kept.id,
                "kept_title": kept.title,
                "kept_daily_action": kept.daily_action,
                "stage": entry["stage"],
                "is_duplicate": None,
            }
        )

    survivor_sample, survivors_all = sample(sorted(corpus_after, key=lambda c: c.id), sample_size)
    recall_rows = []
    if corpus_before:
        ordered_before = sorted(corpus_before, key=lambda c: c.id)
        vectors = embedder.embed_batch([c.daily_action for c in ordered_before])
        index_of = {c.id: i for i, c in enumerate(ordered_before)}
        for survivor in survivor_sample:
            sims = vectors @ vectors[index_of[survivor.id]]
            order = np.argsort(-sims, kind="stable")
            neighbors = []
            for i in order:
                neighbor = ordered_before[int(i)]
                if neighbor.id == survivor.id:
                    continue
                neighbors.append(
                    {
                        "id": neighbor.id,
                        "daily_action": neighbor.daily_action,
                        "similarity": float(sims[int(i)]),
                    }
                )
                if len(neighbors) == AUDIT_NEIGHBORS:
                    break
            recall_rows.append(
                {
                    "survivor_id": survivor.id,
                    "daily_action": survivor.daily_action,
                    "neighbors": neighbors,
                    "duplicate_ids": None,
                }
            )

    return {
        "seed": rng_seed,
        "sample_size": sample_size,
        "sampled_all_removed": removed_all,
        "sampled_all_survivors": survivors_all,
        "precision_worksheet": precision_rows,
        "recall_worksheet": recall_rows,
    }
