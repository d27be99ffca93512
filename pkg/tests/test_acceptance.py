"""Acceptance gate: eight release criteria, one test and one printed verdict
line each.

Every criterion states its tolerance inline; the printed line carries the
measured values so a log excerpt is enough to audit the run. Oracles are
independent of the code under test: planted duplicate groups verified against
the embedding geometry at construction time, exhaustive placement enumeration
for ranking metrics, naive reference implementations for counting metrics,
full-sort selection for the store, and byte comparison for determinism.
"""

import itertools
import json
import math
import random
import shutil
import time

import numpy as np
import pytest

from challengeforge.collect import (
    Blocklist,
    FixturePageFetcher,
    apply_blocklist,
    fetch_pages,
    filter_pages,
    ingest_serp,
)
from challengeforge.dedup import (
    MatchGraph,
    baseline_vector_transitive,
    cluster_greedy,
    dedup_run,
)
from challengeforge.evalharness import (
    dedup_recall_estimate,
    evaluate_search,
    hit_at_k,
    load_labeled_queries,
    ndcg_at_k,
    prf_at_k,
)
from challengeforge.extract import extract_corpus
from challengeforge.pipeline import MANIFEST, run_pipeline, stage_audit
from challengeforge.providers import (
    MockEmbedder,
    MockJudge,
    MockReranker,
    ProviderSet,
    build_providers,
)
from challengeforge.search import SearchRequest, rerank_candidates, retrieve, validate_candidates
from challengeforge.store import build_store, load_store, save_store, topk

from conftest import FIXTURES, FIXTURE_FILES, fixture_config, make_challenge
from synthdata import build_chain_corpus, build_planted_corpus, score_removals


def verdict(criterion: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} — {detail}", flush=True)
    assert ok, f"{criterion}: {detail}"


def fixture_providers():
    embedder = MockEmbedder(dim=64, seed=0)
    judge = MockJudge.from_file(FIXTURES / "judge_table.json")
    return ProviderSet(embedder, judge, MockReranker(embedder))


def fixture_corpus(providers):
    records = apply_blocklist(ingest_serp([FIXTURES / "serp_results.jsonl"]), Blocklist.default())
    docs, _ = fetch_pages(records, FixturePageFetcher.from_file(FIXTURES / "pages.jsonl"))
    kept, _ = filter_pages(docs, providers.judge, max_workers=1)
    challenges, _ = extract_corpus(kept, providers.judge, max_workers=1)
    return challenges


def test_c1_dedup_quality_on_planted_corpus():
    """Tolerances: precision >= 0.95, recall >= 0.90, single-threaded < 30 s
    on 200 challenges containing 60 planted multi-member duplicate groups."""
    corpus = build_planted_corpus()
    embedder = MockEmbedder(dim=64, seed=0)
    started = time.monotonic()
    result = dedup_run(corpus.challenges, embedder, corpus.judge, max_workers=1)
    elapsed = time.monotonic() - started
    same_group = lambda a, b: corpus.group_of[a] == corpus.group_of[b]
    precision, recall, f1 = score_removals(result.removed, same_group, corpus.n_true_duplicates)
    ok = precision >= 0.95 and recall >= 0.90 and elapsed < 30.0
    verdict(
        "C1 dedup-quality",
        ok,
        f"precision={precision:.3f} (>=0.95) recall={recall:.3f} (>=0.90) "
        f"f1={f1:.3f} removed={len(result.removed)}/{corpus.n_true_duplicates} "
        f"time={elapsed:.2f}s (<30s, max_workers=1)",
    )


def test_c2_ablation_ordering_and_chain_precision():
    """The full pipeline must beat both ablations on F1, and transitive
    closure must score precision < 0.5 on the 10-node drift chain."""
    corpus = build_planted_corpus()
    embedder = MockEmbedder(dim=64, seed=0)
    same_group = lambda a, b: corpus.group_of[a] == corpus.group_of[b]

    full = dedup_run(corpus.challenges, embedder, corpus.judge, max_workers=1)
    no_judge = dedup_run(corpus.challenges, embedder, corpus.judge, use_judge=False, max_workers=1)
    vector_transitive = baseline_vector_transitive(corpus.challenges, embedder)

    _, _, f1_full = score_removals(full.removed, same_group, corpus.n_true_duplicates)
    _, _, f1_nojudge = score_removals(no_judge.removed, same_group, corpus.n_true_duplicates)
    _, _, f1_vt = score_removals(vector_transitive.removed, same_group, corpus.n_true_duplicates)

    chain = build_chain_corpus()
    chain_result = baseline_vector_transitive(chain.challenges, embedder)
    chain_pair = lambda a, b: frozenset((a, b)) in chain.true_pairs
    chain_precision, _, _ = score_removals(chain_result.removed, chain_pair, len(chain.true_pairs))

    ok = f1_full > f1_nojudge and f1_full > f1_vt and chain_precision < 0.5
    verdict(
        "C2 ablation-ordering",
        ok,
        f"F1 full={f1_full:.3f} > no-judge={f1_nojudge:.3f} and > "
        f"vector+transitive={f1_vt:.3f}; chain transitive precision="
        f"{chain_precision:.3f} (<0.5, {len(chain_result.removed)} removals)",
    )


def test_c3_clustering_properties():
    """1000 random disjoint-clique graphs (n <= 40) must be recovered exactly
    under random processing orders; on 1000 random graphs the insertion
    invariant must hold and the output must partition the nodes; < 10 s."""
    rng = random.Random(4242)
    started = time.monotonic()

    recovered = 0
    for _ in range(1000):
        n = rng.randint(1, 40)
        ids = [f"n{i:02d}" for i in range(n)]
        shuffled = ids[:]
        rng.shuffle(shuffled)
        cliques, i = [], 0
        while i < len(shuffled):
            size = min(rng.randint(1, 6), len(shuffled) - i)
            cliques.append(shuffled[i : i + size])
            i += size
        graph = MatchGraph(nodes=list(ids))
        for clique in cliques:
            for a, b in itertools.combinations(clique, 2):
                graph.add_edge(a, b)
        order = ids[:]
        rng.shuffle(order)
        got = {frozenset(c.member_ids) for c in cluster_greedy(order, graph)}
        assert got == {frozenset(c) for c in cliques}
        recovered += 1

    checked = 0
    for _ in range(1000):
        n = rng.randint(1, 40)
        p = rng.random()
        ids = [f"n{i:02d}" for i in range(n)]
        graph = MatchGraph(nodes=list(ids))
        for a, b in itertools.combinations(ids, 2):
            if rng.random() < p:
                graph.add_edge(a, b)
        clusters = cluster_greedy(ids, graph)
        flat = [m for c in clusters for m in c.member_ids]
        assert sorted(flat) == ids and len(flat) == len(set(flat))  # partition
        for cluster in clusters:
            for pos, member in enumerate(cluster.member_ids):
                earlier = cluster.member_ids[:pos]
                count = sum(1 for e in earlier if graph.has_edge(member, e))
                assert 2 * count >= len(earlier)  # insertion-time majority
        checked += 1

    elapsed = time.monotonic() - started
    ok = recovered == 1000 and checked == 1000 and elapsed < 10.0
    verdict(
        "C3 clustering-properties",
        ok,
        f"clique recovery {recovered}/1000, invariant+partition {checked}/1000, "
        f"time={elapsed:.2f}s (<10s)",
    )


def test_c4_metric_oracles():
    """ndcg must equal the exhaustive-placement oracle on every binary-gain
    ranking of length <= 6 (with 0-2 unranked relevant items); precision/
    recall/F1/hit must match naive reference implementations on 10000 random
    cases; the recall estimate must match direct arithmetic to 1e-12 including
    the m=0 and precision=0 endpoints."""

    def discounted(position: int) -> float:
        return 1.0 / math.log2(position + 1)

    ndcg_cases = 0
    for n in range(1, 7):
        ranked = [f"r{i}" for i in range(n)]
        for gains in itertools.product((0, 1), repeat=n):
            for extra in range(3):
                relevant = {ranked[i] for i in range(n) if gains[i]}
                relevant |= {f"x{j}" for j in range(extra)}
                universe = n + extra
                for k in (1, 2, n, n + 3):
                    dcg = sum(
                        discounted(pos)
                        for pos, rid in enumerate(ranked[:k], start=1)
                        if rid in relevant
                    )
                    depth = min(k, universe)
                    best = 0.0
                    for r in range(0, min(len(relevant), depth) + 1):
                        for positions in itertools.combinations(range(1, depth + 1), r):
                            best = max(best, sum(discounted(p) for p in positions))
                    expected = 0.0 if best == 0 else dcg / best
                    got = ndcg_at_k(ranked, relevant, k)
                    assert got == pytest.approx(expected, abs=1e-12), (ranked, relevant, k)
                    ndcg_cases += 1

    rng = random.Random(99)
    pool = [f"d{i}" for i in range(30)]
    prf_cases = 0
    for _ in range(10000):
        ranked = rng.sample(pool, rng.randint(0, 15))
        relevant = set(rng.sample(pool, rng.randint(0, 8)))
        k = rng.randint(1, 20)
        hits = sum(1 for rid in ranked[:k] if rid in relevant)
        if not relevant:
            expected = (0.0, 0.0, 0.0)
        else:
            p = hits / k
            r = hits / min(k, len(relevant))
            expected = (p, r, 0.0 if p + r == 0 else 2 * p * r / (p + r))
        got = prf_at_k(ranked, relevant, k)
        assert got == pytest.approx(expected, abs=1e-12)
        assert hit_at_k(ranked, relevant, k) == (1 if hits else 0)
        prf_cases += 1

    estimate_cases = 0
    endpoint_grid = [0.0, 0.25, 1.0]
    triples = list(itertools.product(endpoint_grid, repeat=3))
    triples += [(rng.random(), rng.random(), rng.random()) for _ in range(1000)]
    for prec, removed, m in triples:
        numerator = prec * removed
        expected = 0.0 if numerator == 0 else numerator / (numerator + m * (1 - removed))
        assert dedup_recall_estimate(prec, removed, m) == pytest.approx(expected, abs=1e-12)
        estimate_cases += 1
    assert dedup_recall_estimate(0.8, 0.3, 0.0) == 1.0  # m = 0 endpoint
    assert dedup_recall_estimate(0.0, 0.3, 0.2) == 0.0  # precision = 0 endpoint

    verdict(
        "C4 metric-oracles",
        True,
        f"ndcg exhaustive {ndcg_cases} cases, prf/hit naive {prf_cases} cases, "
        f"recall-estimate {estimate_cases} cases at 1e-12",
    )


def test_c5_store_topk_and_round_trip(tmp_path):
    """topk must equal independent full-sort selection on 500 random stores
    (n <= 200, dim 64, duplicated actions so exact ties occur), and a saved
    store must reload and re-save byte-identically."""
    rng = random.Random(31)
    embedder = MockEmbedder(dim=64, seed=0)
    action_pool = [
        f"{verb} {count} {noun}"
        for verb in ("fold", "carve", "trace", "polish", "braid")
        for count in ("three", "five", "nine")
        for noun in ("kites", "knots", "maps", "beads", "quilts")
    ]  # 75 actions; stores with n > 75 are guaranteed duplicate actions

    stores_checked = 0
    ties_seen = 0
    round_trips = 0
    for trial in range(500):
        n = rng.randint(1, 200)
        challenges = [
            make_challenge(i + 1, daily_action=rng.choice(action_pool)) for i in range(n)
        ]
        store = build_store(challenges, embedder)
        query = embedder.embed_one(f"{rng.choice(action_pool)} daily")
        scores = store.vectors @ query
        oracle = sorted(
            ((c.id, float(s)) for c, s in zip(store.challenges, scores)),
            key=lambda t: (-t[1], t[0]),
        )
        for k in (1, 7, n, n + 10):
            assert topk(store, query, k) == oracle[:k], (trial, k)
        if len({s for _, s in oracle}) < len(oracle):
            ties_seen += 1
        stores_checked += 1

        if trial % 100 == 0:
            p1 = tmp_path / f"s{trial}a.store"
            p2 = tmp_path / f"s{trial}b.store"
            save_store(store, p1)
            save_store(load_store(p1), p2)
            assert p1.read_bytes() == p2.read_bytes()
            round_trips += 1

    ok = stores_checked == 500 and ties_seen > 0 and round_trips == 5
    verdict(
        "C5 store-oracle",
        ok,
        f"topk == full sort on {stores_checked}/500 stores ({ties_seen} with exact "
        f"score ties), {round_trips} bit-exact save/load/save round trips",
    )


def test_c6_search_contracts_on_fixture():
    """validate_candidates must return a subsequence of its input,
    rerank_candidates a permutation; on the fixture query set the validated
    configuration's F1@3 must be >= the unvalidated one for every query and
    strictly better in aggregate."""
    providers = fixture_providers()
    challenges = fixture_corpus(providers)
    deduped = dedup_run(challenges, providers.embedder, providers.judge)
    store = build_store(deduped.challenges, providers.embedder)
    queries = load_labeled_queries(FIXTURES / "labeled_queries.jsonl")

    def is_subsequence(sub, full):
        iterator = iter(full)
        return all(any(x == y for y in iterator) for x in sub)

    for query in queries:
        retrieved = retrieve(store, query.text, 50, providers.embedder)
        reranked, degraded = rerank_candidates(query.text, retrieved, providers.reranker)
        assert not degraded
        assert sorted(r.challenge.id for r in reranked) == sorted(
            r.challenge.id for r in retrieved
        )  # permutation
        validated, degraded = validate_candidates(query.text, reranked, providers.judge)
        assert not degraded
        assert is_subsequence(
            [r.challenge.id for r in validated], [r.challenge.id for r in reranked]
        )

    report = evaluate_search(store, queries, providers, max_workers=1)
    rows = {(r["query_id"], r["config"]): r for r in report.rows}
    per_query_ok = all(
        rows[(q.id, "validated")]["f3"] >= rows[(q.id, "unvalidated")]["f3"] for q in queries
    )
    agg_validated = report.aggregates["validated"]["overall"]["f3"]
    agg_unvalidated = report.aggregates["unvalidated"]["overall"]["f3"]
    ok = per_query_ok and agg_validated > agg_unvalidated
    verdict(
        "C6 search-contracts",
        ok,
        f"subsequence+permutation hold on {len(queries)} queries; F1@3 validated="
        f"{agg_validated:.3f} > unvalidated={agg_unvalidated:.3f}, no query regressed",
    )


def test_c7_pipeline_determinism(tmp_path):
    """Two full pipeline runs in separate directories must produce byte-
    identical artifacts and manifests in under 2 minutes total."""
    started = time.monotonic()
    artifact_bytes = []
    for sub in ("first", "second"):
        base = tmp_path / sub
        base.mkdir()
        for name in FIXTURE_FILES:
            shutil.copy(FIXTURES / name, base / name)
        cfg = fixture_config(base)
        providers = build_providers(cfg.providers, seed=cfg.seed, base_dir=cfg.base_dir)
        run_pipeline(cfg, providers)
        stage_audit(cfg, providers)
        artifact_bytes.append(
            {
                p.name: p.read_bytes()
                for p in sorted(cfg.out_dir.iterdir())
                if p.is_file()
            }
        )
    elapsed = time.monotonic() - started
    same_names = set(artifact_bytes[0]) == set(artifact_bytes[1])
    identical = same_names and all(
        artifact_bytes[0][name] == artifact_bytes[1][name] for name in artifact_bytes[0]
    )
    ok = identical and elapsed < 120.0 and MANIFEST in artifact_bytes[0]
    verdict(
        "C7 pipeline-determinism",
        ok,
        f"{len(artifact_bytes[0])} artifacts byte-identical across runs "
        f"(manifest included), time={elapsed:.2f}s (<120s)",
    )


def test_c8_collect_and_filter_contracts():
    """The blocklist must remove exactly the records whose registrable domain
    is listed, and the page filter must keep exactly the fetched pages whose
    judge score clears keep_threshold=6 (boundary value exercised)."""
    providers = fixture_providers()
    records = ingest_serp([FIXTURES / "serp_results.jsonl"])
    blocklist = Blocklist.default()
    kept_records = apply_blocklist(records, blocklist)

    removed_urls = {r.url for r in records} - {r.url for r in kept_records}
    expected_removed = {r.url for r in records if blocklist.blocks(r.url)}
    blocklist_exact = removed_urls == expected_removed and len(removed_urls) == 2
    lookalike_kept = any("pinterest.com.tricks.example" in r.url for r in kept_records)

    docs, _ = fetch_pages(kept_records, FixturePageFetcher.from_file(FIXTURES / "pages.jsonl"))
    table = json.loads((FIXTURES / "judge_table.json").read_text(encoding="utf-8"))["page_filter"]
    kept_docs, counters = filter_pages(docs, providers.judge, keep_threshold=6, max_workers=1)
    expected_kept = {d.url for d in docs if table[d.url] >= 6}
    filter_exact = {d.url for d in kept_docs} == expected_kept
    boundary = min(table[d.url] for d in kept_docs) == 6  # a score-6 page is kept
    dropped_below = all(table[d.url] < 6 for d in docs if d.url not in expected_kept)

    ok = blocklist_exact and lookalike_kept and filter_exact and boundary and dropped_below
    verdict(
        "C8 collect-contract",
        ok,
        f"blocklist removed exactly {len(removed_urls)} listed-domain records "
        f"(lookalike domain kept), filter kept exactly {len(kept_docs)}/{len(docs)} "
        f"pages with score >= 6 including the boundary score",
    )
