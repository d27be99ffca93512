"""Stage orchestration: each stage reads its predecessor's artifacts from the
output directory, writes its own, and records input/output checksums plus
counts in manifest.json.

Artifacts are byte-deterministic for a fixed config and seed in mock mode:
JSON is written with sorted keys, manifests hold only artifact-relative names,
and no timestamps appear anywhere.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Mapping, Sequence

from . import collect as collect_mod
from . import extract as extract_mod
from .config import Config
from .dedup import dedup_run, load_stopwords
from .evalharness import audit_dedup, evaluate_search, load_labeled_queries
from .model import CorpusStats, PageDocument, read_challenges_jsonl, write_challenges_jsonl
from .providers import ProviderSet
from .search import SearchRequest, search
from .store import build_store, load_store, save_store

logger = logging.getLogger(__name__)

DOCUMENTS = "documents.jsonl"
FILTERED = "filtered.jsonl"
CHALLENGES = "challenges.jsonl"
EXTRACTION_REPORT = "extraction_report.json"
DEDUPED = "challenges_dedup.jsonl"
DEDUP_AUDIT = "dedup_audit.json"
REMOVED_MAP = "removed_map.jsonl"
STORE = "store.bin"
EVAL_JSON = "eval_report.json"
EVAL_CSV = "eval_report.csv"
PR_CSV = "pr_points.csv"
AUDIT_WORKSHEETS = "audit_worksheets.json"
MANIFEST = "manifest.json"

PIPELINE_STAGES = ("collect", "filter", "extract", "dedup", "index", "eval")


class MissingInput(Exception):
    """A stage's required input artifact or fixture is absent."""

    def __init__(self, stage: str, path):
        super().__init__(f"stage {stage}: missing input {path}")
        self.stage = stage
        self.path = path


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, ensure_ascii=False, indent=2)
        fh.write("\n")


def _write_jsonl(path: Path, rows: Sequence[Mapping]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _require(stage: str, path: Path | None) -> Path:
    if path is None or not Path(path).exists():
        raise MissingInput(stage, path)
    return Path(path)


def _update_manifest(
    cfg: Config, stage: str, inputs: Mapping[str, Path], outputs: Mapping[str, Path], counts: dict
) -> None:
    manifest_path = cfg.out_dir / MANIFEST
    manifest = {"config_hash": cfg.config_hash, "seed": cfg.seed, "stages": {}}
    if manifest_path.exists():
        with open(manifest_path, "r", encoding="utf-8") as fh:
            previous = json.load(fh)
        # a config change invalidates previously recorded stages
        if previous.get("config_hash") == cfg.config_hash:
            manifest["stages"] = previous.get("stages", {})
    manifest["stages"][stage] = {
        "inputs": {name: _sha256(path) for name, path in sorted(inputs.items())},
        "outputs": {name: _sha256(path) for name, path in sorted(outputs.items())},
        "counts": counts,
    }
    _write_json(manifest_path, manifest)


def _out(cfg: Config, name: str) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir / name


def _judge_table_input(cfg: Config) -> dict[str, Path]:
    table = cfg.judge_table_path()
    return {"judge_table": table} if table is not None and table.exists() else {}


def stage_collect(cfg: Config, providers: ProviderSet) -> dict:
    serp_paths = cfg.serp_paths()
    if not serp_paths:
        raise MissingInput("collect", "paths.serp (no files configured)")
    inputs = {}
    for i, p in enumerate(serp_paths):
        inputs[f"serp[{i}]"] = _require("collect", p)
    pages_path = _require("collect", cfg.path("pages"))
    inputs["pages"] = pages_path

    stats = CorpusStats()
    records = collect_mod.ingest_serp(serp_paths, stats=stats)
    blocklist_path = cfg.path("blocklist")
    if blocklist_path is not None:
        inputs["blocklist"] = _require("collect", blocklist_path)
        blocklist = collect_mod.Blocklist.from_file(blocklist_path)
    else:
        blocklist = collect_mod.Blocklist.default()
    kept = collect_mod.apply_blocklist(records, blocklist)

    fetcher = collect_mod.FixturePageFetcher.from_file(pages_path)
    docs, fetch_counts = collect_mod.fetch_pages(kept, fetcher)

    out_path = _out(cfg, DOCUMENTS)
    _write_jsonl(
        out_path,
        [{"url": d.url, "title": d.title, "snippet": d.snippet, "text": d.text} for d in docs],
    )
    counts = {
        "raw_results": stats.n_raw_results,
        "unique_urls": stats.n_unique_urls,
        "blocked": len(records) - len(kept),
        "documents": len(docs),
        **fetch_counts,
    }
    _update_manifest(cfg, "collect", inputs, {DOCUMENTS: out_path}, counts)
    return counts


def stage_filter(cfg: Config, providers: ProviderSet) -> dict:
    in_path = _require("filter", cfg.out_dir / DOCUMENTS)
    docs = [
        PageDocument(url=r["url"], text=r["text"], title=r["title"], snippet=r["snippet"])
        for r in _read_jsonl(in_path)
    ]
    kept, counts = collect_mod.filter_pages(
        docs, providers.judge, keep_threshold=cfg.collect["keep_threshold"]
    )
    out_path = _out(cfg, FILTERED)
    _write_jsonl(
        out_path,
        [
            {
                "url": d.url,
                "title": d.title,
                "snippet": d.snippet,
                "text": d.text,
                "likelihood": d.likelihood,
            }
            for d in kept
        ],
    )
    inputs = {DOCUMENTS: in_path, **_judge_table_input(cfg)}
    _update_manifest(cfg, "filter", inputs, {FILTERED: out_path}, counts)
    return counts


def stage_extract(cfg: Config, providers: ProviderSet) -> dict:
    in_path = _require("extract", cfg.out_dir / FILTERED)
    docs = [
        PageDocument(
            url=r["url"],
            text=r["text"],
            title=r["title"],
            snippet=r["snippet"],
            likelihood=r.get("likelihood"),
        )
        for r in _read_jsonl(in_path)
    ]
    challenges, report = extract_mod.extract_corpus(docs, providers.judge)
    out_path = _out(cfg, CHALLENGES)
    write_challenges_jsonl(out_path, challenges)
    report_path = _out(cfg, EXTRACTION_REPORT)
    _write_json(report_path, report)
    inputs = {FILTERED: in_path, **_judge_table_input(cfg)}
    _update_manifest(
        cfg, "extract", inputs, {CHALLENGES: out_path, EXTRACTION_REPORT: report_path}, report
    )
    return report


def stage_dedup(cfg: Config, providers: ProviderSet) -> dict:
    in_path = _require("dedup", cfg.out_dir / CHALLENGES)
    challenges = read_challenges_jsonl(in_path)
    stopwords_path = cfg.path("stopwords")
    stopwords = load_stopwords(stopwords_path) if stopwords_path else load_stopwords()
    result = dedup_run(
        challenges,
        providers.embedder,
        providers.judge,
        stopwords=stopwords,
        low=cfg.dedup["low"],
        high=cfg.dedup["high"],
        prefilter_action=cfg.dedup["prefilter_action"],
        prefilter_title=cfg.dedup["prefilter_title"],
    )
    out_path = _out(cfg, DEDUPED)
    write_challenges_jsonl(out_path, result.challenges)
    audit_path = _out(cfg, DEDUP_AUDIT)
    _write_json(audit_path, result.audit)
    removed_path = _out(cfg, REMOVED_MAP)
    _write_jsonl(removed_path, result.removed)
    inputs = {CHALLENGES: in_path, **_judge_table_input(cfg)}
    outputs = {DEDUPED: out_path, DEDUP_AUDIT: audit_path, REMOVED_MAP: removed_path}
    _update_manifest(cfg, "dedup", inputs, outputs, result.audit)
    return result.audit


def stage_index(cfg: Config, providers: ProviderSet) -> dict:
    in_path = _require("index", cfg.out_dir / DEDUPED)
    challenges = read_challenges_jsonl(in_path)
    store = build_store(challenges, providers.embedder)
    out_path = _out(cfg, STORE)
    save_store(store, out_path)
    counts = {"count": len(store), "dim": store.dim}
    _update_manifest(cfg, "index", {DEDUPED: in_path}, {STORE: out_path}, counts)
    return counts


def stage_eval(cfg: Config, providers: ProviderSet) -> dict:
    store_path = _require("eval", cfg.out_dir / STORE)
    queries_path = _require("eval", cfg.path("queries"))
    store = load_store(store_path)
    queries = load_labeled_queries(queries_path)
    report = evaluate_search(
        store, queries, providers, retrieve_k=cfg.search["retrieve_k"]
    )
    json_path = _out(cfg, EVAL_JSON)
    _write_json(json_path, report.to_dict())
    csv_path = _out(cfg, EVAL_CSV)
    report.write_csv(csv_path)
    pr_path = _out(cfg, PR_CSV)
    report.write_pr_csv(pr_path)
    inputs = {STORE: store_path, "queries": queries_path, **_judge_table_input(cfg)}
    outputs = {EVAL_JSON: json_path, EVAL_CSV: csv_path, PR_CSV: pr_path}
    counts = {"n_queries": report.header["n_queries"], "failed": report.header["failed"]}
    _update_manifest(cfg, "eval", inputs, outputs, counts)
    return counts


def stage_audit(cfg: Config, providers: ProviderSet) -> dict:
    before_path = _require("audit", cfg.out_dir / CHALLENGES)
    removed_path = _require("audit", cfg.out_dir / REMOVED_MAP)
    after_path = _require("audit", cfg.out_dir / DEDUPED)
    worksheets = audit_dedup(
        sample_size=cfg.eval["audit_sample_size"],
        rng_seed=cfg.seed,
        removed=_read_jsonl(removed_path),
        corpus_before=read_challenges_jsonl(before_path),
        corpus_after=read_challenges_jsonl(after_path),
        embedder=providers.embedder,
    )
    out_path = _out(cfg, AUDIT_WORKSHEETS)
    _write_json(out_path, worksheets)
    inputs = {CHALLENGES: before_path, REMOVED_MAP: removed_path, DEDUPED: after_path}
    counts = {
        "precision_rows": len(worksheets["precision_worksheet"]),
        "recall_rows": len(worksheets["recall_worksheet"]),
    }
    _update_manifest(cfg, "audit", inputs, {AUDIT_WORKSHEETS: out_path}, counts)
    return counts


def stage_search(
    cfg: Config, providers: ProviderSet, wish: str, k: int | None = None, validate: bool | None = None
) -> dict:
    store = load_store(_require("search", cfg.out_dir / STORE))
    request = SearchRequest(
        wish=wish,
        k=cfg.search["k"] if k is None else k,
        retrieve_k=cfg.search["retrieve_k"],
        validate=cfg.search["validate"] if validate is None else validate,
    )
    request.retrieve_k = max(request.k, request.retrieve_k)
    outcome = search(store, request, providers)
    return {
        "query": wish,
        "degraded": outcome.degraded,
        "results": [r.to_dict() for r in outcome.results],
    }


STAGE_FUNCTIONS = {
    "collect": stage_collect,
    "filter": stage_filter,
    "extract": stage_extract,
    "dedup": stage_dedup,
    "index": stage_index,
    "eval": stage_eval,
    "audit": stage_audit,
}


def run_pipeline(cfg: Config, providers: ProviderSet, stages: Sequence[str] = PIPELINE_STAGES) -> dict:
    """Run stages in order; returns {stage: counts}."""
    results = {}
    for stage in stages:
        logger.info("running stage %s", stage)
        results[stage] = STAGE_FUNCTIONS[stage](cfg, providers)
    return results
