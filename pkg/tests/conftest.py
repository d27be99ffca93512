import copy
import shutil
from pathlib import Path

import pytest

from challengeforge.config import Config, DEFAULTS
from challengeforge.model import Challenge
from challengeforge.providers import build_providers

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"

FIXTURE_FILES = (
    "serp_results.jsonl",
    "pages.jsonl",
    "judge_table.json",
    "labeled_queries.jsonl",
)


def make_challenge(i: int, **overrides) -> Challenge:
    fields = {
        "id": f"c{i:05d}",
        "title": f"Challenge {i}",
        "description": f"Description number {i}.",
        "wish": f"I want habit {i}",
        "daily_action": f"perform habit number {i} daily",
        "source_url": "https://example.test/page",
    }
    fields.update(overrides)
    return Challenge(**fields)


def fixture_config(base_dir: Path, **extra_paths) -> Config:
    """Config rooted at a directory that holds copies of the bundled fixtures."""
    raw = copy.deepcopy(DEFAULTS)
    raw["paths"].update(
        serp=["serp_results.jsonl"],
        pages="pages.jsonl",
        queries="labeled_queries.jsonl",
        out_dir="out",
    )
    raw["paths"].update(extra_paths)
    raw["providers"]["judge"]["table"] = "judge_table.json"
    return Config(raw=raw, base_dir=base_dir)


@pytest.fixture
def fixture_dir(tmp_path: Path) -> Path:
    for name in FIXTURE_FILES:
        shutil.copy(FIXTURES / name, tmp_path / name)
    return tmp_path


@pytest.fixture
def fixture_env(fixture_dir: Path):
    cfg = fixture_config(fixture_dir)
    providers = build_providers(cfg.providers, seed=cfg.seed, base_dir=cfg.base_dir)
    return cfg, providers
