"""Single JSON config file with dotted-path CLI overrides.

The config hash covers the merged pre-resolution dict (defaults + file +
overrides), so manifests stay comparable across checkouts while any
behavioral knob change shows up as a new hash.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path


class ConfigError(Exception):
    """Invalid or unusable configuration."""


DEFAULTS: dict = {
    "seed": 0,
    "providers": {
        "mode": "mock",
        "embedding": {"dim": 64, "model": None, "base_url": None},
        "judge": {"table": None, "model": None, "base_url": None},
        "rerank": {"model": None, "base_url": None},
    },
    "paths": {
        "serp": [],
        "pages": None,
        "blocklist": None,
        "stopwords": None,
        "queries": None,
        "out_dir": "out",
    },
    "collect": {"keep_threshold": 6},
    "dedup": {
        "low": 0.625,
        "high": 0.7,
        "prefilter_action": 0.92,
        "prefilter_title": 0.80,
    },
    "search": {"k": 5, "retrieve_k": 50, "validate": True},
    "eval": {"audit_sample_size": 100},
    "serve": {"port": 8030, "host": "127.0.0.1", "static_dir": None},
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _apply_override(raw: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"override must look like section.key=value: {assignment!r}")
    dotted, text = assignment.split("=", 1)
    keys = [k for k in dotted.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"empty override key: {assignment!r}")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = raw
    for key in keys[:-1]:
        nxt = node.get(key)
        if not isinstance(nxt, dict):
            nxt = {}
            node[key] = nxt
        node = nxt
    node[keys[-1]] = value


@dataclass
class Config:
    raw: dict
    base_dir: Path

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def providers(self) -> dict:
        return self.raw["providers"]

    @property
    def collect(self) -> dict:
        return self.raw["collect"]

    @property
    def dedup(self) -> dict:
        return self.raw["dedup"]

    @property
    def search(self) -> dict:
        return self.raw["search"]

    @property
    def eval(self) -> dict:
        return self.raw["eval"]

    @property
    def serve(self) -> dict:
        return self.raw["serve"]

    @property
    def out_dir(self) -> Path:
        return self._resolve(self.raw["paths"]["out_dir"])

    @property
    def static_dir(self) -> Path | None:
        value = self.raw["serve"].get("static_dir")
        return None if value is None else self._resolve(value)

    def path(self, name: str) -> Path | None:
        """Resolve a configured path relative to the config file's directory."""
        value = self.raw["paths"].get(name)
        if value is None:
            return None
        return self._resolve(value)

    def serp_paths(self) -> list[Path]:
        return [self._resolve(p) for p in self.raw["paths"]["serp"]]

    def judge_table_path(self) -> Path | None:
        value = self.raw["providers"].get("judge", {}).get("table")
        return None if value is None else self._resolve(value)

    def _resolve(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p


def _validate(raw: dict) -> None:
    mode = raw["providers"].get("mode")
    if mode not in ("mock", "remote"):
        raise ConfigError(f"providers.mode must be mock or remote: {mode!r}")
    if not isinstance(raw["seed"], int):
        raise ConfigError(f"seed must be an integer: {raw['seed']!r}")

    d = raw["dedup"]
    if not 0.0 <= d["low"] < d["high"] <= 1.0:
        raise ConfigError(
            f"dedup thresholds must satisfy 0 <= low < high <= 1: {d['low']}, {d['high']}"
        )
    for key in ("prefilter_action", "prefilter_title"):
        if not 0.0 <= d[key] <= 1.0:
            raise ConfigError(f"dedup.{key} must be in [0, 1]: {d[key]}")

    s = raw["search"]
    if not 1 <= s["k"] <= 50:
        raise ConfigError(f"search.k must be in [1, 50]: {s['k']}")
    if not s["k"] <= s["retrieve_k"] <= 200:
        raise ConfigError(f"search.retrieve_k must be in [k, 200]: {s['retrieve_k']}")

    threshold = raw["collect"]["keep_threshold"]
    if not isinstance(threshold, int) or not 0 <= threshold <= 10:
        raise ConfigError(f"collect.keep_threshold must be an integer in [0, 10]: {threshold!r}")

    if not isinstance(raw["paths"].get("serp"), list):
        raise ConfigError("paths.serp must be a list of files")


def load_config(path, overrides: tuple[str, ...] = ()) -> Config:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {path}: {exc.msg}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config root must be a JSON object: {path}")

    raw = _deep_merge(copy.deepcopy(DEFAULTS), loaded)
    for assignment in overrides:
        _apply_override(raw, assignment)
    _validate(raw)
    return Config(raw=raw, base_dir=path.resolve().parent)
