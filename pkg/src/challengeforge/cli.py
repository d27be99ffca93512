"""forge: pipeline stages, one-off search, and the HTTP server as subcommands.

Every command takes one JSON config plus dotted --set overrides; failures
print a machine-readable error to stderr and exit with a stable code:
0 ok, 2 config, 3 missing input, 4 provider, 5 internal.
"""

from __future__ import annotations

import functools
import json
import logging
import sys

import click

from .config import Config, ConfigError, load_config
from .pipeline import (
    MissingInput,
    PIPELINE_STAGES,
    STAGE_FUNCTIONS,
    STORE,
    run_pipeline,
    stage_search,
)
from .providers import ProviderError, ProviderSet, build_providers
from .search import BadRequest, ServiceUnavailable
from .server import create_app, run_server
from .store import ProviderTagMismatch, StoreError, load_store

EXIT_CONFIG = 2
EXIT_MISSING_INPUT = 3
EXIT_PROVIDER = 4
EXIT_INTERNAL = 5


def _fail(code: int, kind: str, message: str) -> None:
    click.echo(json.dumps({"error": {"type": kind, "message": message}}), err=True)
    sys.exit(code)


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, BadRequest) as exc:
            _fail(EXIT_CONFIG, "config", str(exc))
        except MissingInput as exc:
            _fail(EXIT_MISSING_INPUT, "missing_input", str(exc))
        except FileNotFoundError as exc:
            _fail(EXIT_MISSING_INPUT, "missing_input", str(exc))
        except (ProviderError, ServiceUnavailable, ProviderTagMismatch) as exc:
            _fail(EXIT_PROVIDER, "provider", str(exc))
        except StoreError as exc:
            _fail(EXIT_INTERNAL, "store", str(exc))
        except Exception as exc:  # anything unplanned is an internal error
            logging.getLogger(__name__).exception("internal error")
            _fail(EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}")

    return wrapper


def config_options(fn):
    fn = click.option(
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override a config value by dotted path, e.g. dedup.high=0.72.",
    )(fn)
    fn = click.option(
        "--config",
        "config_path",
        required=True,
        type=click.Path(),
        help="Path to the JSON config file.",
    )(fn)
    return fn


def _setup(config_path: str, overrides: tuple[str, ...]) -> tuple[Config, ProviderSet]:
    cfg = load_config(config_path, overrides)
    providers = build_providers(cfg.providers, seed=cfg.seed, base_dir=cfg.base_dir)
    return cfg, providers


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log stage progress to stderr.")
def main(verbose: bool):
    """Curate a 30-day-challenge corpus and search it."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _stage_command(stage: str):
    @main.command(name=stage, help=f"Run the {stage} stage.")
    @config_options
    @guarded
    def command(config_path: str, overrides: tuple[str, ...]):
        cfg, providers = _setup(config_path, overrides)
        counts = STAGE_FUNCTIONS[stage](cfg, providers)
        _echo_json({"stage": stage, "counts": counts})

    return command


for _stage in ("collect", "filter", "extract", "dedup", "index", "eval", "audit"):
    _stage_command(_stage)


@main.command(name="run", help="Run collect, filter, extract, dedup, index and eval in order.")
@config_options
@guarded
def run_all(config_path: str, overrides: tuple[str, ...]):
    cfg, providers = _setup(config_path, overrides)
    results = run_pipeline(cfg, providers, PIPELINE_STAGES)
    _echo_json({"stages": results})


@main.command(name="search", help="Search the indexed corpus for one wish.")
@config_options
@click.option("--wish", required=True, help="The goal to search challenges for.")
@click.option("-k", type=int, default=None, help="Number of results (default from config).")
@click.option(
    "--validate/--no-validate",
    "validate",
    default=None,
    help="Toggle the relevance validation pass (default from config).",
)
@guarded
def search_command(config_path: str, overrides: tuple[str, ...], wish: str, k, validate):
    cfg, providers = _setup(config_path, overrides)
    _echo_json(stage_search(cfg, providers, wish=wish, k=k, validate=validate))


@main.command(name="serve", help="Serve /api/search, /api/health and the UI bundle.")
@config_options
@click.option("--host", default=None, help="Bind address (default from config).")
@click.option("--port", type=int, default=None, help="Port (default from config).")
@guarded
def serve_command(config_path: str, overrides: tuple[str, ...], host, port):
    cfg, providers = _setup(config_path, overrides)
    store_path = cfg.out_dir / STORE
    if not store_path.exists():
        raise MissingInput("serve", store_path)
    store = load_store(store_path)
    app = create_app(
        store,
        providers,
        static_dir=cfg.static_dir,
        default_k=cfg.search["k"],
        retrieve_k=cfg.search["retrieve_k"],
    )
    run_server(
        app,
        host=cfg.serve["host"] if host is None else host,
        port=cfg.serve["port"] if port is None else port,
    )


if __name__ == "__main__":
    main()
