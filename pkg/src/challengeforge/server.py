"""HTTP surface: /api/search and /api/health plus optional static UI hosting.

Parameters are parsed by hand so contract violations return 400 (not a
framework-shaped 422), and provider outages map to 503.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .search import (
    MAX_K,
    BadRequest,
    SearchRequest,
    ServiceUnavailable,
    search,
)
from .store import ChallengeStore, ProviderTagMismatch

logger = logging.getLogger(__name__)

_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}


def _error(status: int, error_type: str, message: str) -> JSONResponse:
    # same envelope the CLI prints on stderr, so clients parse one shape
    return JSONResponse(
        status_code=status, content={"error": {"type": error_type, "message": message}}
    )


def create_app(
    store: ChallengeStore,
    providers,
    static_dir=None,
    default_k: int = 5,
    retrieve_k: int = 50,
) -> FastAPI:
    app = FastAPI(title="challenge search", docs_url=None, redoc_url=None)

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "corpus_size": len(store),
            "provider_tag": store.provider_tag,
        }

    @app.get("/api/search")
    def api_search(request: Request):
        params = request.query_params
        wish = params.get("q", "")
        if not wish.strip():
            return _error(400, "bad_request", "q must be a nonempty wish")

        raw_k = params.get("k", str(default_k))
        try:
            k = int(raw_k)
        except ValueError:
            return _error(400, "bad_request", f"k must be an integer: {raw_k!r}")
        if not 1 <= k <= MAX_K:
            return _error(400, "bad_request", f"k must be in [1, {MAX_K}]: {k}")

        raw_validate = params.get("validate", "true").lower()
        if raw_validate in _TRUE:
            validate = True
        elif raw_validate in _FALSE:
            validate = False
        else:
            return _error(400, "bad_request", f"validate must be true or false: {raw_validate!r}")

        req = SearchRequest(
            wish=wish, k=k, retrieve_k=max(k, retrieve_k), validate=validate
        )
        try:
            outcome = search(store, req, providers)
        except BadRequest as exc:
            return _error(400, "bad_request", str(exc))
        except (ServiceUnavailable, ProviderTagMismatch) as exc:
            logger.error("search unavailable: %s", exc)
            return _error(503, "unavailable", str(exc))
        return {
            "query": wish,
            "degraded": outcome.degraded,
            "results": [r.to_dict() for r in outcome.results],
        }

    if static_dir and Path(static_dir).is_dir():
        # mounted last so /api/* keeps precedence
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return {
                "service": "challenge search",
                "endpoints": ["/api/search?q=<wish>&k=<1..50>&validate=<true|false>", "/api/health"],
            }

    return app


def run_server(app: FastAPI, host: str = "127.0.0.1", port: int = 8030) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")
