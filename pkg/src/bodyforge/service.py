"""HTTP facade: avatar authoring and batch evaluation over JSON.

The app is a factory so tests and deployments can point it at different
assets, bins, and lexicons; everything shared is loaded once at startup and
treated as immutable, so requests never mutate server state and identical
requests produce identical responses (the solver seed is part of the server
configuration for exactly that reason).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Mapping

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from . import __version__
from .bodymodel import (
    BodyModelAsset,
    ShapeParams,
    asset_document,
    builtin_asset,
    evaluate_mesh,
    load_asset,
)
from .errors import (
    InputError,
    JsonlFormatError,
    SolverNumericalError,
    UnparseableDescriptionError,
)
from .labeling import BinTable, assign_labels, bins_document, default_bins, load_bins
from .losseval import evaluate_predictions, parse_predictions, render_report
from .measure import measure_all
from .solver import SolveConfig, mesh_to_obj, solve_shape
from .textlang import Lexicon, default_lexicon, load_lexicon, parse_description

DEFAULT_BODY_LIMIT = 64 * 1024 * 1024

# SolveConfig fields a request may override; seed stays server-controlled
# unless explicitly overridden, keeping responses reproducible by default.
_SOLVE_OVERRIDE_FIELDS = (
    "max_iterations",
    "regularization",
    "seed",
    "starts",
    "fd_epsilon",
    "tolerance",
)


@dataclass(frozen=True)
class ServiceConfig:
    """Startup wiring: artifact paths (None = packaged defaults) and limits."""

    asset_path: str | None = None
    bins_path: str | None = None
    lexicon_path: str | None = None
    solver_seed: int = 0
    body_limit_bytes: int = DEFAULT_BODY_LIMIT
    request_budget_seconds: float = 2.0
    cors_origins: tuple[str, ...] = ()


def _sha256_of_document(doc: Mapping) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()


def _solve_config(config: ServiceConfig, overrides: Mapping | None) -> SolveConfig:
    kwargs = {"seed": config.solver_seed}
    if overrides:
        if not isinstance(overrides, Mapping):
            raise InputError("solve overrides must be an object")
        unknown = set(overrides) - set(_SOLVE_OVERRIDE_FIELDS)
        if unknown:
            raise InputError(f"unknown solve override(s): {sorted(unknown)}")
        kwargs.update(overrides)
    cfg = SolveConfig(**kwargs)
    cfg.validate()
    return cfg


def create_app(config: ServiceConfig = ServiceConfig()) -> FastAPI:
    asset: BodyModelAsset = (
        load_asset(config.asset_path) if config.asset_path else builtin_asset()
    )
    bins: BinTable = load_bins(config.bins_path) if config.bins_path else default_bins()
    lexicon: Lexicon = (
        load_lexicon(config.lexicon_path) if config.lexicon_path else default_lexicon()
    )
    asset_checksum = _sha256_of_document(asset_document(asset))
    bins_doc = bins_document(bins)
    # Build the per-asset measurement caches now so the first request
    # doesn't pay for them.
    import numpy as np
    from .measure import measure_many

    measure_many(asset, np.zeros((1, 10)))

    app = FastAPI(title="bodyforge", version=__version__)
    if config.cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "version": __version__,
            "asset": {
                "vertices": int(asset.template_vertices.shape[0]),
                "faces": int(asset.faces.shape[0]),
                "checksum": asset_checksum,
            },
        }

    @app.get("/v1/bins")
    def bins_endpoint() -> dict:
        return bins_doc

    @app.post("/v1/avatar")
    async def avatar(request: Request, format: str = Query(default="json")):
        body = await request.body()
        if len(body) > config.body_limit_bytes:
            raise HTTPException(status_code=413, detail="request body too large")
        try:
            payload = json.loads(body)
        except ValueError:
            raise HTTPException(status_code=400, detail="body must be JSON")
        if not isinstance(payload, dict) or not isinstance(
            payload.get("description"), str
        ):
            raise HTTPException(
                status_code=400, detail='body must be {"description": "..."}'
            )
        if format not in ("json", "obj"):
            raise HTTPException(status_code=400, detail="format must be json or obj")

        try:
            constraints, diagnostics = parse_description(
                lexicon, payload["description"]
            )
        except UnparseableDescriptionError as exc:
            diag = exc.diagnostics.as_dict() if exc.diagnostics else None
            return JSONResponse(
                status_code=422,
                content={
                    "error": "unparseable_description",
                    "detail": str(exc),
                    "diagnostics": diag,
                },
            )

        try:
            cfg = _solve_config(config, payload.get("solve"))
        except (InputError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

        try:
            result = solve_shape(asset, bins, constraints, cfg)
        except SolverNumericalError as exc:
            return JSONResponse(
                status_code=500,
                content={"error": "solver_numerical", "detail": str(exc)},
            )

        mesh = evaluate_mesh(asset, result.beta)
        if format == "obj":
            return PlainTextResponse(
                mesh_to_obj(mesh.vertices, mesh.faces), media_type="text/plain"
            )
        measurements = measure_all(asset, mesh)
        labels = assign_labels(bins, measurements)
        return {
            "beta": [float(v) for v in result.beta.values],
            "mesh": {
                "vertices": mesh.vertices.tolist(),
                "faces": mesh.faces.tolist(),
            },
            "measurements": measurements.as_dict(),
            "labels": labels,
            "diagnostics": diagnostics.as_dict(),
            "solve": {
                "satisfied": result.satisfied,
                "objective": result.objective,
                "iterations": result.iterations,
                "report": [
                    {
                        "measurement": r.measurement,
                        "level": r.level,
                        "interval": list(r.interval),
                        "achieved": r.achieved,
                        "satisfied": r.satisfied,
                    }
                    for r in result.report
                ],
            },
        }

    @app.post("/v1/evaluate")
    async def evaluate(request: Request):
        body = await request.body()
        if len(body) > config.body_limit_bytes:
            raise HTTPException(status_code=413, detail="request body too large")
        text = body.decode("utf-8", errors="replace")
        if not text.strip():
            raise HTTPException(status_code=400, detail="empty prediction body")
        try:
            records = parse_predictions(text)
            result = evaluate_predictions(asset, bins, lexicon, records)
        except JsonlFormatError as exc:
            return JSONResponse(
                status_code=400,
                content={
                    "error": "malformed_jsonl",
                    "detail": str(exc),
                    "line_number": exc.line_number,
                },
            )
        except InputError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return PlainTextResponse(render_report(result), media_type="text/plain")

    return app


def run_server(config: ServiceConfig = ServiceConfig(), host: str = "127.0.0.1", port: int = 8000) -> None:
    """Blocking uvicorn server (the CLI `serve` subcommand)."""
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
