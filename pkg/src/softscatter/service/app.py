"""HTTP service exposing the pipeline operations.

The service is a thin typed wrapper over :mod:`softscatter.pipeline`: every
endpoint validates its request model, runs the corresponding operation, and
returns the artifacts as JSON payloads.  Domain errors surface as structured
responses ``{"detail": {"error_class": ..., "message": ..., ...}}`` with a
status code per error family, which clients (the CLI included) map back to
exit codes.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import SoftScatterError
from ..pipeline import run_design, run_forward, run_simulate, run_validate
from ..storage import sanitize_json
from .schemas import (
    DesignRequest,
    DesignResponse,
    DensityPayload,
    EnsemblePayload,
    FieldPayload,
    ForwardRequest,
    ForwardResponse,
    HealthResponse,
    PatternPayload,
    SimulateRequest,
    SimulateResponse,
    SimulationRun,
    ValidateRequest,
    ValidateResponse,
)

logger = logging.getLogger(__name__)

__all__ = ["create_app"]


def create_app() -> FastAPI:
    app = FastAPI(title="softscatter", version=__version__)

    @app.exception_handler(SoftScatterError)
    async def _domain_error(request: Request, exc: SoftScatterError) -> JSONResponse:
        logger.warning("%s on %s: %s", type(exc).__name__, request.url.path, exc)
        detail = {"error_class": type(exc).__name__, "message": str(exc)}
        detail.update(sanitize_json(exc.payload))
        return JSONResponse(status_code=exc.http_status, content={"detail": detail})

    @app.get("/healthz", response_model=HealthResponse)
    async def healthz() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/api/forward", response_model=ForwardResponse)
    def forward(request: ForwardRequest) -> ForwardResponse:
        pattern, report = run_forward(request.config, request.q.to_field())
        return ForwardResponse(pattern=PatternPayload.from_pattern(pattern),
                               report=report)

    @app.post("/api/design", response_model=DesignResponse)
    def design(request: DesignRequest) -> DesignResponse:
        result = run_design(request.config, request.target.to_pattern())
        density = result["density"]
        return DesignResponse(
            h=FieldPayload.from_field(result["h"]),
            u=FieldPayload.from_field(result["u"]),
            q=FieldPayload.from_field(result["q"]),
            density=None if density is None else DensityPayload.from_density(density),
            report=result["report"],
        )

    @app.post("/api/simulate", response_model=SimulateResponse)
    def simulate(request: SimulateRequest) -> SimulateResponse:
        q = request.q.to_field() if request.q is not None else None
        density = request.density.to_density() if request.density is not None else None
        result = run_simulate(request.config, q=q, density=density)
        runs = [
            SimulationRun(
                M=run["M"], seed=run["seed"],
                ensemble=EnsemblePayload.from_ensemble(
                    run["ensemble"], meta={"M": run["M"], "seed": run["seed"]}),
                pattern=PatternPayload.from_pattern(run["pattern"]),
            )
            for run in result["runs"]
        ]
        reference = result["reference"]
        return SimulateResponse(
            runs=runs,
            reference=None if reference is None else PatternPayload.from_pattern(reference),
            report=result["report"],
        )

    @app.post("/api/validate", response_model=ValidateResponse)
    def validate(request: ValidateRequest) -> ValidateResponse:
        return ValidateResponse(report=run_validate(request.config))

    return app
