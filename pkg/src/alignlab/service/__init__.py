"""HTTP service wrapping the core library.

One POST endpoint per command; the CLI is a thin client of this app (served
in-process by default, over the network when a server URL is given).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..reporting import ConfigError, RunConfig, execute
from .models import (
    BoundsRequest,
    EllProfileRequest,
    HealthResponse,
    RateRequest,
    ResultRowModel,
    RunResponse,
    ScoreRequest,
    SimulateMomentsRequest,
    TransformRequest,
    VerifyAllRequest,
)


def _run(config: RunConfig) -> RunResponse:
    try:
        result = execute(config)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return RunResponse(
        rows=[ResultRowModel(**row.as_dict()) for row in result.rows],
        flags=result.flags,
        manifest=result.manifest,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="alignlab",
        version=__version__,
        description="Alignment-score Monte Carlo and bound verification service",
    )

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/v1/score", response_model=RunResponse)
    def score(req: ScoreRequest) -> RunResponse:
        return _run(req.to_config())

    @app.post("/v1/simulate-moments", response_model=RunResponse)
    def simulate_moments(req: SimulateMomentsRequest) -> RunResponse:
        return _run(req.to_config())

    @app.post("/v1/ell-profile", response_model=RunResponse)
    def ell_profile(req: EllProfileRequest) -> RunResponse:
        return _run(req.to_config())

    @app.post("/v1/transform", response_model=RunResponse)
    def transform(req: TransformRequest) -> RunResponse:
        return _run(req.to_config())

    @app.post("/v1/bounds", response_model=RunResponse)
    def bounds_cmd(req: BoundsRequest) -> RunResponse:
        return _run(req.to_config())

    @app.post("/v1/rate", response_model=RunResponse)
    def rate(req: RateRequest) -> RunResponse:
        return _run(req.to_config())

    @app.post("/v1/verify-all", response_model=RunResponse)
    def verify_all(req: VerifyAllRequest) -> RunResponse:
        return _run(req.to_config())

    return app
