"""FastAPI service exposing every subcommand as a POST endpoint.

The request body is exactly the config document the CLI reads from disk
(strictness toggled by the ``strict`` query parameter), and the response
carries the deterministic artifact plus the human-readable summary.  Config
problems and numerical failures both surface as 422 with a ``kind`` field the
thin client maps onto exit codes.
"""

from __future__ import annotations

import json

from fastapi import Body, FastAPI, HTTPException, Query
from pydantic import BaseModel

from . import __version__
from .dynamics import CutoffConvergenceError, NormDriftError, TimeRangeError
from .gate import NoSolutionError
from .params import ParameterError
from .runconfig import CONFIG_TYPES, ConfigError, parse_config
from .runner import run_subcommand

KIND_CONFIG = "config"
KIND_NUMERICAL = "numerical"

app = FastAPI(
    title="swapmech",
    version=__version__,
    description="Mechanically mediated two-atom swap gate: design and simulation",
)


class RunResponse(BaseModel):
    subcommand: str
    summary: str
    artifact: str
    artifact_kind: str


class HealthResponse(BaseModel):
    status: str
    version: str


@app.get("/v1/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


def _execute(subcommand: str, payload: dict, strict: bool) -> RunResponse:
    try:
        cfg = parse_config(json.dumps(payload), subcommand, strict=strict)
        result = run_subcommand(subcommand, cfg)
    except (ConfigError, ParameterError) as err:
        raise HTTPException(
            status_code=422, detail={"kind": KIND_CONFIG, "message": str(err)}
        ) from None
    except (NoSolutionError, NormDriftError, CutoffConvergenceError,
            TimeRangeError) as err:
        raise HTTPException(
            status_code=422, detail={"kind": KIND_NUMERICAL, "message": str(err)}
        ) from None
    return RunResponse(
        subcommand=result.subcommand,
        summary=result.summary,
        artifact=result.artifact,
        artifact_kind=result.artifact_kind,
    )


def _register(name: str) -> None:
    @app.post(f"/v1/{name}", response_model=RunResponse, name=f"run_{name}")
    def endpoint(
        payload: dict = Body(...),
        strict: bool = Query(default=True),
    ) -> RunResponse:
        return _execute(name, payload, strict)


for _subcommand in CONFIG_TYPES:
    _register(_subcommand)
