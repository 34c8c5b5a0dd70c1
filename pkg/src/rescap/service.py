"""HTTP service wrapping the analysis pipeline.

Every endpoint accepts a RunConfig body and returns the command report
together with the named CSV tables, so remote runs carry exactly the
artifacts the CLI would write locally.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .config import RunConfig
from .errors import (
    AssumptionError,
    BlowUpError,
    CapError,
    ConfigError,
    DegenerateError,
    DomainError,
    NoResonanceError,
    SolvabilityError,
    UnsupportedOrderError,
)
from .pipeline import COMMANDS


class CommandResponse(BaseModel):
    report: dict
    tables: dict[str, str] = {}


def _run(command: str, cfg: RunConfig) -> CommandResponse:
    try:
        cfg = cfg.validate_consistency()
        result = COMMANDS[command](cfg)
    except (ConfigError, DomainError, UnsupportedOrderError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except (NoResonanceError, DegenerateError, AssumptionError) as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    except (BlowUpError, CapError, SolvabilityError) as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc
    return CommandResponse(report=result.report, tables=result.tables)


def create_app() -> FastAPI:
    app = FastAPI(title="rescap", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/resonance", response_model=CommandResponse)
    def resonance(cfg: RunConfig) -> CommandResponse:
        return _run("resonance", cfg)

    @app.post("/averaged", response_model=CommandResponse)
    def averaged(cfg: RunConfig) -> CommandResponse:
        return _run("averaged", cfg)

    @app.post("/classify", response_model=CommandResponse)
    def classify(cfg: RunConfig) -> CommandResponse:
        return _run("classify", cfg)

    @app.post("/simulate", response_model=CommandResponse)
    def simulate(cfg: RunConfig) -> CommandResponse:
        return _run("simulate", cfg)

    @app.post("/capture", response_model=CommandResponse)
    def capture(cfg: RunConfig) -> CommandResponse:
        return _run("capture", cfg)

    return app


app = create_app()
