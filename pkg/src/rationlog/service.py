"""HTTP reward-scoring service.

Exposes the reward function over JSON so an external trainer can score
completions without linking the library.  Scoring goes through the same
score_record path the CLI uses, so responses are bit-identical to
direct library calls.  The app holds only immutable configs, the length
stats, and a read-only scorer; requests never mutate state.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .corpus import Label
from .distill import LengthStats
from .perplexity import PerplexityScorer, ScorerUnavailable
from .rewards import RewardConfig, score_record

DEFAULT_CONFIG_ID = "default"


class ScoreRequest(BaseModel):
    log: str = Field(min_length=1)
    output: str = Field(min_length=1)
    truth: Label
    config_id: str | None = None


class ScoreResponse(BaseModel):
    format: float
    answer: float
    grounding: float
    coherence: float
    brevity: float
    think: float
    total: float
    well_formed: bool
    verdict: str | None
    config_id: str


class UnknownConfig(KeyError):
    pass


def create_app(
    stats: LengthStats,
    scorer: PerplexityScorer | None = None,
    configs: dict[str, RewardConfig] | None = None,
) -> FastAPI:
    if configs is None:
        configs = {DEFAULT_CONFIG_ID: RewardConfig()}
    if not configs:
        raise ValueError("need at least one reward config")
    app = FastAPI(title="rationlog reward service")
    app.state.configs = dict(configs)
    app.state.stats = stats
    app.state.scorer = scorer

    def resolve_config(config_id: str | None) -> tuple[str, RewardConfig]:
        name = config_id if config_id is not None else DEFAULT_CONFIG_ID
        if name not in app.state.configs:
            raise UnknownConfig(name)
        return name, app.state.configs[name]

    def score_one(req: ScoreRequest) -> ScoreResponse:
        name, cfg = resolve_config(req.config_id)
        row = score_record(req.log, req.output, req.truth, cfg, app.state.stats, app.state.scorer)
        return ScoreResponse(config_id=name, **row)

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError) -> JSONResponse:
        # schema violations are client errors, not unprocessable entities
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.exception_handler(UnknownConfig)
    async def on_unknown_config(request: Request, exc: UnknownConfig) -> JSONResponse:
        return JSONResponse(status_code=404, content={"detail": f"unknown config_id: {exc.args[0]}"})

    @app.exception_handler(ScorerUnavailable)
    async def on_scorer_unavailable(request: Request, exc: ScorerUnavailable) -> JSONResponse:
        return JSONResponse(status_code=503, content={"detail": str(exc)})

    @app.post("/v1/score", response_model=ScoreResponse)
    async def score(req: ScoreRequest) -> ScoreResponse:
        return score_one(req)

    @app.post("/v1/score/batch", response_model=list[ScoreResponse])
    async def score_batch(reqs: list[ScoreRequest]) -> list[ScoreResponse]:
        return [score_one(r) for r in reqs]

    @app.get("/v1/health")
    async def health() -> dict:
        return {
            "status": "ok",
            "configs": sorted(app.state.configs),
            "scorer": app.state.scorer is not None,
        }

    return app
