"""HTTP service wrapping the experiment runner.

Endpoints accept and return pydantic models; dataset and output paths
in a request are resolved on the machine the service runs on. Error
mapping: configuration/input/state problems return 400, non-finite
numerics return 500, both with an ``error_kind`` field the CLI turns
into exit codes.
"""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .config import ExperimentConfig
from .datasets import write_synthetic
from .errors import MvilError, NumericError
from .runner import run_experiment
from .training import run_standard_gradient_checks

__all__ = ["create_app"]


class HealthResponse(BaseModel):
    status: str
    version: str


class RunExperimentRequest(BaseModel):
    config: ExperimentConfig
    repeats: int = Field(default=1, ge=1)
    ablation: bool = False
    single_view_baselines: bool = False
    dump_embeddings: bool = False


class RunExperimentResponse(BaseModel):
    report_path: str
    report_text: str
    summary: dict


class GradientCheckRequest(BaseModel):
    size: str = "small"
    tol: float = Field(default=1e-6, gt=0)
    step: float = Field(default=1e-5, gt=0)


class GradientCheckCase(BaseModel):
    name: str
    max_rel_error: float
    passed: bool
    per_param: dict


class GradientCheckResponse(BaseModel):
    passed: bool
    tol: float
    cases: list[GradientCheckCase]


class MakeSyntheticRequest(BaseModel):
    views: int = Field(default=3, ge=1)
    n: int = Field(default=300, ge=4)
    classes: int = Field(default=3, ge=2)
    seed: int = 0
    out_dir: str


class MakeSyntheticResponse(BaseModel):
    directory: str
    view_files: list[str]
    label_file: str
    samples: int
    classes: int


def create_app() -> FastAPI:
    app = FastAPI(title="mvil", version=__version__)

    @app.exception_handler(MvilError)
    async def mvil_error_handler(request: Request, exc: MvilError):
        kind = "numeric" if isinstance(exc, NumericError) else "config"
        status = 500 if kind == "numeric" else 400
        return JSONResponse(status_code=status,
                            content={"detail": str(exc), "error_kind": kind})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/experiments/run", response_model=RunExperimentResponse)
    def run(request: RunExperimentRequest):
        result = run_experiment(
            request.config,
            repeats=request.repeats,
            ablation=request.ablation,
            single_view_baselines=request.single_view_baselines,
            dump_embeddings=request.dump_embeddings,
        )
        return RunExperimentResponse(
            report_path=result.report_path,
            report_text=result.report_text,
            summary=result.summary,
        )

    @app.post("/gradient-check", response_model=GradientCheckResponse)
    def gradient_check(request: GradientCheckRequest):
        if request.size != "small":
            return JSONResponse(
                status_code=400,
                content={"detail": f"unknown size {request.size!r}; only 'small' exists",
                         "error_kind": "config"},
            )
        results = run_standard_gradient_checks(h=request.step, tol=request.tol)
        cases = [
            GradientCheckCase(name=name, max_rel_error=rep.max_rel_error,
                              passed=rep.passed, per_param=rep.per_param)
            for name, rep in results
        ]
        return GradientCheckResponse(
            passed=all(c.passed for c in cases), tol=request.tol, cases=cases
        )

    @app.post("/synthetic-dataset", response_model=MakeSyntheticResponse)
    def synthetic(request: MakeSyntheticRequest):
        info = write_synthetic(request.out_dir, views=request.views, n=request.n,
                               classes=request.classes, seed=request.seed)
        return MakeSyntheticResponse(**info)

    return app


app = create_app()
