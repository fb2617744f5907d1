"""HTTP service wrapping the pipeline.

Every pipeline entry point is a POST endpoint taking a pydantic request
body and returning a structured response. Domain errors map onto status
codes with a machine-readable ``kind``: configuration problems are 400,
data problems 422, anything else 500. The CLI is a thin client of this
app (in process by default, over the network with ``--server``).
"""

from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__, pipeline
from .config import ExperimentConfig
from .dataio import build_dataset, read_records
from .errors import ConfigurationError, DataError, DsrcSenseError

app = FastAPI(title="dsrcsense", version=__version__)


@app.exception_handler(ConfigurationError)
async def _config_error(_request: Request, exc: ConfigurationError) -> JSONResponse:
    return JSONResponse(status_code=400,
                        content={"detail": {"kind": "config", "message": str(exc)}})


@app.exception_handler(DataError)
async def _data_error(_request: Request, exc: DataError) -> JSONResponse:
    return JSONResponse(status_code=422,
                        content={"detail": {"kind": "data", "message": str(exc)}})


@app.exception_handler(DsrcSenseError)
async def _internal_error(_request: Request, exc: DsrcSenseError) -> JSONResponse:
    return JSONResponse(status_code=500,
                        content={"detail": {"kind": "internal", "message": str(exc)}})


class HealthResponse(BaseModel):
    status: str
    version: str


@app.get("/health", response_model=HealthResponse)
async def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


class SynthesizeRequest(BaseModel):
    config: ExperimentConfig
    out_dir: str | None = None
    write_scenes: bool = False


class SynthesizeResponse(BaseModel):
    dataset_path: str
    manifest_path: str
    scenes_path: str | None
    rows: int
    snapshots: int
    zero_count_snapshots: int
    count_min: int
    count_max: int
    sigma_sq: float
    elapsed_s: float


@app.post("/synthesize", response_model=SynthesizeResponse)
async def synthesize(req: SynthesizeRequest) -> SynthesizeResponse:
    summary = pipeline.synthesize_dataset(req.config, req.out_dir, req.write_scenes)
    return SynthesizeResponse(**asdict(summary))


class IngestRequest(BaseModel):
    path: str
    receivers: int = Field(default=1, ge=1)
    gamma: float | str = "median"


class RejectedRowModel(BaseModel):
    line: int
    reason: str


class IngestResponse(BaseModel):
    snapshots: int
    feature_width: int
    gamma: float
    positives: int
    negatives: int
    count_min: int
    count_max: int
    rejected: list[RejectedRowModel]


@app.post("/ingest", response_model=IngestResponse)
async def ingest(req: IngestRequest) -> IngestResponse:
    records, rejected = read_records(req.path)
    dataset = build_dataset(records, req.receivers, req.gamma)
    return IngestResponse(
        snapshots=int(dataset.snapshots.size),
        feature_width=int(dataset.features.shape[1]),
        gamma=dataset.gamma,
        positives=int((dataset.labels == 1).sum()),
        negatives=int((dataset.labels == -1).sum()),
        count_min=int(dataset.counts.min()),
        count_max=int(dataset.counts.max()),
        rejected=[RejectedRowModel(line=r.line, reason=r.reason) for r in rejected],
    )


class EvaluateRequest(BaseModel):
    config: ExperimentConfig
    dataset_path: str | None = None
    out_dir: str | None = None


class ModelResultModel(BaseModel):
    family: str
    task: str
    algorithm: str
    best_params: dict
    means: dict[str, float | None]
    defined_counts: dict[str, int]


class EvaluateResponse(BaseModel):
    gamma: float
    snapshots: int
    results: list[ModelResultModel]
    output_files: list[str]


def _result_models(outcomes: list[pipeline.ModelOutcome]) -> list[ModelResultModel]:
    return [
        ModelResultModel(
            family=o.family,
            task=o.task,
            algorithm=o.label,
            best_params=asdict(o.best_spec),
            means=o.report.means,
            defined_counts=o.report.defined_counts,
        )
        for o in outcomes
    ]


@app.post("/evaluate", response_model=EvaluateResponse)
async def evaluate(req: EvaluateRequest) -> EvaluateResponse:
    outcome = pipeline.evaluate_dataset(req.config, req.dataset_path, req.out_dir)
    return EvaluateResponse(
        gamma=outcome.gamma,
        snapshots=outcome.snapshots,
        results=_result_models(outcome.outcomes),
        output_files=outcome.output_files,
    )


class AblateRequest(BaseModel):
    config: ExperimentConfig
    dataset_path: str | None = None
    out_dir: str | None = None


class AblationVariantModel(BaseModel):
    variant: str
    results: list[ModelResultModel]


class AblateResponse(BaseModel):
    gamma: float
    variants: list[AblationVariantModel]
    output_files: list[str]


@app.post("/ablate", response_model=AblateResponse)
async def ablate(req: AblateRequest) -> AblateResponse:
    outcome = pipeline.ablate_dataset(req.config, req.dataset_path, req.out_dir)
    return AblateResponse(
        gamma=outcome.gamma,
        variants=[
            AblationVariantModel(variant=name, results=_result_models(outcomes))
            for name, outcomes in outcome.variants
        ],
        output_files=outcome.output_files,
    )


class ReportRequest(BaseModel):
    out_dir: str


class ReportResponse(BaseModel):
    text: str


@app.post("/report", response_model=ReportResponse)
async def report(req: ReportRequest) -> ReportResponse:
    return ReportResponse(text=pipeline.render_report(req.out_dir))
