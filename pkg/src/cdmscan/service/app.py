"""FastAPI application exposing the simulator and calibration pipeline."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

import cdmscan
from cdmscan.calib import ModelLoadError
from cdmscan.service import ops, schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="cdmscan",
        description="Synthetic RFS shape-sensing pipeline for a planar continuum manipulator.",
        version=cdmscan.__version__,
    )

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ModelLoadError)
    async def _bad_model(request: Request, exc: ModelLoadError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def _missing(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=cdmscan.__version__)

    @app.post("/datasets/generate", response_model=schemas.GenerateDataResponse)
    def generate(req: schemas.GenerateDataRequest) -> schemas.GenerateDataResponse:
        return ops.generate_data(req)

    @app.post("/models/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
        return ops.train_model(req)

    @app.post("/models/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        return ops.evaluate_model(req)

    @app.post("/models/predict", response_model=schemas.PredictResponse)
    def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
        return ops.predict(req)

    @app.post("/reconstruction", response_model=schemas.ReconstructResponse)
    def reconstruct(req: schemas.ReconstructRequest) -> schemas.ReconstructResponse:
        return ops.reconstruct_scan(req)

    @app.post("/benchmark", response_model=schemas.BenchResponse)
    def benchmark(req: schemas.BenchRequest) -> schemas.BenchResponse:
        return ops.benchmark_model(req)

    return app
