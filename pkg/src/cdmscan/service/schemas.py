"""Pydantic request/response models for the service endpoints."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class GenerateDataRequest(BaseModel):
    out_dir: str
    config_path: str | None = None
    reps: int = Field(default=3, ge=1)
    noise: bool = True
    seed: int = 42
    scan_tips_deg: list[float] | None = None


class GenerateDataResponse(BaseModel):
    files: list[str]
    manifest_path: str
    trials: int
    rows_per_trial: int
    scan_files: list[str] = []


class TrainRequest(BaseModel):
    data_dir: str
    out_model: str
    config_path: str | None = None
    epochs: int | None = Field(default=None, ge=0)
    seed: int | None = None
    batch_size: int | None = Field(default=None, ge=1)
    learning_rate: float | None = Field(default=None, gt=0)
    validation_fraction: float | None = Field(default=None, gt=0, lt=1)


class TrainResponse(BaseModel):
    model_path: str
    history_path: str
    epochs: int
    n_train_samples: int
    n_val_samples: int
    val_trial_ids: list[str]
    final_train_loss: float | None
    final_val_loss: float | None
    final_val_r2: float | None
    final_val_rmse_mm: float | None


class EvaluateRequest(BaseModel):
    model_path: str
    data_dir: str
    config_path: str | None = None
    trial_ids: list[str] | None = None
    out_csv: str | None = None


class JointErrorEntry(BaseModel):
    joint: int
    mean_err_mm: float
    standard_err_mm: float | None
    samples: int


class EvaluateResponse(BaseModel):
    per_joint: list[JointErrorEntry]
    total_mean_mm: float
    total_standard_err_mm: float | None
    total_samples: int
    table: str
    report_csv: str | None = None


class ReconstructRequest(BaseModel):
    model_path: str
    scan_csv: str
    out_svg: str
    config_path: str | None = None


class ReconstructResponse(BaseModel):
    svg_path: str
    shape_csv_path: str
    predicted_markers: list[list[float]]
    truth_markers: list[list[float]]
    max_marker_err_mm: float


class BenchRequest(BaseModel):
    model_path: str
    iterations: int = Field(default=10_000, ge=1)
    warmup: int = Field(default=200, ge=0)


class BenchResponse(BaseModel):
    mean_ms: float
    median_ms: float
    p99_ms: float
    iterations: int


class ReadingIn(BaseModel):
    r_left: float = Field(gt=0)
    r_right: float = Field(gt=0)
    e_left: float = Field(ge=0)
    e_right: float = Field(ge=0)


class PredictRequest(BaseModel):
    model_path: str
    readings: list[ReadingIn]


class PredictResponse(BaseModel):
    positions: list[list[float]]
