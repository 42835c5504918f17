"""Residual regression network, trainer and serialization for calibration."""

from cdmscan.calib.net import CalibModel, forward, init_model, loss_and_gradients
from cdmscan.calib.optim import AdamState, adam_step
from cdmscan.calib.train import TrainConfig, TrainHistory, r_squared, split_by_trial, train
from cdmscan.calib.model_io import (
    BadMagicError,
    ModelLoadError,
    TruncatedFileError,
    VersionMismatchError,
    load_model,
    save_model,
)

__all__ = [
    "AdamState",
    "BadMagicError",
    "CalibModel",
    "ModelLoadError",
    "TrainConfig",
    "TrainHistory",
    "TruncatedFileError",
    "VersionMismatchError",
    "adam_step",
    "forward",
    "init_model",
    "load_model",
    "loss_and_gradients",
    "r_squared",
    "save_model",
    "split_by_trial",
    "train",
]
