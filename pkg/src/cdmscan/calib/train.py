"""Training loop for the calibration network: trial-level split, Adam, metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cdmscan.datagen import Dataset
from cdmscan.calib.kernel import FusedTrainer
from cdmscan.calib.net import CalibModel, forward_normalized, init_model

_DTYPES = {"float32": np.float32, "float64": np.float64}


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loop hyperparameters.

    ``dtype`` is the training compute precision; float32 roughly halves the
    wall time on CPU BLAS and is plenty for a regression target in mm.
    Gradient verification uses float64 models built directly via
    `init_model`.
    """

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    epochs: int = 200
    validation_fraction: float = 0.2
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must be in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        if self.dtype not in _DTYPES:
            raise ValueError(f"dtype must be one of {sorted(_DTYPES)}, got {self.dtype!r}")


@dataclass
class TrainHistory:
    """Per-epoch curves plus the validation trial ids used for the split."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_r2: list[float] = field(default_factory=list)
    val_rmse_mm: list[float] = field(default_factory=list)
    val_trial_ids: list[str] = field(default_factory=list)

    def to_csv(self, path) -> None:
        lines = ["epoch,train_loss,val_loss,val_r2,val_rmse_mm"]
        for i in range(len(self.train_loss)):
            lines.append(
                f"{i + 1},{self.train_loss[i]:.9g},{self.val_loss[i]:.9g},"
                f"{self.val_r2[i]:.9g},{self.val_rmse_mm[i]:.9g}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


def r_squared(predictions, targets) -> float:
    """Coefficient of determination pooled over both output dimensions.

    ``1 - SS_res / SS_tot`` with SS_tot taken around the per-dimension
    target means.  Raises on degenerate (constant) targets.
    """
    pred = np.asarray(predictions, dtype=float)
    targ = np.asarray(targets, dtype=float)
    if pred.shape != targ.shape or pred.size == 0:
        raise ValueError(f"predictions and targets must match and be nonempty, got {pred.shape} vs {targ.shape}")
    if pred.ndim == 1:
        pred = pred[:, None]
        targ = targ[:, None]
    ss_res = float(np.sum((pred - targ) ** 2))
    ss_tot = float(np.sum((targ - targ.mean(axis=0)) ** 2))
    if ss_tot == 0.0:
        raise ValueError("R^2 is undefined for constant targets")
    return 1.0 - ss_res / ss_tot


def split_by_trial(
    dataset: Dataset, validation_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic leakage-free split: whole trials go to one side.

    Returns boolean (train_mask, val_mask) over rows.
    """
    n_trials = dataset.n_trials
    if n_trials < 2:
        raise ValueError(f"need at least 2 trials for a held-out split, got {n_trials}")
    order = rng.permutation(n_trials)
    n_val = int(round(validation_fraction * n_trials))
    n_val = min(max(n_val, 1), n_trials - 1)
    val_trials = order[:n_val]
    val_mask = np.isin(dataset.trial_codes, val_trials)
    return ~val_mask, val_mask


def _fit_norms(x: np.ndarray, y: np.ndarray):
    in_mean = x.mean(axis=0)
    in_std = x.std(axis=0)
    in_std = np.where(in_std > 0, in_std, 1.0)
    out_mean = y.mean(axis=0)
    out_std = y.std(axis=0)
    out_std = np.where(out_std > 0, out_std, 1.0)
    return in_mean, in_std, out_mean, out_std


def train(dataset: Dataset, config: TrainConfig = TrainConfig()) -> tuple[CalibModel, TrainHistory]:
    """Fit the calibration network on a dataset of trial records.

    The validation split is per trial, normalization statistics come from
    the training rows only, and minibatches are reshuffled every epoch.
    Fully deterministic for a fixed config.
    """
    rng = np.random.default_rng(config.seed)
    train_mask, val_mask = split_by_trial(dataset, config.validation_fraction, rng)
    dtype = _DTYPES[config.dtype]

    x_train = dataset.features[train_mask]
    y_train = dataset.targets[train_mask]
    x_val = dataset.features[val_mask]
    y_val = dataset.targets[val_mask]

    in_mean, in_std, out_mean, out_std = _fit_norms(x_train, y_train)
    model = init_model(config.seed, dtype=dtype).with_norms(in_mean, in_std, out_mean, out_std)

    xt = ((x_train - in_mean) / in_std).astype(dtype)
    yt = ((y_train - out_mean) / out_std).astype(dtype)
    xv = ((x_val - in_mean) / in_std).astype(dtype)
    yv = ((y_val - out_mean) / out_std).astype(dtype)

    history = TrainHistory(val_trial_ids=[dataset.trial_ids[i] for i in np.unique(dataset.trial_codes[val_mask])])
    trainer = FusedTrainer(model, config)
    n_train = len(xt)
    for _ in range(config.epochs):
        order = rng.permutation(n_train)
        loss_sum = 0.0
        for start in range(0, n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss_sum += trainer.step(xt[idx], yt[idx]) * len(idx)
        history.train_loss.append(loss_sum / n_train)

        yn_pred = forward_normalized(model, xv)
        diff = yn_pred - yv
        history.val_loss.append(float(np.mean(diff * diff)))
        pred_mm = yn_pred.astype(float) * model.out_std.astype(float) + model.out_mean.astype(float)
        history.val_r2.append(r_squared(pred_mm, y_val))
        history.val_rmse_mm.append(float(np.sqrt(np.mean((pred_mm - y_val) ** 2))))
    return model, history
