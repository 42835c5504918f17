"""The calibration regressor: a residual MLP on raw numpy arrays.

Architecture: a linear layer expands the four scan features
[R_L, R_R, E_L, E_R] to a 1024-wide hidden vector, two residual blocks
refine it (each block: linear, relu, linear, add the block input, relu) and
a final linear layer maps to the predicted (x, y) in mm.  Inputs and targets
are standardized with per-feature statistics stored on the model, so the
loss lives in normalized space while `forward` speaks mm.

Backpropagation is hand-written reverse-mode accumulation; there is no
autograd dependency anywhere in the training stack.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

INPUT_DIM = 4
HIDDEN_DIM = 1024
OUTPUT_DIM = 2
N_BLOCKS = 2


def param_keys(n_blocks: int = N_BLOCKS) -> list[str]:
    """Canonical parameter ordering used everywhere (init, Adam, files)."""
    keys = ["expand.w", "expand.b"]
    for b in range(1, n_blocks + 1):
        keys += [f"block{b}.fc1.w", f"block{b}.fc1.b", f"block{b}.fc2.w", f"block{b}.fc2.b"]
    keys += ["head.w", "head.b"]
    return keys


@dataclass
class CalibModel:
    """Weights plus the normalization statistics they were trained with."""

    params: dict[str, np.ndarray]
    in_mean: np.ndarray
    in_std: np.ndarray
    out_mean: np.ndarray
    out_std: np.ndarray
    input_dim: int = INPUT_DIM
    hidden_dim: int = HIDDEN_DIM
    output_dim: int = OUTPUT_DIM
    n_blocks: int = N_BLOCKS

    def __post_init__(self):
        expected = set(param_keys(self.n_blocks))
        if set(self.params) != expected:
            raise ValueError(f"params must have keys {sorted(expected)}")
        for key, value in self.params.items():
            if not np.all(np.isfinite(value)):
                raise ValueError(f"parameter {key!r} contains non-finite values")
        if np.any(np.asarray(self.in_std) <= 0) or np.any(np.asarray(self.out_std) <= 0):
            raise ValueError("normalization stds must be positive")

    @property
    def dtype(self) -> np.dtype:
        return self.params["expand.w"].dtype

    def astype(self, dtype) -> "CalibModel":
        """Copy with every tensor cast to ``dtype``."""
        return replace(
            self,
            params={k: v.astype(dtype) for k, v in self.params.items()},
            in_mean=self.in_mean.astype(dtype),
            in_std=self.in_std.astype(dtype),
            out_mean=self.out_mean.astype(dtype),
            out_std=self.out_std.astype(dtype),
        )

    def with_norms(self, in_mean, in_std, out_mean, out_std) -> "CalibModel":
        dt = self.dtype
        return replace(
            self,
            in_mean=np.asarray(in_mean, dtype=dt),
            in_std=np.asarray(in_std, dtype=dt),
            out_mean=np.asarray(out_mean, dtype=dt),
            out_std=np.asarray(out_std, dtype=dt),
        )


def init_model(
    seed: int,
    *,
    input_dim: int = INPUT_DIM,
    hidden_dim: int = HIDDEN_DIM,
    output_dim: int = OUTPUT_DIM,
    n_blocks: int = N_BLOCKS,
    dtype=np.float64,
) -> CalibModel:
    """He-initialized model: weights ~ N(0, 2/fan_in), biases zero.

    Weights are drawn in float64 in the canonical parameter order and then
    cast, so a float32 model is exactly the cast of the float64 one for the
    same seed.  Normalization statistics start as the identity.
    """
    rng = np.random.default_rng(seed)
    dims: dict[str, tuple[int, int]] = {"expand.w": (input_dim, hidden_dim)}
    for b in range(1, n_blocks + 1):
        dims[f"block{b}.fc1.w"] = (hidden_dim, hidden_dim)
        dims[f"block{b}.fc2.w"] = (hidden_dim, hidden_dim)
    dims["head.w"] = (hidden_dim, output_dim)

    params: dict[str, np.ndarray] = {}
    for key in param_keys(n_blocks):
        if key.endswith(".w"):
            fan_in, fan_out = dims[key]
            params[key] = (rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)).astype(dtype)
        else:
            width = dims[key[:-2] + ".w"][1]
            params[key] = np.zeros(width, dtype=dtype)
    return CalibModel(
        params=params,
        in_mean=np.zeros(input_dim, dtype=dtype),
        in_std=np.ones(input_dim, dtype=dtype),
        out_mean=np.zeros(output_dim, dtype=dtype),
        out_std=np.ones(output_dim, dtype=dtype),
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        output_dim=output_dim,
        n_blocks=n_blocks,
    )


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def forward_normalized(model: CalibModel, xn: np.ndarray, want_cache: bool = False):
    """Network pass on already-normalized inputs; optionally keep the cache."""
    p = model.params
    h = _relu(xn @ p["expand.w"] + p["expand.b"])
    cache = {"xn": xn, "h0": h, "blocks": []} if want_cache else None
    for b in range(1, model.n_blocks + 1):
        h_in = h
        a = _relu(h_in @ p[f"block{b}.fc1.w"] + p[f"block{b}.fc1.b"])
        zb = a @ p[f"block{b}.fc2.w"] + p[f"block{b}.fc2.b"]
        h = _relu(zb + h_in)
        if want_cache:
            cache["blocks"].append((h_in, a, h))
    yn = h @ p["head.w"] + p["head.b"]
    if want_cache:
        cache["h_last"] = h
        return yn, cache
    return yn


def _as_batch(model: CalibModel, features) -> tuple[np.ndarray, bool]:
    x = np.asarray(features, dtype=model.dtype)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(f"features must have {model.input_dim} columns, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    return x, single


def forward(model: CalibModel, features) -> np.ndarray:
    """Predict (x, y) in mm for one feature vector or a batch.

    A single length-4 vector returns shape (2,); an (n, 4) batch returns
    (n, 2).
    """
    x, single = _as_batch(model, features)
    xn = (x - model.in_mean) / model.in_std
    yn = forward_normalized(model, xn)
    y = yn * model.out_std + model.out_mean
    return y[0] if single else y


def normalized_loss_and_gradients(
    model: CalibModel,
    xn: np.ndarray,
    yn_target: np.ndarray,
    grads_out: dict[str, np.ndarray] | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """MSE and parameter gradients for a pre-normalized batch.

    The loss is the mean over batch entries and both output components of
    the squared normalized error.  Passing ``grads_out`` (tensors shaped
    like the parameters) reuses those buffers instead of allocating ~17 MB
    per step; the training loop does this to avoid page-fault churn.
    """
    n = xn.shape[0]
    if n == 0:
        raise ValueError("batch must not be empty")
    p = model.params
    yn, cache = forward_normalized(model, xn, want_cache=True)
    diff = yn - yn_target
    denom = diff.size
    loss = float(np.sum(diff * diff) / denom)

    grads = grads_out if grads_out is not None else {k: np.empty_like(v) for k, v in p.items()}
    dyn = diff * (2.0 / denom)
    np.matmul(cache["h_last"].T, dyn, out=grads["head.w"])
    np.sum(dyn, axis=0, out=grads["head.b"])
    dh = dyn @ p["head.w"].T
    for b in range(model.n_blocks, 0, -1):
        h_in, a, h_out = cache["blocks"][b - 1]
        ds = dh * (h_out > 0)
        np.matmul(a.T, ds, out=grads[f"block{b}.fc2.w"])
        np.sum(ds, axis=0, out=grads[f"block{b}.fc2.b"])
        da = ds @ p[f"block{b}.fc2.w"].T
        dza = da * (a > 0)
        np.matmul(h_in.T, dza, out=grads[f"block{b}.fc1.w"])
        np.sum(dza, axis=0, out=grads[f"block{b}.fc1.b"])
        dh = dza @ p[f"block{b}.fc1.w"].T
        dh += ds
    dz0 = dh * (cache["h0"] > 0)
    np.matmul(cache["xn"].T, dz0, out=grads["expand.w"])
    np.sum(dz0, axis=0, out=grads["expand.b"])
    return loss, grads


def loss_and_gradients(model: CalibModel, features, targets) -> tuple[float, dict[str, np.ndarray]]:
    """MSE and gradients for a raw-unit batch (features in ohm/mm, targets mm)."""
    x, _ = _as_batch(model, features)
    y = np.asarray(targets, dtype=model.dtype)
    if y.ndim == 1:
        y = y[None, :]
    if y.shape != (x.shape[0], model.output_dim):
        raise ValueError(f"targets must have shape ({x.shape[0]}, {model.output_dim}), got {y.shape}")
    xn = (x - model.in_mean) / model.in_std
    yn = (y - model.out_mean) / model.out_std
    return normalized_loss_and_gradients(model, xn, yn)
