"""Adaptive moment estimation with bias correction, written on plain arrays.

The update itself is the textbook first/second-moment rule; the only twist
is performance.  A training step streams every parameter, both moment
buffers and the gradients (~70 MB for the full model), so the update is
memory-bandwidth bound.  When numba is available the element-wise work runs
as one fused pass per array; a numpy fallback computes the same numbers a
few times slower.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

# The workqueue layer coexists with the BLAS thread pool; tbb/omp stall
# badly when gemm calls interleave with the update kernel.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    from numba import njit, prange

    @njit(
        [
            "void(float32[::1], float32[::1], float32[::1], float32[::1], float64, float64, float64, float64)",
            "void(float64[::1], float64[::1], float64[::1], float64[::1], float64, float64, float64, float64)",
        ],
        parallel=True,
        fastmath=True,
        cache=True,
    )
    def _fused_update_numba(p, g, m, v, b1, b2, step_size, eps):  # pragma: no cover - thin kernel
        one_m_b1 = 1.0 - b1
        one_m_b2 = 1.0 - b2
        for i in prange(p.size):
            gi = g[i]
            mi = m[i] * b1 + one_m_b1 * gi
            vi = v[i] * b2 + one_m_b2 * gi * gi
            m[i] = mi
            v[i] = vi
            p[i] = p[i] - step_size * mi / (np.sqrt(vi) + eps)

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_NUMBA = False


def fused_adam_update(
    p: np.ndarray, g: np.ndarray, m: np.ndarray, v: np.ndarray,
    b1: float, b2: float, step_size: float, eps: float,
) -> None:
    """In-place moment tracking and parameter update on flat views.

    ``step_size`` and ``eps`` carry the folded bias correction (see
    `adam_step`).  All four arrays must share shape and dtype.
    """
    if (
        _HAVE_NUMBA
        and p.dtype in (np.float32, np.float64)
        and p.flags.c_contiguous and g.flags.c_contiguous
        and g.dtype == p.dtype
    ):
        _fused_update_numba(
            p.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1),
            b1, b2, step_size, eps,
        )
    else:
        m += (1.0 - b1) * (g - m)
        v += (1.0 - b2) * (g * g - v)
        p -= step_size * m / (np.sqrt(v) + eps)


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One in-place update of every parameter tensor.

    ``config`` supplies ``learning_rate``, ``beta1``, ``beta2`` and
    ``epsilon`` (a TrainConfig works).  The bias correction is folded into
    the step size, algebraically identical to the textbook m-hat/v-hat form:

        p -= lr * sqrt(1 - b2^t) / (1 - b1^t) * m / (sqrt(v) + eps * sqrt(1 - b2^t))

    Returns the mutated (params, state) for call-chaining.
    """
    if set(grads) != set(params):
        raise ValueError("grads must provide exactly the parameter keys")
    state.step += 1
    t = state.step
    b1, b2 = config.beta1, config.beta2
    bias2 = math.sqrt(1.0 - b2**t)
    step_size = config.learning_rate * bias2 / (1.0 - b1**t)
    eps = config.epsilon * bias2
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {key!r} has shape {g.shape}, expected {p.shape}")
        fused_adam_update(p, g, state.m[key], state.v[key], b1, b2, step_size, eps)
    return params, state
