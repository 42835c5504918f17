"""Versioned flat binary weight files.

Layout (all integers little-endian uint32, all floats little-endian 8-byte):

    bytes 0..7    magic  b"CDMCALIB"
    bytes 8..11   format version (currently 1)
    bytes 12..31  dimension table: input_dim, hidden_dim, output_dim,
                  n_blocks, dtype code (0 = float64, 1 = float32)
    payload       parameter tensors in canonical order, row-major
    trailer       in_mean, in_std, out_mean, out_std

Floats are always written as 8-byte values; the dtype code records the
in-memory precision so a loaded model reproduces the saved model's forward
pass bit for bit.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from cdmscan.calib.net import CalibModel, param_keys

MAGIC = b"CDMCALIB"
FORMAT_VERSION = 1

_DTYPE_CODES = {0: np.float64, 1: np.float32}
_CODE_FOR_DTYPE = {np.dtype(np.float64): 0, np.dtype(np.float32): 1}

_HEADER = struct.Struct("<8s6I")  # magic, version, 5-entry dimension table


class ModelLoadError(Exception):
    """Base class for weight-file problems."""


class BadMagicError(ModelLoadError):
    """File does not start with the weight-file magic bytes."""


class VersionMismatchError(ModelLoadError):
    """File uses an unsupported format version."""


class TruncatedFileError(ModelLoadError):
    """File size disagrees with the size implied by its dimension table."""

    def __init__(self, expected_bytes: int, actual_bytes: int):
        self.expected_bytes = expected_bytes
        self.actual_bytes = actual_bytes
        super().__init__(
            f"expected {expected_bytes} bytes, file has {actual_bytes} bytes"
        )


def _tensor_shapes(input_dim: int, hidden_dim: int, output_dim: int, n_blocks: int):
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for key in param_keys(n_blocks):
        if key == "expand.w":
            shape: tuple[int, ...] = (input_dim, hidden_dim)
        elif key == "head.w":
            shape = (hidden_dim, output_dim)
        elif key.endswith(".w"):
            shape = (hidden_dim, hidden_dim)
        elif key == "head.b":
            shape = (output_dim,)
        else:
            shape = (hidden_dim,)
        shapes.append((key, shape))
    shapes += [
        ("in_mean", (input_dim,)),
        ("in_std", (input_dim,)),
        ("out_mean", (output_dim,)),
        ("out_std", (output_dim,)),
    ]
    return shapes


def save_model(model: CalibModel, path) -> None:
    """Write the model; the on-disk float width is 8 bytes regardless of dtype."""
    dtype_code = _CODE_FOR_DTYPE[np.dtype(model.dtype)]
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION,
        model.input_dim, model.hidden_dim, model.output_dim, model.n_blocks, dtype_code,
    )
    chunks = [header]
    tensors = dict(model.params)
    tensors.update(
        in_mean=model.in_mean, in_std=model.in_std,
        out_mean=model.out_mean, out_std=model.out_std,
    )
    for key, shape in _tensor_shapes(model.input_dim, model.hidden_dim, model.output_dim, model.n_blocks):
        tensor = np.ascontiguousarray(tensors[key], dtype="<f8")
        if tensor.shape != shape:
            raise ValueError(f"tensor {key!r} has shape {tensor.shape}, expected {shape}")
        chunks.append(tensor.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_model(path) -> CalibModel:
    """Read and validate a weight file.

    Raises BadMagicError, VersionMismatchError or TruncatedFileError for the
    three corruption classes; anything else surfaces as ModelLoadError.
    """
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:8] != MAGIC:
        raise BadMagicError(f"not a calibration weight file: {str(path)!r}")
    if len(blob) < _HEADER.size:
        raise TruncatedFileError(expected_bytes=_HEADER.size, actual_bytes=len(blob))
    _, version, input_dim, hidden_dim, output_dim, n_blocks, dtype_code = _HEADER.unpack_from(blob)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"format version {version} unsupported (expected {FORMAT_VERSION})")
    if dtype_code not in _DTYPE_CODES:
        raise ModelLoadError(f"unknown dtype code {dtype_code}")
    if min(input_dim, hidden_dim, output_dim, n_blocks) < 1:
        raise ModelLoadError("dimension table contains non-positive entries")

    shapes = _tensor_shapes(input_dim, hidden_dim, output_dim, n_blocks)
    n_floats = sum(int(np.prod(shape)) for _, shape in shapes)
    expected = _HEADER.size + 8 * n_floats
    if len(blob) != expected:
        raise TruncatedFileError(expected_bytes=expected, actual_bytes=len(blob))

    dtype = _DTYPE_CODES[dtype_code]
    tensors: dict[str, np.ndarray] = {}
    offset = _HEADER.size
    for key, shape in shapes:
        count = int(np.prod(shape))
        flat = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        tensors[key] = flat.reshape(shape).astype(dtype)
        offset += 8 * count
    norms = {k: tensors.pop(k) for k in ("in_mean", "in_std", "out_mean", "out_std")}
    try:
        return CalibModel(
            params=tensors,
            in_mean=norms["in_mean"], in_std=norms["in_std"],
            out_mean=norms["out_mean"], out_std=norms["out_std"],
            input_dim=input_dim, hidden_dim=hidden_dim,
            output_dim=output_dim, n_blocks=n_blocks,
        )
    except ValueError as exc:
        raise ModelLoadError(str(exc)) from exc
