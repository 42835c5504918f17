"""Weight-file format: round trips and the three corruption classes."""

import struct

import numpy as np
import numpy.testing as npt
import pytest

from cdmscan.calib.model_io import (
    FORMAT_VERSION,
    MAGIC,
    BadMagicError,
    ModelLoadError,
    TruncatedFileError,
    VersionMismatchError,
    load_model,
    save_model,
)
from cdmscan.calib.net import forward, init_model


@pytest.fixture()
def model():
    m = init_model(21, hidden_dim=16)
    return m.with_norms([1.0, 2.0, 3.0, 4.0], [0.5, 1.5, 2.5, 3.5], [10.0, -5.0], [3.0, 4.0])


class TestRoundTrip:
    def test_float64_bit_exact(self, model, tmp_path):
        path = tmp_path / "weights.cdm"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.dtype == np.float64
        for key in model.params:
            npt.assert_array_equal(loaded.params[key], model.params[key])
        x = np.array([[1.5, 2.5, 0.5, 9.0], [0.0, 1.0, 2.0, 3.0]])
        npt.assert_array_equal(forward(loaded, x), forward(model, x))

    def test_float32_bit_exact(self, model, tmp_path):
        model32 = model.astype(np.float32)
        path = tmp_path / "weights.cdm"
        save_model(model32, path)
        loaded = load_model(path)
        assert loaded.dtype == np.float32
        for key in model32.params:
            npt.assert_array_equal(loaded.params[key], model32.params[key])
        x = np.array([1.5, 2.5, 0.5, 9.0])
        npt.assert_array_equal(forward(loaded, x), forward(model32, x))

    def test_norms_preserved(self, model, tmp_path):
        path = tmp_path / "weights.cdm"
        save_model(model, path)
        loaded = load_model(path)
        npt.assert_array_equal(loaded.in_mean, model.in_mean)
        npt.assert_array_equal(loaded.out_std, model.out_std)


class TestCorruption:
    def test_bad_magic(self, model, tmp_path):
        path = tmp_path / "weights.cdm"
        save_model(model, path)
        blob = bytearray(path.read_bytes())
        blob[:8] = b"NOTMAGIC"
        path.write_bytes(bytes(blob))
        with pytest.raises(BadMagicError):
            load_model(path)

    def test_tiny_file_is_bad_magic(self, tmp_path):
        path = tmp_path / "stub.cdm"
        path.write_bytes(b"abc")
        with pytest.raises(BadMagicError):
            load_model(path)

    def test_version_mismatch(self, model, tmp_path):
        path = tmp_path / "weights.cdm"
        save_model(model, path)
        blob = bytearray(path.read_bytes())
        blob[8:12] = struct.pack("<I", FORMAT_VERSION + 1)
        path.write_bytes(bytes(blob))
        with pytest.raises(VersionMismatchError, match=str(FORMAT_VERSION + 1)):
            load_model(path)

    def test_truncation_names_byte_counts(self, model, tmp_path):
        path = tmp_path / "weights.cdm"
        save_model(model, path)
        full = path.read_bytes()
        path.write_bytes(full[:-100])
        with pytest.raises(TruncatedFileError) as excinfo:
            load_model(path)
        assert excinfo.value.expected_bytes == len(full)
        assert excinfo.value.actual_bytes == len(full) - 100
        assert str(len(full)) in str(excinfo.value)

    def test_trailing_garbage_detected(self, model, tmp_path):
        path = tmp_path / "weights.cdm"
        save_model(model, path)
        path.write_bytes(path.read_bytes() + b"\x00" * 17)
        with pytest.raises(TruncatedFileError):
            load_model(path)

    def test_unknown_dtype_code(self, model, tmp_path):
        path = tmp_path / "weights.cdm"
        save_model(model, path)
        blob = bytearray(path.read_bytes())
        blob[28:32] = struct.pack("<I", 9)
        path.write_bytes(bytes(blob))
        with pytest.raises(ModelLoadError, match="dtype"):
            load_model(path)

    def test_nonfinite_payload_rejected(self, model, tmp_path):
        path = tmp_path / "weights.cdm"
        save_model(model, path)
        blob = bytearray(path.read_bytes())
        header = struct.calcsize("<8s6I")
        blob[header:header + 8] = struct.pack("<d", float("nan"))
        path.write_bytes(bytes(blob))
        with pytest.raises(ModelLoadError, match="finite"):
            load_model(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "nope.cdm")

    def test_errors_are_distinct_types(self):
        assert issubclass(BadMagicError, ModelLoadError)
        assert issubclass(VersionMismatchError, ModelLoadError)
        assert issubclass(TruncatedFileError, ModelLoadError)
        assert not issubclass(BadMagicError, VersionMismatchError)
