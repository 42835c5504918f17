"""HTTP surface: request validation, happy paths and error mapping."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

import cdmscan
from cdmscan.service import create_app

SMALL_CONFIG = """
geometry.max_motor_steps = 120
trial.stabilization_samples = 2
rfs.noise_sigma = 20
rfs.drift_step_sigma = 0.5
train.epochs = 2
"""


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    return tmp_path_factory.mktemp("service")


@pytest.fixture(scope="module")
def config_path(workspace):
    path = workspace / "cdm.cfg"
    path.write_text(SMALL_CONFIG)
    return str(path)


@pytest.fixture(scope="module")
def generated(client, workspace, config_path):
    out_dir = workspace / "data"
    response = client.post(
        "/datasets/generate",
        json={
            "out_dir": str(out_dir),
            "config_path": config_path,
            "reps": 1,
            "noise": True,
            "seed": 42,
            "scan_tips_deg": [0.0, 60.0],
        },
    )
    assert response.status_code == 200, response.text
    return response.json()


@pytest.fixture(scope="module")
def trained(client, workspace, config_path, generated):
    model_path = workspace / "model.cdm"
    response = client.post(
        "/models/train",
        json={
            "data_dir": str(workspace / "data"),
            "out_model": str(model_path),
            "config_path": config_path,
            "epochs": 25,
            "seed": 7,
        },
    )
    assert response.status_code == 200, response.text
    return response.json()


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "ok"
    assert body["version"] == cdmscan.__version__


class TestGenerate:
    def test_writes_trials_and_manifest(self, generated, workspace):
        assert generated["trials"] == 10  # 5 joints x 1 rep x 2 directions
        assert generated["rows_per_trial"] == 24
        assert len(generated["files"]) == 10
        assert len(generated["scan_files"]) == 2
        manifest = (workspace / "data" / "manifest.txt").read_text()
        assert "command = gen-data" in manifest
        assert "seed = 42" in manifest
        assert manifest.count("output = ") == 12

    def test_unknown_config_key_is_400(self, client, workspace):
        bad = workspace / "bad.cfg"
        bad.write_text("geometry.joint_cout = 26\n")
        response = client.post(
            "/datasets/generate",
            json={"out_dir": str(workspace / "x"), "config_path": str(bad)},
        )
        assert response.status_code == 400
        assert "joint_cout" in response.json()["detail"]

    def test_invalid_marker_list_names_key(self, client, workspace):
        bad = workspace / "badmarkers.cfg"
        bad.write_text("geometry.marker_joints = 5, 10, xx\n")
        response = client.post(
            "/datasets/generate",
            json={"out_dir": str(workspace / "y"), "config_path": str(bad)},
        )
        assert response.status_code == 400
        assert "geometry.marker_joints" in response.json()["detail"]

    def test_request_validation_is_422(self, client, workspace):
        response = client.post(
            "/datasets/generate", json={"out_dir": str(workspace / "z"), "reps": 0}
        )
        assert response.status_code == 422


class TestTrain:
    def test_reports_metrics_and_writes_files(self, trained, workspace):
        assert trained["epochs"] == 25
        assert trained["final_val_r2"] is not None
        assert trained["final_val_r2"] > 0.9
        assert (workspace / "model.cdm").exists()
        assert (workspace / "model.history.csv").exists()
        assert trained["n_train_samples"] + trained["n_val_samples"] == 10 * 24
        assert trained["val_trial_ids"]

    def test_missing_data_dir_is_404(self, client, workspace):
        response = client.post(
            "/models/train",
            json={"data_dir": str(workspace / "nowhere"), "out_model": str(workspace / "m.cdm")},
        )
        assert response.status_code == 404


class TestEvaluate:
    def test_full_directory(self, client, workspace, config_path, trained):
        response = client.post(
            "/models/evaluate",
            json={
                "model_path": trained["model_path"],
                "data_dir": str(workspace / "data"),
                "config_path": config_path,
                "out_csv": str(workspace / "report.csv"),
            },
        )
        assert response.status_code == 200, response.text
        body = response.json()
        assert [e["joint"] for e in body["per_joint"]] == [1, 2, 3, 4, 5]
        assert body["total_samples"] == 240
        assert "Average err (mm)" in body["table"]
        assert (workspace / "report.csv").exists()

    def test_heldout_trial_filter(self, client, workspace, config_path, trained):
        response = client.post(
            "/models/evaluate",
            json={
                "model_path": trained["model_path"],
                "data_dir": str(workspace / "data"),
                "config_path": config_path,
                "trial_ids": trained["val_trial_ids"],
            },
        )
        assert response.status_code == 200, response.text
        assert response.json()["total_samples"] == 24 * len(trained["val_trial_ids"])

    def test_missing_model_is_404(self, client, workspace):
        response = client.post(
            "/models/evaluate",
            json={"model_path": str(workspace / "ghost.cdm"), "data_dir": str(workspace / "data")},
        )
        assert response.status_code == 404

    def test_corrupt_model_is_400(self, client, workspace):
        bad = workspace / "corrupt.cdm"
        bad.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        response = client.post(
            "/models/evaluate",
            json={"model_path": str(bad), "data_dir": str(workspace / "data")},
        )
        assert response.status_code == 400


class TestPredict:
    def test_positions_finite(self, client, trained):
        response = client.post(
            "/models/predict",
            json={
                "model_path": trained["model_path"],
                "readings": [
                    {"r_left": 25_100.0, "r_right": 24_950.0, "e_left": 19.6, "e_right": 19.7},
                    {"r_left": 26_000.0, "r_right": 25_100.0, "e_left": 39.0, "e_right": 39.6},
                ],
            },
        )
        assert response.status_code == 200, response.text
        positions = np.array(response.json()["positions"])
        assert positions.shape == (2, 2)
        assert np.all(np.isfinite(positions))

    def test_empty_readings_is_400(self, client, trained):
        response = client.post(
            "/models/predict", json={"model_path": trained["model_path"], "readings": []}
        )
        assert response.status_code == 400


class TestReconstruction:
    def test_svg_and_shape_csv(self, client, workspace, config_path, trained, generated):
        scan_csv = generated["scan_files"][1]
        out_svg = workspace / "overlay.svg"
        response = client.post(
            "/reconstruction",
            json={
                "model_path": trained["model_path"],
                "scan_csv": scan_csv,
                "out_svg": str(out_svg),
                "config_path": config_path,
            },
        )
        assert response.status_code == 200, response.text
        body = response.json()
        svg = out_svg.read_text()
        assert svg.startswith("<svg ")
        assert "reconstructed shape" in svg
        shape_lines = (workspace / "overlay.shape.csv").read_text().splitlines()
        assert shape_lines[0] == "joint,x_mm,y_mm"
        assert len(shape_lines) == 27
        assert len(body["predicted_markers"]) == 5
        assert body["max_marker_err_mm"] < 10.0

    def test_deterministic_svg_bytes(self, client, workspace, config_path, trained, generated):
        scan_csv = generated["scan_files"][0]
        payload = {
            "model_path": trained["model_path"],
            "scan_csv": scan_csv,
            "out_svg": str(workspace / "a.svg"),
            "config_path": config_path,
        }
        client.post("/reconstruction", json=payload)
        payload["out_svg"] = str(workspace / "b.svg")
        client.post("/reconstruction", json=payload)
        assert (workspace / "a.svg").read_bytes() == (workspace / "b.svg").read_bytes()

    def test_malformed_scan_is_400(self, client, workspace, trained):
        bad = workspace / "bad_scan.csv"
        bad.write_text("not,a,scan\n1,2,3\n")
        response = client.post(
            "/reconstruction",
            json={
                "model_path": trained["model_path"],
                "scan_csv": str(bad),
                "out_svg": str(workspace / "bad.svg"),
            },
        )
        assert response.status_code == 400
        assert "line 1" in response.json()["detail"]


class TestBenchmark:
    def test_latency_stats(self, client, trained):
        response = client.post(
            "/benchmark",
            json={"model_path": trained["model_path"], "iterations": 300, "warmup": 30},
        )
        assert response.status_code == 200, response.text
        body = response.json()
        assert body["iterations"] == 300
        assert 0 < body["mean_ms"] < 100.0
        assert body["p99_ms"] >= body["median_ms"]
        assert body["p99_ms"] > body["mean_ms"] * 0.5
