"""Service operations behind the HTTP endpoints.

These are plain functions over the request/response models so the CLI can
call them in process; the FastAPI app is a thin routing layer on top.  File
paths in requests are interpreted on the machine running the service.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from cdmscan import config as cfgmod
from cdmscan import datagen
from cdmscan.calib import TrainConfig, forward, load_model, save_model, train
from cdmscan.manifest import RunManifest
from cdmscan.reconstruct import (
    joint_errors,
    predict_joints,
    reconstruct_shape,
    scan_set_from_record,
)
from cdmscan.service import schemas
from cdmscan.svgplot import reconstruction_svg


def trial_seed(master_seed: int, joint_index: int, rep: int, direction: str) -> int:
    """Stable per-trial seed derived from the master seed and trial identity."""
    flag = 0 if direction == "positive" else 1
    seq = np.random.SeedSequence((master_seed, joint_index, rep, flag))
    return int(seq.generate_state(1)[0])


def _load_everything(config_path: str | None):
    cfg = cfgmod.load_config_file(config_path)
    return (
        cfgmod.load_geometry(cfg),
        cfgmod.load_sensor_suite(cfg),
        cfgmod.load_tendon_settings(cfg),
        cfgmod.load_trial_settings(cfg),
        cfgmod.load_train_settings(cfg),
    )


def generate_data(req: schemas.GenerateDataRequest) -> schemas.GenerateDataResponse:
    """Run the full trial protocol and write one CSV per trial plus a manifest."""
    geometry, sensors, tendon, trial_settings, _ = _load_everything(req.config_path)
    if not req.noise:
        sensors = sensors.noiseless()
    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = RunManifest(
        command="gen-data",
        seed=req.seed,
        config_path=req.config_path,
        settings={"reps": req.reps, "noise": "on" if req.noise else "off"},
    )
    files: list[str] = []
    rows_per_trial = 0
    for joint_index in range(1, len(geometry.marker_joints) + 1):
        for rep in range(1, req.reps + 1):
            for direction in ("positive", "negative"):
                trial_cfg = datagen.TrialConfig(
                    joint_index=joint_index,
                    direction=direction,
                    step_increment=trial_settings["step_increment"],
                    max_steps=geometry.max_motor_steps,
                    frames_per_step=trial_settings["frames_per_step"],
                    stabilization_samples=trial_settings["stabilization_samples"],
                    seed=trial_seed(req.seed, joint_index, rep, direction),
                )
                record = datagen.run_trial(
                    trial_cfg, geometry, sensors,
                    backlash_width=tendon["backlash_width"],
                    compliance_gradient=tendon["compliance_gradient"],
                    hysteresis=tendon["hysteresis"],
                )
                record.rep = rep
                path = out_dir / datagen.trial_filename(joint_index, rep, direction)
                datagen.to_csv(record, path)
                files.append(str(path))
                manifest.add_output(path)
                rows_per_trial = len(record)

    scan_files: list[str] = []
    for tip in req.scan_tips_deg or []:
        record = datagen.quasi_static_scan(
            tip, geometry, sensors,
            compliance_gradient=tendon["compliance_gradient"],
            seed=trial_seed(req.seed, 0, 0, "positive") + int(round(tip * 16)),
            stabilization_samples=trial_settings["stabilization_samples"],
        )
        path = out_dir / f"scan_tip_{tip:+.0f}.csv"
        datagen.to_csv(record, path)
        scan_files.append(str(path))
        manifest.add_output(path)

    manifest_path = out_dir / "manifest.txt"
    manifest.write(manifest_path)
    return schemas.GenerateDataResponse(
        files=files,
        manifest_path=str(manifest_path),
        trials=len(files),
        rows_per_trial=rows_per_trial,
        scan_files=scan_files,
    )


def train_model(req: schemas.TrainRequest) -> schemas.TrainResponse:
    """Train the calibrator on a directory of trial CSVs and save the weights."""
    cfg = cfgmod.load_config_file(req.config_path)
    geometry = cfgmod.load_geometry(cfg)
    settings = cfgmod.load_train_settings(cfg)
    train_cfg = TrainConfig(
        learning_rate=req.learning_rate if req.learning_rate is not None else settings["learning_rate"],
        beta1=settings["beta1"],
        beta2=settings["beta2"],
        epsilon=settings["epsilon"],
        batch_size=req.batch_size if req.batch_size is not None else settings["batch_size"],
        epochs=req.epochs if req.epochs is not None else settings["epochs"],
        validation_fraction=(
            req.validation_fraction if req.validation_fraction is not None
            else settings["validation_fraction"]
        ),
        seed=req.seed if req.seed is not None else settings["seed"],
    )
    records = datagen.load_trial_dir(req.data_dir)
    dataset = datagen.build_dataset(records, geometry)
    model, history = train(dataset, train_cfg)

    out_model = Path(req.out_model)
    if out_model.parent != Path(""):
        out_model.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out_model)
    history_path = out_model.with_suffix(".history.csv")
    history.to_csv(history_path)

    n_val = sum(
        np.count_nonzero(dataset.trial_codes == dataset.trial_ids.index(tid))
        for tid in history.val_trial_ids
    )
    return schemas.TrainResponse(
        model_path=str(out_model),
        history_path=str(history_path),
        epochs=train_cfg.epochs,
        n_train_samples=len(dataset) - n_val,
        n_val_samples=n_val,
        val_trial_ids=history.val_trial_ids,
        final_train_loss=history.train_loss[-1] if history.train_loss else None,
        final_val_loss=history.val_loss[-1] if history.val_loss else None,
        final_val_r2=history.val_r2[-1] if history.val_r2 else None,
        final_val_rmse_mm=history.val_rmse_mm[-1] if history.val_rmse_mm else None,
    )


def evaluate_model(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    """Produce the per-joint error table of a model over a trial directory."""
    cfg = cfgmod.load_config_file(req.config_path)
    geometry = cfgmod.load_geometry(cfg)
    model = load_model(req.model_path)
    records = datagen.load_trial_dir(req.data_dir)
    if req.trial_ids is not None:
        wanted = set(req.trial_ids)
        names = {Path(r.trial_id).name for r in records if r.trial_id}
        missing = {Path(w).name for w in wanted} - names
        if missing:
            raise FileNotFoundError(f"evaluation trials not found in data dir: {sorted(missing)}")
        records = [r for r in records if r.trial_id and Path(r.trial_id).name in {Path(w).name for w in wanted}]
    dataset = datagen.build_dataset(records, geometry)
    predictions = forward(model, dataset.features)
    report = joint_errors(predictions, dataset.targets, dataset.joint_indices)

    report_csv = None
    if req.out_csv:
        report.to_csv(req.out_csv)
        report_csv = req.out_csv
    return schemas.EvaluateResponse(
        per_joint=[
            schemas.JointErrorEntry(
                joint=j,
                mean_err_mm=float(mean),
                standard_err_mm=None if np.isnan(sem) else float(sem),
                samples=int(n),
            )
            for j, mean, sem, n in zip(report.joint_numbers, report.mean_mm, report.sem_mm, report.counts)
        ],
        total_mean_mm=report.total_mean_mm,
        total_standard_err_mm=None if np.isnan(report.total_sem_mm) else report.total_sem_mm,
        total_samples=report.total_count,
        table=report.format_table(),
        report_csv=report_csv,
    )


def reconstruct_scan(req: schemas.ReconstructRequest) -> schemas.ReconstructResponse:
    """Reconstruct a full-body shape from one scan CSV and render the overlay."""
    cfg = cfgmod.load_config_file(req.config_path)
    geometry = cfgmod.load_geometry(cfg)
    model = load_model(req.model_path)
    record = datagen.from_csv(req.scan_csv)
    scan_set, truth = scan_set_from_record(record, geometry)
    predicted = predict_joints(model, scan_set)
    shape = reconstruct_shape(predicted, geometry=geometry)

    svg_path = Path(req.out_svg)
    if svg_path.parent != Path(""):
        svg_path.parent.mkdir(parents=True, exist_ok=True)
    svg_path.write_text(reconstruction_svg(predicted, shape, truth_markers=truth))
    shape_csv = svg_path.with_suffix(".shape.csv")
    lines = ["joint,x_mm,y_mm"]
    for joint, (x, y) in enumerate(shape, start=1):
        lines.append(f"{joint},{datagen.format_value(x)},{datagen.format_value(y)}")
    shape_csv.write_text("\n".join(lines) + "\n")

    max_err = float(np.max(np.hypot(*(predicted - truth).T)))
    return schemas.ReconstructResponse(
        svg_path=str(svg_path),
        shape_csv_path=str(shape_csv),
        predicted_markers=predicted.tolist(),
        truth_markers=truth.tolist(),
        max_marker_err_mm=max_err,
    )


def benchmark_model(req: schemas.BenchRequest) -> schemas.BenchResponse:
    """Single-sample forward latency over many iterations after warmup."""
    model = load_model(req.model_path)
    features = np.array([25_000.0, 25_000.0, 19.64, 19.64])
    for _ in range(req.warmup):
        forward(model, features)
    samples = np.empty(req.iterations)
    for i in range(req.iterations):
        start = time.perf_counter()
        forward(model, features)
        samples[i] = time.perf_counter() - start
    samples *= 1e3
    return schemas.BenchResponse(
        mean_ms=float(samples.mean()),
        median_ms=float(np.median(samples)),
        p99_ms=float(np.percentile(samples, 99)),
        iterations=req.iterations,
    )


def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
    """Raw feature-vector predictions; the real-time sensing path."""
    model = load_model(req.model_path)
    if not req.readings:
        raise ValueError("at least one reading is required")
    features = np.array([[r.r_left, r.r_right, r.e_left, r.e_right] for r in req.readings])
    positions = np.asarray(forward(model, features), dtype=float)
    return schemas.PredictResponse(positions=positions.tolist())
