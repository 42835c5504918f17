"""Replay of the desk data-collection protocol and its CSV dataset format.

A trial bends the manipulator from straight to full deflection in fixed motor
increments and straightens it again, holding one marker joint under the
scanning unit.  At every increment the sensors are sampled several times
during a stabilization pause and averaged; the averaged reading is stored
next to the ground-truth positions of all five marker joints.  Rows have 14
columns::

    E_L, E_R, R_L, R_R, x1, y1, x2, y2, x3, y3, x4, y4, x5, y5

Ground truth comes from forward kinematics in place of the overhead camera;
camera-frame fixtures are mapped into the base frame with
`base_frame_transform`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from cdmscan.kinematics import (
    ActuationState,
    ManipulatorGeometry,
    forward_kinematics,
    graded_compliance,
    tendon_to_angles,
)
from cdmscan.sensors import DriftState, ScanReading, SensorSuite, scan_reading

N_COLUMNS = 14
CSV_HEADER = (
    "E_L_mm,E_R_mm,R_L_ohm,R_R_ohm,"
    "x1_mm,y1_mm,x2_mm,y2_mm,x3_mm,y3_mm,x4_mm,y4_mm,x5_mm,y5_mm"
)
# Column indices within a row.
COL_E_L, COL_E_R, COL_R_L, COL_R_R = 0, 1, 2, 3
FIRST_POSITION_COL = 4


class CsvFormatError(ValueError):
    """Malformed trial CSV; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class TrialConfig:
    """One bend-and-straighten pass over a single scanned marker joint."""

    joint_index: int
    direction: str = "positive"
    step_increment: int = 10
    max_steps: int = 1440
    frames_per_step: int = 5
    stabilization_samples: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.direction not in ("positive", "negative"):
            raise ValueError(f"direction must be 'positive' or 'negative', got {self.direction!r}")
        if self.step_increment <= 0:
            raise ValueError(f"step_increment must be positive, got {self.step_increment}")
        if self.max_steps % self.step_increment != 0:
            raise ValueError(
                f"max_steps ({self.max_steps}) must be divisible by "
                f"step_increment ({self.step_increment})"
            )
        if self.frames_per_step < 1:
            raise ValueError(f"frames_per_step must be >= 1, got {self.frames_per_step}")
        if self.stabilization_samples < 1:
            raise ValueError(f"stabilization_samples must be >= 1, got {self.stabilization_samples}")

    @property
    def row_count(self) -> int:
        """Rows per trial: one per increment on each of the two phases."""
        return 2 * self.max_steps // self.step_increment


def step_schedule(config: TrialConfig) -> list[int]:
    """Motor-step sequence: 10, 20, ..., max, max-10, ..., 0 for defaults."""
    inc = config.step_increment
    bending = list(range(inc, config.max_steps + 1, inc))
    straightening = list(range(config.max_steps - inc, -1, -inc))
    return bending + straightening


@dataclass
class TrialRecord:
    """Ordered rows of one trial plus identifying metadata."""

    rows: np.ndarray
    joint_index: int | None = None
    direction: str | None = None
    rep: int | None = None
    trial_id: str | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != N_COLUMNS:
            raise ValueError(f"rows must have shape (n, {N_COLUMNS}), got {rows.shape}")
        self.rows = rows

    def __len__(self) -> int:
        return len(self.rows)


def trial_filename(joint_index: int, rep: int, direction: str) -> str:
    suffix = "pos" if direction == "positive" else "neg"
    return f"trial_j{joint_index}_r{rep}_{suffix}.csv"


def run_trial(
    config: TrialConfig,
    geometry: ManipulatorGeometry,
    sensors: SensorSuite,
    *,
    backlash_width: float = 2.0,
    compliance_gradient: float = 0.0,
    hysteresis: bool = True,
) -> TrialRecord:
    """Execute one bend/straighten trial and collect averaged rows.

    The backlash memory is threaded across the whole schedule, so bending and
    straightening rows at the same motor step genuinely differ when
    hysteresis is on.  Sensor noise and drift advance once per stabilization
    sample; ground-truth columns never see noise.
    """
    rng = np.random.default_rng(config.seed)
    drift = DriftState()
    compliance = graded_compliance(geometry.joint_count, compliance_gradient)
    state = ActuationState(motor_steps=0, direction=config.direction)
    marker_idx = np.asarray(geometry.marker_joints) - 1

    rows = np.empty((config.row_count, N_COLUMNS))
    for i, steps in enumerate(step_schedule(config)):
        state = replace(state, motor_steps=steps)
        angles, state = tendon_to_angles(
            geometry, state, compliance,
            backlash_width=backlash_width, hysteresis=hysteresis,
        )
        shape = forward_kinematics(geometry, angles)
        truth = shape.joint_positions[marker_idx].ravel()

        samples = np.empty((config.stabilization_samples, 4))
        for s in range(config.stabilization_samples):
            reading = scan_reading(
                shape, config.joint_index, geometry,
                sensors.left, sensors.right, sensors.adc,
                rng=rng, drift=drift, channel_offset=sensors.channel_offset,
            )
            samples[s] = (reading.e_left, reading.e_right, reading.r_left, reading.r_right)
        rows[i, :FIRST_POSITION_COL] = samples.mean(axis=0)
        rows[i, FIRST_POSITION_COL:] = truth

    return TrialRecord(
        rows=rows,
        joint_index=config.joint_index,
        direction=config.direction,
    )


def quasi_static_scan(
    tip_angle_deg: float,
    geometry: ManipulatorGeometry,
    sensors: SensorSuite,
    *,
    compliance_gradient: float = 0.0,
    seed: int = 0,
    stabilization_samples: int = 5,
) -> TrialRecord:
    """Scan all marker joints of one frozen configuration.

    Produces a 5-row record in the trial CSV schema: row k is the averaged
    reading with the sensor slid to marker k, and every row repeats the same
    ground-truth positions.  Used as input fixtures for shape reconstruction.
    """
    if abs(tip_angle_deg) > geometry.tip_angle_limit + 1e-9:
        raise ValueError(
            f"tip angle {tip_angle_deg} exceeds the +/-{geometry.tip_angle_limit} degree envelope"
        )
    rng = np.random.default_rng(seed)
    drift = DriftState()
    compliance = graded_compliance(geometry.joint_count, compliance_gradient)
    shape = forward_kinematics(geometry, compliance * tip_angle_deg)
    marker_idx = np.asarray(geometry.marker_joints) - 1
    truth = shape.joint_positions[marker_idx].ravel()

    n_markers = len(geometry.marker_joints)
    rows = np.empty((n_markers, N_COLUMNS))
    for k in range(1, n_markers + 1):
        samples = np.empty((stabilization_samples, 4))
        for s in range(stabilization_samples):
            reading = scan_reading(
                shape, k, geometry, sensors.left, sensors.right, sensors.adc,
                rng=rng, drift=drift, channel_offset=sensors.channel_offset,
            )
            samples[s] = (reading.e_left, reading.e_right, reading.r_left, reading.r_right)
        rows[k - 1, :FIRST_POSITION_COL] = samples.mean(axis=0)
        rows[k - 1, FIRST_POSITION_COL:] = truth
    return TrialRecord(rows=rows)


def base_frame_transform(points, base_pair) -> np.ndarray:
    """Rigidly map world points into the base reference frame.

    The frame is defined by two reference points: their midpoint becomes the
    origin and the direction from the first to the second becomes +x.
    Pairwise distances are preserved.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    pair = np.asarray(base_pair, dtype=float).reshape(2, 2)
    direction = pair[1] - pair[0]
    norm = float(np.hypot(*direction))
    if norm < 1e-12:
        raise ValueError("base pair points must be distinct")
    ex = direction / norm
    ey = np.array([-ex[1], ex[0]])
    centered = pts - pair.mean(axis=0)
    return np.column_stack((centered @ ex, centered @ ey))


def format_value(v: float) -> str:
    """Decimal cell serialization.

    Ten significant digits keep the parse-back relative error under 1e-9
    (nine digits would only guarantee 5e-9).
    """
    return format(float(v), ".10g")


def to_csv(record: TrialRecord, path) -> None:
    """Write a trial record in the 14-column schema (header carries units)."""
    lines = [CSV_HEADER]
    for row in record.rows:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


_FILENAME_FIELDS = {
    "pos": "positive",
    "neg": "negative",
}


def _metadata_from_filename(path) -> dict:
    import re

    stem = str(path).rsplit("/", 1)[-1]
    m = re.fullmatch(r"trial_j(\d+)_r(\d+)_(pos|neg)\.csv", stem)
    if not m:
        return {}
    return {
        "joint_index": int(m.group(1)),
        "rep": int(m.group(2)),
        "direction": _FILENAME_FIELDS[m.group(3)],
    }


def from_csv(path) -> TrialRecord:
    """Parse a trial CSV, validating the schema row by row.

    Raises CsvFormatError naming the offending line for a missing or wrong
    header, wrong column counts, or non-numeric cells.
    """
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        got = lines[0].strip() if lines else "<empty file>"
        raise CsvFormatError(f"missing or wrong header; expected {CSV_HEADER!r}, got {got!r}", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != N_COLUMNS:
            raise CsvFormatError(f"expected {N_COLUMNS} columns, got {len(cells)}", line=lineno)
        try:
            row = [float(c) for c in cells]
        except ValueError:
            bad = next(c for c in cells if not _is_number(c))
            raise CsvFormatError(f"non-numeric cell {bad.strip()!r}", line=lineno) from None
        if not all(math.isfinite(v) for v in row):
            raise CsvFormatError("non-finite cell", line=lineno)
        rows.append(row)
    if not rows:
        raise CsvFormatError("no data rows", line=1)
    return TrialRecord(rows=np.array(rows), trial_id=str(path), **_metadata_from_filename(path))


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


@dataclass
class Dataset:
    """Flattened calibration samples with per-trial provenance.

    ``features`` are ordered [R_L, R_R, E_L, E_R]; ``targets`` is the scanned
    joint's ground-truth (x, y).  ``trial_codes`` indexes ``trial_ids`` so the
    training split can be done per trial instead of per row.
    """

    features: np.ndarray
    targets: np.ndarray
    joint_indices: np.ndarray
    trial_codes: np.ndarray
    trial_ids: list[str]

    def __len__(self) -> int:
        return len(self.features)

    @property
    def n_trials(self) -> int:
        return len(self.trial_ids)


def derive_joint_index(e_left: float, e_right: float, geometry: ManipulatorGeometry) -> int:
    """Recover the scanned marker number from the two insertion depths.

    The channel offsets cancel in the mean, so ``(E_L + E_R) / 2`` is the
    marker arc and dividing by the marker spacing gives the index.
    """
    k = (e_left + e_right) / 2.0 / geometry.marker_spacing
    index = int(round(k))
    if not 1 <= index <= len(geometry.marker_joints) or abs(k - index) > 0.25:
        raise ValueError(f"insertion depths do not land near a marker (k = {k:.3f})")
    return index


def build_dataset(records: list[TrialRecord], geometry: ManipulatorGeometry) -> Dataset:
    """Flatten trial records into calibration samples.

    The scanned joint of every row is derived from its insertion depths and
    checked against the record's metadata when present.  Trial ids must be
    unique so no (trial, row) pair is duplicated.
    """
    if not records:
        raise ValueError("at least one trial record is required")
    features, targets, joints, codes = [], [], [], []
    trial_ids: list[str] = []
    for code, record in enumerate(records):
        trial_id = record.trial_id or f"trial-{code}"
        if trial_id in trial_ids:
            raise ValueError(f"duplicate trial id {trial_id!r}")
        trial_ids.append(trial_id)
        for row_no, row in enumerate(record.rows):
            k = derive_joint_index(row[COL_E_L], row[COL_E_R], geometry)
            if record.joint_index is not None and k != record.joint_index:
                raise ValueError(
                    f"trial {trial_id!r} row {row_no}: insertion depths say marker {k}, "
                    f"metadata says {record.joint_index}"
                )
            features.append(row[[COL_R_L, COL_R_R, COL_E_L, COL_E_R]])
            targets.append(row[FIRST_POSITION_COL + 2 * (k - 1): FIRST_POSITION_COL + 2 * k])
            joints.append(k)
            codes.append(code)
    return Dataset(
        features=np.array(features),
        targets=np.array(targets),
        joint_indices=np.array(joints, dtype=int),
        trial_codes=np.array(codes, dtype=int),
        trial_ids=trial_ids,
    )


def load_trial_dir(data_dir, pattern: str = "trial_*.csv") -> list[TrialRecord]:
    """Read every trial CSV under a directory, sorted by filename."""
    from pathlib import Path

    paths = sorted(Path(data_dir).glob(pattern))
    if not paths:
        raise FileNotFoundError(f"no trial CSVs matching {pattern!r} under {data_dir}")
    return [from_csv(p) for p in paths]
