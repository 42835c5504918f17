"""From per-marker scans to a full-body shape estimate and error statistics.

A scan set holds one reading per marker joint taken while the configuration
is frozen.  The calibration network predicts each marker's (x, y); a cubic
interpolant through the base and the five predictions, reparameterized by
arc length, yields positions for all 26 joints.  `joint_errors` produces the
per-joint mean / standard-error table used to compare against ground truth.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from cdmscan.calib.net import CalibModel, forward
from cdmscan.datagen import FIRST_POSITION_COL, TrialRecord, derive_joint_index
from cdmscan.kinematics import ManipulatorGeometry
from cdmscan.sensors import ScanReading


class DegenerateModelWarning(UserWarning):
    """Raised as a warning when predictions carry no variance across a scan."""


@dataclass(frozen=True)
class ScanSet:
    """One reading per marker joint of a single frozen configuration."""

    readings: tuple[ScanReading, ...]

    def __post_init__(self):
        indices = sorted(r.joint_index for r in self.readings)
        if indices != list(range(1, len(self.readings) + 1)):
            raise ValueError(
                f"scan set must contain each marker index exactly once, got {indices}"
            )

    def ordered(self) -> tuple[ScanReading, ...]:
        return tuple(sorted(self.readings, key=lambda r: r.joint_index))


def scan_set_from_record(
    record: TrialRecord, geometry: ManipulatorGeometry
) -> tuple[ScanSet, np.ndarray]:
    """Interpret a 5-row trial-schema record as one quasi-static scan.

    The marker index of each row is recovered from its insertion depths.
    Returns the scan set plus the ground-truth marker positions (5, 2) taken
    from the first row.
    """
    readings = []
    for row in record.rows:
        k = derive_joint_index(row[0], row[1], geometry)
        readings.append(
            ScanReading(r_left=row[2], r_right=row[3], e_left=row[0], e_right=row[1], joint_index=k)
        )
    truth = record.rows[0, FIRST_POSITION_COL:].reshape(-1, 2)
    return ScanSet(readings=tuple(readings)), truth


def predict_joints(model: CalibModel, scan_set: ScanSet) -> np.ndarray:
    """Predicted (x, y) of every marker joint, ordered by marker index."""
    readings = scan_set.ordered()
    features = np.stack([r.features for r in readings])
    positions = np.asarray(forward(model, features), dtype=float)
    if np.ptp(positions, axis=0).max() < 1e-9:
        warnings.warn(
            "calibration model produced identical positions for every marker; "
            "it is untrained or degenerate",
            DegenerateModelWarning,
            stacklevel=2,
        )
    return positions


def reconstruct_shape(
    predicted_positions,
    base=(0.0, 0.0),
    geometry: ManipulatorGeometry | None = None,
) -> np.ndarray:
    """Interpolate a full-body shape through the base and marker predictions.

    A natural cubic through the base and markers (chord parameterization,
    C1 by construction) is reparameterized by arc length and sampled at the
    joint stations of ``geometry``; stations past the last marker ride the
    spline's tail.  Returns (joint_count, 2) positions for joints 1..N.
    """
    if geometry is None:
        geometry = ManipulatorGeometry()
    positions = np.asarray(predicted_positions, dtype=float).reshape(-1, 2)
    if len(positions) < 2:
        raise ValueError("need at least two marker positions")
    pts = np.vstack([np.asarray(base, dtype=float).reshape(1, 2), positions])
    chords = np.hypot(*np.diff(pts, axis=0).T)
    if np.any(chords < 1e-9):
        raise ValueError("marker positions must advance monotonically along the arc")
    t = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(t, pts, axis=0, bc_type="natural", extrapolate=True)

    last_marker_joint = geometry.marker_joints[-1]
    overhang = geometry.joint_count / last_marker_joint - 1.0
    t_dense = np.linspace(0.0, t[-1] * (1.0 + 2.0 * overhang + 0.05), 4001)
    speeds = np.hypot(*spline.derivative()(t_dense).T)
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speeds[1:] + speeds[:-1]) * np.diff(t_dense))])

    arc_to_last = float(np.interp(t[-1], t_dense, arc))
    per_joint = arc_to_last / last_marker_joint
    targets = per_joint * np.arange(1, geometry.joint_count + 1)
    if targets[-1] > arc[-1]:
        raise ValueError("interpolant folds back before reaching the tip station")
    t_stations = np.interp(targets, arc, t_dense)
    return np.asarray(spline(t_stations), dtype=float)


@dataclass(frozen=True)
class ErrorReport:
    """Per-joint and pooled Euclidean error statistics in mm."""

    joint_numbers: tuple[int, ...]
    mean_mm: np.ndarray
    sem_mm: np.ndarray
    counts: np.ndarray
    total_mean_mm: float
    total_sem_mm: float
    total_count: int

    def format_table(self) -> str:
        """Aligned text table: joints across, mean and standard error rows."""
        labels = [str(j) for j in self.joint_numbers] + ["Total"]
        means = [f"{v:.3g}" for v in self.mean_mm] + [f"{self.total_mean_mm:.3g}"]
        sems = [_fmt_sem(v) for v in self.sem_mm] + [_fmt_sem(self.total_sem_mm)]
        rows = [
            ["Joint number"] + labels,
            ["Average err (mm)"] + means,
            ["Standard err (mm)"] + sems,
        ]
        widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
        lines = []
        for row in rows:
            cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(cells))
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        lines = ["joint,mean_err_mm,standard_err_mm,samples"]
        for j, mean, sem, n in zip(self.joint_numbers, self.mean_mm, self.sem_mm, self.counts):
            lines.append(f"{j},{mean:.9g},{sem:.9g},{n}")
        lines.append(f"total,{self.total_mean_mm:.9g},{self.total_sem_mm:.9g},{self.total_count}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _fmt_sem(v: float) -> str:
    return "n/a" if np.isnan(v) else f"{v:.3g}"


def _sem(values: np.ndarray) -> float:
    if len(values) < 2:
        return float("nan")
    return float(values.std(ddof=1) / np.sqrt(len(values)))


def joint_errors(predictions, ground_truth, joint_indices) -> ErrorReport:
    """Euclidean error statistics grouped by scanned marker joint.

    Per-sample error is the 2D distance between prediction and truth; means
    and standard errors of the mean are reported per joint and pooled over
    all samples.
    """
    pred = np.asarray(predictions, dtype=float).reshape(-1, 2)
    truth = np.asarray(ground_truth, dtype=float).reshape(-1, 2)
    joints = np.asarray(joint_indices, dtype=int).ravel()
    if not (len(pred) == len(truth) == len(joints)):
        raise ValueError(
            f"lengths must match, got {len(pred)} predictions, {len(truth)} truths, "
            f"{len(joints)} joint indices"
        )
    if len(pred) == 0:
        raise ValueError("at least one sample is required")
    errors = np.hypot(*(pred - truth).T)
    numbers = tuple(int(j) for j in np.unique(joints))
    means, sems, counts = [], [], []
    for j in numbers:
        e = errors[joints == j]
        means.append(float(e.mean()))
        sems.append(_sem(e))
        counts.append(len(e))
    return ErrorReport(
        joint_numbers=numbers,
        mean_mm=np.array(means),
        sem_mm=np.array(sems),
        counts=np.array(counts, dtype=int),
        total_mean_mm=float(errors.mean()),
        total_sem_mm=_sem(errors),
        total_count=len(errors),
    )
