"""Models of the sliding resistive flex sensors, ADC chain and depth encoders.

Two sensor strips ride in wall channels on opposite faces of the manipulator.
A strip inserted to arc depth d responds to the bend integrated over the
inserted body: joints bending toward the strip's sensitive face count fully,
joints bending away count with a reduced asymmetry gain.  Resistance is
affine in that integrated bend.  Readings pass through a voltage divider and
an n-bit ADC and are decoded back to ohms, so recorded resistances carry
quantization.  Insertion depths are measured by incremental encoders on the
slide racks.

Everything here returns single noisy samples; stabilization averaging is the
data-generation layer's job.  Noise uses an explicit ``numpy`` generator and
slow sensor drift is a random walk whose state the caller threads through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cdmscan.kinematics import ManipulatorGeometry, ShapeState

DEFAULT_FLAT_RESISTANCE = 25_000.0  # ohm
DEFAULT_SENSITIVITY = 400.0  # ohm per degree of integrated bend
DEFAULT_ASYMMETRY_GAIN = 0.25
DEFAULT_ACTIVE_LENGTH = 95.25  # mm
RFS_PHYSICAL_LENGTH = 112.24  # mm
DEFAULT_NOISE_SIGMA = 50.0  # ohm
DEFAULT_DRIFT_STEP_SIGMA = 2.0  # ohm per drift step
DEFAULT_CHANNEL_OFFSET = 7.5  # mm from centerline to the sensor channel
DEFAULT_COUNTS_PER_MM = 100.0

_SIDES = ("left", "right")


@dataclass(frozen=True)
class RfsParams:
    """Response parameters of one flex-sensor strip."""

    flat_resistance: float = DEFAULT_FLAT_RESISTANCE
    sensitivity: float = DEFAULT_SENSITIVITY
    asymmetry_gain: float = DEFAULT_ASYMMETRY_GAIN
    active_length: float = DEFAULT_ACTIVE_LENGTH
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    drift_step_sigma: float = DEFAULT_DRIFT_STEP_SIGMA

    def __post_init__(self):
        if self.flat_resistance <= 0:
            raise ValueError(f"flat_resistance must be positive, got {self.flat_resistance}")
        if self.sensitivity <= 0:
            raise ValueError(f"sensitivity must be positive, got {self.sensitivity}")
        if not 0.0 <= self.asymmetry_gain <= 1.0:
            raise ValueError(f"asymmetry_gain must be in [0, 1], got {self.asymmetry_gain}")
        if not 0.0 < self.active_length <= RFS_PHYSICAL_LENGTH:
            raise ValueError(
                f"active_length must be in (0, {RFS_PHYSICAL_LENGTH}] mm, got {self.active_length}"
            )
        if self.noise_sigma < 0 or self.drift_step_sigma < 0:
            raise ValueError("noise_sigma and drift_step_sigma must be nonnegative")


@dataclass(frozen=True)
class AdcParams:
    """Voltage-divider plus ADC front end shared by both strips."""

    supply_voltage: float = 5.0
    divider_resistance: float = 10_000.0
    resolution_bits: int = 10

    def __post_init__(self):
        if self.supply_voltage <= 0 or self.divider_resistance <= 0:
            raise ValueError("supply_voltage and divider_resistance must be positive")
        if not 8 <= self.resolution_bits <= 16:
            raise ValueError(f"resolution_bits must be in [8, 16], got {self.resolution_bits}")

    @property
    def max_counts(self) -> int:
        return 2**self.resolution_bits - 1


@dataclass(frozen=True)
class ScanReading:
    """One measurement tuple for a scanned marker joint.

    ``e_left``/``e_right`` are the per-channel insertion depths in mm (marker
    arc plus the signed channel foreshortening), ``r_left``/``r_right`` the
    ADC-decoded resistances in ohm, ``joint_index`` the marker number 1..5.
    """

    r_left: float
    r_right: float
    e_left: float
    e_right: float
    joint_index: int

    def __post_init__(self):
        if self.r_left <= 0 or self.r_right <= 0:
            raise ValueError("resistances must be positive")
        if self.e_left < 0 or self.e_right < 0:
            raise ValueError("insertion depths must be nonnegative")

    @property
    def features(self) -> np.ndarray:
        """Feature vector in calibration order [R_L, R_R, E_L, E_R]."""
        return np.array([self.r_left, self.r_right, self.e_left, self.e_right])


@dataclass
class DriftState:
    """Random-walk resistance offsets, one per strip; owned by the caller."""

    left: float = 0.0
    right: float = 0.0

    def advance(self, rng: np.random.Generator, left_sigma: float, right_sigma: float) -> None:
        if left_sigma > 0:
            self.left += left_sigma * rng.standard_normal()
        if right_sigma > 0:
            self.right += right_sigma * rng.standard_normal()


@dataclass(frozen=True)
class SensorSuite:
    """Bundle of everything the scanning unit needs for one reading."""

    left: RfsParams = field(default_factory=RfsParams)
    right: RfsParams = field(default_factory=RfsParams)
    adc: AdcParams = field(default_factory=AdcParams)
    channel_offset: float = DEFAULT_CHANNEL_OFFSET
    counts_per_mm: float = DEFAULT_COUNTS_PER_MM

    def __post_init__(self):
        if self.channel_offset <= 0:
            raise ValueError(f"channel_offset must be positive, got {self.channel_offset}")
        if self.counts_per_mm <= 0:
            raise ValueError(f"counts_per_mm must be positive, got {self.counts_per_mm}")

    def noiseless(self) -> "SensorSuite":
        """Copy with sensor noise and drift switched off."""
        quiet_l = RfsParams(
            self.left.flat_resistance, self.left.sensitivity, self.left.asymmetry_gain,
            self.left.active_length, 0.0, 0.0,
        )
        quiet_r = RfsParams(
            self.right.flat_resistance, self.right.sensitivity, self.right.asymmetry_gain,
            self.right.active_length, 0.0, 0.0,
        )
        return SensorSuite(quiet_l, quiet_r, self.adc, self.channel_offset, self.counts_per_mm)


def integrated_bend(
    shape: ShapeState,
    insertion_depth: float,
    side: str,
    geometry: ManipulatorGeometry,
    asymmetry_gain: float,
) -> float:
    """Face-weighted bend in degrees over the inserted body arc [0, depth].

    Joints bending toward the strip's face (positive angles for the left
    strip, negative for the right) contribute their full magnitude; opposing
    bends contribute ``asymmetry_gain`` times theirs.
    """
    if side not in _SIDES:
        raise ValueError(f"side must be one of {_SIDES}, got {side!r}")
    seg = geometry.segment_length
    # Joint i sits at arc i*seg; the relative tolerance absorbs float fuzz
    # when the depth lands exactly on a joint.
    sensed = int(np.floor(insertion_depth / seg + 1e-9))
    sensed = min(sensed, geometry.joint_count)
    if sensed == 0:
        return 0.0
    angles = shape.joint_angles[:sensed]
    toward = angles >= 0 if side == "left" else angles <= 0
    weights = np.where(toward, 1.0, asymmetry_gain)
    return float(np.sum(weights * np.abs(angles)))


def rfs_resistance(
    shape: ShapeState,
    insertion_depth: float,
    side: str,
    params: RfsParams,
    geometry: ManipulatorGeometry,
    rng: np.random.Generator | None = None,
) -> float:
    """Sample one strip resistance at the given insertion depth.

    ``R = R0 + sensitivity * B + noise`` with B the face-weighted integrated
    bend over the inserted arc.  Deterministic when ``rng`` is None or
    ``noise_sigma`` is zero.
    """
    if not 0.0 <= insertion_depth <= geometry.steerable_length + 1e-9:
        raise ValueError(
            f"insertion_depth must be in [0, {geometry.steerable_length}] mm, got {insertion_depth}"
        )
    bend = integrated_bend(shape, insertion_depth, side, geometry, params.asymmetry_gain)
    resistance = params.flat_resistance + params.sensitivity * bend
    if rng is not None and params.noise_sigma > 0:
        resistance += params.noise_sigma * rng.standard_normal()
    return resistance


def adc_quantize(resistance: float, adc: AdcParams) -> tuple[float, int]:
    """Divider voltage and ADC counts for a sensor resistance.

    The strip is the high-side resistor: ``V = Vs * Rd / (R + Rd)``, so
    counts fall as resistance rises.
    """
    if not resistance > 0:
        raise ValueError(f"resistance must be positive, got {resistance}")
    voltage = adc.supply_voltage * adc.divider_resistance / (resistance + adc.divider_resistance)
    counts = int(math.floor(voltage / adc.supply_voltage * adc.max_counts))
    return voltage, counts


def adc_decode(counts: int, adc: AdcParams) -> float:
    """Invert the divider to recover resistance from ADC counts."""
    if not 0 < counts <= adc.max_counts:
        raise ValueError(f"counts must be in [1, {adc.max_counts}], got {counts}")
    voltage = counts / adc.max_counts * adc.supply_voltage
    return adc.divider_resistance * (adc.supply_voltage - voltage) / voltage


def encoder_reading(insertion_depth: float, counts_per_mm: float = DEFAULT_COUNTS_PER_MM) -> int:
    """Encoder counts for a rack displacement."""
    if insertion_depth < 0:
        raise ValueError(f"insertion_depth must be nonnegative, got {insertion_depth}")
    if counts_per_mm <= 0:
        raise ValueError(f"counts_per_mm must be positive, got {counts_per_mm}")
    return int(round(insertion_depth * counts_per_mm))


def encoder_decode(counts: int, counts_per_mm: float = DEFAULT_COUNTS_PER_MM) -> float:
    """Displacement in mm for an encoder count value."""
    if counts_per_mm <= 0:
        raise ValueError(f"counts_per_mm must be positive, got {counts_per_mm}")
    return counts / counts_per_mm


def channel_depth_offsets(
    shape: ShapeState,
    marker_joint: int,
    channel_offset: float = DEFAULT_CHANNEL_OFFSET,
) -> tuple[float, float]:
    """Signed insertion-depth offsets (dE_L, dE_R) at a marker joint.

    The wall channels run parallel to the centerline at +/- channel_offset.
    Integrating the offset curves, a channel's arc to the marker changes by
    -offset * (cumulative bend in rad) on the side the chain bends toward,
    +offset on the far side.  A left bend therefore shortens the left channel
    (dE_L < 0) and lengthens the right one.
    """
    cumulative_rad = math.radians(float(np.sum(shape.joint_angles[:marker_joint])))
    delta = channel_offset * cumulative_rad
    return -delta, delta


def scan_reading(
    shape: ShapeState,
    joint_index: int,
    geometry: ManipulatorGeometry,
    rfs_left: RfsParams,
    rfs_right: RfsParams,
    adc: AdcParams,
    rng: np.random.Generator | None = None,
    drift: DriftState | None = None,
    channel_offset: float = DEFAULT_CHANNEL_OFFSET,
) -> ScanReading:
    """Simulate one full scanning-unit measurement of a marker joint.

    Both strips are slid so their tips reach the marker: the recorded
    insertion depths are ``k * E`` plus the per-channel foreshortening
    offsets.  Each strip resistance is sampled with noise, shifted by the
    drift walk (advanced once per call when a ``DriftState`` is supplied) and
    passed through the ADC and back to ohms.  Deterministic for a fixed rng.
    """
    n_markers = len(geometry.marker_joints)
    if not 1 <= joint_index <= n_markers:
        raise ValueError(f"joint_index must be in [1, {n_markers}], got {joint_index}")
    marker_joint = geometry.marker_joints[joint_index - 1]
    marker_arc = geometry.joint_arc(marker_joint)
    d_left, d_right = channel_depth_offsets(shape, marker_joint, channel_offset)

    r_left = rfs_resistance(shape, marker_arc, "left", rfs_left, geometry, rng)
    r_right = rfs_resistance(shape, marker_arc, "right", rfs_right, geometry, rng)
    if drift is not None:
        if rng is not None:
            drift.advance(rng, rfs_left.drift_step_sigma, rfs_right.drift_step_sigma)
        r_left += drift.left
        r_right += drift.right

    _, counts_left = adc_quantize(r_left, adc)
    _, counts_right = adc_quantize(r_right, adc)
    return ScanReading(
        r_left=adc_decode(counts_left, adc),
        r_right=adc_decode(counts_right, adc),
        e_left=marker_arc + d_left,
        e_right=marker_arc + d_right,
        joint_index=joint_index,
    )
