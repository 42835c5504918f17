"""Planar kinematics of a notched cable-driven continuum manipulator.

The steerable body is a serial chain of identical rigid segments joined by
flexible notch joints.  Bending lives in a single plane: positive joint
angles bend toward +y ("left"), negative toward -y.  The tendon-actuation
map converts linear stepper-motor steps into a commanded tip angle, spreads
it over the joints with a compliance profile, and passes each joint through
a rate-independent backlash (play) operator so that bend/straighten cycles
show hysteresis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_JOINT_COUNT = 26
DEFAULT_STEERABLE_LENGTH = 102.14  # mm
DEFAULT_MARKER_JOINTS = (5, 10, 15, 20, 25)
DEFAULT_MAX_MOTOR_STEPS = 1440
DEFAULT_TIP_ANGLE_LIMIT = 90.0  # degrees
DEFAULT_BACKLASH_WIDTH = 2.0  # degrees of tip-angle play

_REL_TOL = 1e-9


@dataclass(frozen=True)
class ManipulatorGeometry:
    """Static description of the manipulator.

    ``segment_length`` is derived as ``steerable_length / joint_count`` so the
    chain length is exact by construction.  Marker joints must form a uniform
    arc ladder starting one spacing from the base; the sensor is inserted in
    whole multiples of that spacing to scan them.
    """

    joint_count: int = DEFAULT_JOINT_COUNT
    steerable_length: float = DEFAULT_STEERABLE_LENGTH
    marker_joints: tuple[int, ...] = DEFAULT_MARKER_JOINTS
    max_motor_steps: int = DEFAULT_MAX_MOTOR_STEPS
    tip_angle_limit: float = DEFAULT_TIP_ANGLE_LIMIT

    def __post_init__(self):
        if self.joint_count <= 0:
            raise ValueError(f"joint_count must be positive, got {self.joint_count}")
        if not (self.steerable_length > 0 and math.isfinite(self.steerable_length)):
            raise ValueError(f"steerable_length must be positive, got {self.steerable_length}")
        if self.max_motor_steps <= 0:
            raise ValueError(f"max_motor_steps must be positive, got {self.max_motor_steps}")
        if self.tip_angle_limit <= 0:
            raise ValueError(f"tip_angle_limit must be positive, got {self.tip_angle_limit}")
        markers = tuple(int(j) for j in self.marker_joints)
        object.__setattr__(self, "marker_joints", markers)
        if not markers:
            raise ValueError("marker_joints must not be empty")
        if any(j < 1 or j > self.joint_count for j in markers):
            raise ValueError(f"marker_joints must lie in [1, {self.joint_count}], got {markers}")
        if any(b <= a for a, b in zip(markers, markers[1:])):
            raise ValueError(f"marker_joints must be strictly increasing, got {markers}")
        # Uniform ladder: base -> marker1 gap equals every marker -> marker gap.
        gaps = np.diff((0,) + markers)
        if not np.all(np.abs(gaps - gaps[0]) == 0):
            raise ValueError(
                f"marker_joints must be equally spaced starting from the base, got {markers}"
            )

    @property
    def segment_length(self) -> float:
        """Arc length of one segment in mm."""
        return self.steerable_length / self.joint_count

    @property
    def marker_spacing(self) -> float:
        """Arc distance E between consecutive markers in mm."""
        return self.marker_joints[0] * self.segment_length

    def joint_arc(self, joint: int) -> float:
        """Arc-length position of a joint (1-indexed) measured from the base."""
        if not 1 <= joint <= self.joint_count:
            raise ValueError(f"joint must be in [1, {self.joint_count}], got {joint}")
        return joint * self.segment_length


@dataclass(frozen=True)
class ShapeState:
    """A bent configuration: per-joint angles plus derived planar positions.

    ``joint_positions[k-1]`` is joint k in the base frame; the chain leaves
    the origin along +x when straight.  ``tip_angle`` is the sum of all joint
    angles and equals the orientation of the last segment in degrees.
    """

    joint_angles: np.ndarray
    joint_positions: np.ndarray
    tip_angle: float


@dataclass(frozen=True)
class ActuationState:
    """Motor command plus the per-joint backlash memory it has accumulated.

    ``hysteresis_memory`` holds the previous play-operator output (degrees per
    joint); threading it through successive `tendon_to_angles` calls is what
    makes bend/straighten trajectories path dependent.
    """

    motor_steps: int
    direction: str = "positive"
    hysteresis_memory: np.ndarray | None = None

    def __post_init__(self):
        if self.direction not in ("positive", "negative"):
            raise ValueError(f"direction must be 'positive' or 'negative', got {self.direction!r}")

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == "positive" else -1.0


def uniform_compliance(joint_count: int) -> np.ndarray:
    """Equal bend-sharing weights (constant-curvature C shapes)."""
    return np.full(joint_count, 1.0 / joint_count)


def graded_compliance(joint_count: int, gradient: float = 0.0) -> np.ndarray:
    """Linearly graded weights, more compliant toward the tip for gradient > 0.

    Weight of joint i is proportional to ``1 + gradient * i / (n - 1)``; the
    result is normalized to sum to 1.  ``gradient >= -1`` keeps weights
    nonnegative.  Nonzero gradients yield non-constant-curvature shapes.
    """
    if gradient < -1.0:
        raise ValueError(f"gradient must be >= -1, got {gradient}")
    if joint_count == 1:
        return np.ones(1)
    raw = 1.0 + gradient * np.arange(joint_count) / (joint_count - 1)
    return raw / raw.sum()


def _validate_compliance(geometry: ManipulatorGeometry, weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (geometry.joint_count,):
        raise ValueError(
            f"compliance profile must have {geometry.joint_count} weights, got shape {weights.shape}"
        )
    if np.any(weights < 0):
        raise ValueError("compliance weights must be nonnegative")
    total = float(weights.sum())
    if abs(total - 1.0) > _REL_TOL:
        raise ValueError(f"compliance weights must sum to 1 within {_REL_TOL}, got {total!r}")
    return weights


def forward_kinematics(geometry: ManipulatorGeometry, joint_angles) -> ShapeState:
    """Planar forward kinematics of the notched chain.

    Joint k sits at ``sum_{i<=k} segment_length * (cos phi_i, sin phi_i)``
    where ``phi_i`` is the cumulative bend through joint i; the chain starts
    along +x from the origin.

    Args:
        geometry: manipulator description.
        joint_angles: per-joint bend in degrees, length ``joint_count``.

    Returns:
        ShapeState with positions in mm.
    """
    angles = np.asarray(joint_angles, dtype=float)
    if angles.shape != (geometry.joint_count,):
        raise ValueError(
            f"expected {geometry.joint_count} joint angles, got shape {angles.shape}"
        )
    if not np.all(np.isfinite(angles)):
        raise ValueError("joint angles must be finite")
    phi = np.cumsum(np.radians(angles))
    seg = geometry.segment_length
    positions = np.column_stack((np.cumsum(seg * np.cos(phi)), np.cumsum(seg * np.sin(phi))))
    return ShapeState(joint_angles=angles, joint_positions=positions, tip_angle=float(angles.sum()))


def tip_angle(shape: ShapeState) -> float:
    """Tip bending angle in degrees (sum of joint angles)."""
    return float(np.sum(shape.joint_angles))


def straight_shape(geometry: ManipulatorGeometry) -> ShapeState:
    return forward_kinematics(geometry, np.zeros(geometry.joint_count))


def tendon_to_angles(
    geometry: ManipulatorGeometry,
    state: ActuationState,
    compliance: np.ndarray | None = None,
    *,
    backlash_width: float = DEFAULT_BACKLASH_WIDTH,
    hysteresis: bool = True,
) -> tuple[np.ndarray, ActuationState]:
    """Map a motor command to joint angles, threading backlash state.

    The commanded tip angle is linear in motor steps
    (``max_motor_steps`` steps <-> ``tip_angle_limit`` degrees) and is split
    over the joints by the compliance profile.  Each joint then passes
    through a play operator of radius ``backlash_width * weight`` so the
    whole-chain tip shows ``backlash_width`` degrees of play.

    Args:
        geometry: manipulator description.
        state: motor steps, pull direction and prior hysteresis memory.
        compliance: per-joint weights summing to 1; uniform when None.
        backlash_width: tip-level play in degrees.
        hysteresis: disable to get the memoryless linear map.

    Returns:
        ``(joint_angles_deg, new_state)`` where ``new_state`` carries the
        updated hysteresis memory.
    """
    if not 0 <= state.motor_steps <= geometry.max_motor_steps:
        raise ValueError(
            f"motor_steps must be in [0, {geometry.max_motor_steps}], got {state.motor_steps}"
        )
    if backlash_width < 0:
        raise ValueError(f"backlash_width must be nonnegative, got {backlash_width}")
    if compliance is None:
        compliance = uniform_compliance(geometry.joint_count)
    weights = _validate_compliance(geometry, compliance)

    commanded_tip = state.sign * geometry.tip_angle_limit * state.motor_steps / geometry.max_motor_steps
    u = weights * commanded_tip
    if hysteresis:
        memory = state.hysteresis_memory
        if memory is None:
            memory = np.zeros(geometry.joint_count)
        else:
            memory = np.asarray(memory, dtype=float)
            if memory.shape != (geometry.joint_count,):
                raise ValueError(
                    f"hysteresis_memory must have {geometry.joint_count} entries, "
                    f"got shape {memory.shape}"
                )
        radius = backlash_width * weights
        angles = np.clip(memory, u - radius, u + radius)
    else:
        angles = u
    new_state = replace(state, hysteresis_memory=angles)
    return angles, new_state
