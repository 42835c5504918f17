"""Desk-scale simulator and calibration toolkit for RFS-based shape sensing
of a planar cable-driven continuum manipulator (CDM).

The package covers the full loop: synthetic sensor/encoder data generation,
training of a residual-network calibrator, and per-joint shape reconstruction
with error reporting.  A FastAPI service wraps the core operations; the
``cdmscan`` CLI is a thin client over the same service layer.
"""

__version__ = "0.1.0"

from cdmscan.kinematics import (
    ActuationState,
    ManipulatorGeometry,
    ShapeState,
    forward_kinematics,
    tendon_to_angles,
    tip_angle,
)
from cdmscan.sensors import (
    AdcParams,
    DriftState,
    RfsParams,
    ScanReading,
    SensorSuite,
    adc_decode,
    adc_quantize,
    encoder_decode,
    encoder_reading,
    rfs_resistance,
    scan_reading,
)

__all__ = [
    "ActuationState",
    "AdcParams",
    "DriftState",
    "ManipulatorGeometry",
    "RfsParams",
    "ScanReading",
    "SensorSuite",
    "ShapeState",
    "adc_decode",
    "adc_quantize",
    "encoder_decode",
    "encoder_reading",
    "forward_kinematics",
    "rfs_resistance",
    "scan_reading",
    "tendon_to_angles",
    "tip_angle",
    "__version__",
]
