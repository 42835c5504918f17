"""Plain-text ``key = value`` configuration shared by all subsystems.

One file configures everything; keys carry a section prefix::

    # manipulator
    geometry.joint_count = 26
    geometry.steerable_length = 102.14
    geometry.marker_joints = 5, 10, 15, 20, 25
    geometry.max_motor_steps = 1440
    geometry.tip_angle_limit = 90
    tendon.backlash_width = 2.0
    tendon.compliance_gradient = 0.0
    tendon.hysteresis = on
    # sensing chain (applied to both strips)
    rfs.flat_resistance = 25000
    rfs.sensitivity = 400
    rfs.asymmetry_gain = 0.25
    rfs.active_length = 95.25
    rfs.noise_sigma = 50
    rfs.drift_step_sigma = 2
    rfs.channel_offset = 7.5
    adc.supply_voltage = 5.0
    adc.divider_resistance = 10000
    adc.resolution_bits = 10
    encoder.counts_per_mm = 100
    # trial protocol
    trial.step_increment = 10
    trial.stabilization_samples = 5
    trial.frames_per_step = 5
    # training
    train.learning_rate = 0.001
    train.batch_size = 64
    train.epochs = 200
    train.validation_fraction = 0.2

Unknown keys are rejected so typos fail loudly; every key is optional and
falls back to the defaults above.
"""

from __future__ import annotations

from pathlib import Path

from cdmscan.kinematics import ManipulatorGeometry
from cdmscan.sensors import AdcParams, RfsParams, SensorSuite


class ConfigError(ValueError):
    """Malformed config file or invalid value; carries the offending key."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where = f" (key {key!r})"
        elif line is not None:
            where = f" (line {line})"
        super().__init__(message + where)


_KNOWN_KEYS = {
    "geometry.joint_count",
    "geometry.steerable_length",
    "geometry.marker_joints",
    "geometry.max_motor_steps",
    "geometry.tip_angle_limit",
    "tendon.backlash_width",
    "tendon.compliance_gradient",
    "tendon.hysteresis",
    "rfs.flat_resistance",
    "rfs.sensitivity",
    "rfs.asymmetry_gain",
    "rfs.active_length",
    "rfs.noise_sigma",
    "rfs.drift_step_sigma",
    "rfs.channel_offset",
    "adc.supply_voltage",
    "adc.divider_resistance",
    "adc.resolution_bits",
    "encoder.counts_per_mm",
    "trial.step_increment",
    "trial.stabilization_samples",
    "trial.frames_per_step",
    "train.learning_rate",
    "train.beta1",
    "train.beta2",
    "train.epsilon",
    "train.batch_size",
    "train.epochs",
    "train.validation_fraction",
    "train.seed",
}


def parse_config(path: str | Path) -> dict[str, str]:
    """Read a config file into a flat ``{key: value}`` dict.

    Raises ConfigError on syntax problems, duplicate or unknown keys.
    """
    values: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}", key=key, line=lineno)
        if key in values:
            raise ConfigError(f"duplicate config key {key!r}", key=key, line=lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", key=key, line=lineno)
        values[key] = value
    return values


def _get_int(cfg: dict[str, str], key: str, default: int) -> int:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"expected an integer, got {cfg[key]!r}", key=key) from None


def _get_float(cfg: dict[str, str], key: str, default: float) -> float:
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"expected a number, got {cfg[key]!r}", key=key) from None


def _get_bool(cfg: dict[str, str], key: str, default: bool) -> bool:
    if key not in cfg:
        return default
    value = cfg[key].lower()
    if value in ("on", "true", "1", "yes"):
        return True
    if value in ("off", "false", "0", "no"):
        return False
    raise ConfigError(f"expected on/off, got {cfg[key]!r}", key=key)


def _get_int_list(cfg: dict[str, str], key: str, default: tuple[int, ...]) -> tuple[int, ...]:
    if key not in cfg:
        return default
    items = [item.strip() for item in cfg[key].split(",")]
    try:
        return tuple(int(item) for item in items if item)
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {cfg[key]!r}", key=key) from None


def _wrap_value_error(exc: ValueError, section: str, fields: tuple[str, ...]) -> ConfigError:
    msg = str(exc)
    named = next((f for f in fields if f in msg), None)
    key = f"{section}.{named}" if named else section
    return ConfigError(msg, key=key)


def load_geometry(cfg: dict[str, str]) -> ManipulatorGeometry:
    defaults = ManipulatorGeometry()
    try:
        return ManipulatorGeometry(
            joint_count=_get_int(cfg, "geometry.joint_count", defaults.joint_count),
            steerable_length=_get_float(cfg, "geometry.steerable_length", defaults.steerable_length),
            marker_joints=_get_int_list(cfg, "geometry.marker_joints", defaults.marker_joints),
            max_motor_steps=_get_int(cfg, "geometry.max_motor_steps", defaults.max_motor_steps),
            tip_angle_limit=_get_float(cfg, "geometry.tip_angle_limit", defaults.tip_angle_limit),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise _wrap_value_error(
            exc, "geometry",
            ("marker_joints", "joint_count", "steerable_length", "max_motor_steps", "tip_angle_limit"),
        ) from exc


def load_sensor_suite(cfg: dict[str, str]) -> SensorSuite:
    defaults = RfsParams()
    try:
        rfs = RfsParams(
            flat_resistance=_get_float(cfg, "rfs.flat_resistance", defaults.flat_resistance),
            sensitivity=_get_float(cfg, "rfs.sensitivity", defaults.sensitivity),
            asymmetry_gain=_get_float(cfg, "rfs.asymmetry_gain", defaults.asymmetry_gain),
            active_length=_get_float(cfg, "rfs.active_length", defaults.active_length),
            noise_sigma=_get_float(cfg, "rfs.noise_sigma", defaults.noise_sigma),
            drift_step_sigma=_get_float(cfg, "rfs.drift_step_sigma", defaults.drift_step_sigma),
        )
        adc = AdcParams(
            supply_voltage=_get_float(cfg, "adc.supply_voltage", 5.0),
            divider_resistance=_get_float(cfg, "adc.divider_resistance", 10_000.0),
            resolution_bits=_get_int(cfg, "adc.resolution_bits", 10),
        )
        return SensorSuite(
            left=rfs,
            right=rfs,
            adc=adc,
            channel_offset=_get_float(cfg, "rfs.channel_offset", SensorSuite().channel_offset),
            counts_per_mm=_get_float(cfg, "encoder.counts_per_mm", SensorSuite().counts_per_mm),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise _wrap_value_error(
            exc, "rfs",
            ("flat_resistance", "sensitivity", "asymmetry_gain", "active_length",
             "noise_sigma", "drift_step_sigma", "channel_offset", "supply_voltage",
             "divider_resistance", "resolution_bits", "counts_per_mm"),
        ) from exc


def load_tendon_settings(cfg: dict[str, str]) -> dict:
    """Backlash width, compliance gradient and hysteresis toggle."""
    return {
        "backlash_width": _get_float(cfg, "tendon.backlash_width", 2.0),
        "compliance_gradient": _get_float(cfg, "tendon.compliance_gradient", 0.0),
        "hysteresis": _get_bool(cfg, "tendon.hysteresis", True),
    }


def load_trial_settings(cfg: dict[str, str]) -> dict:
    return {
        "step_increment": _get_int(cfg, "trial.step_increment", 10),
        "stabilization_samples": _get_int(cfg, "trial.stabilization_samples", 5),
        "frames_per_step": _get_int(cfg, "trial.frames_per_step", 5),
    }


def load_train_settings(cfg: dict[str, str]) -> dict:
    return {
        "learning_rate": _get_float(cfg, "train.learning_rate", 1e-3),
        "beta1": _get_float(cfg, "train.beta1", 0.9),
        "beta2": _get_float(cfg, "train.beta2", 0.999),
        "epsilon": _get_float(cfg, "train.epsilon", 1e-8),
        "batch_size": _get_int(cfg, "train.batch_size", 64),
        "epochs": _get_int(cfg, "train.epochs", 200),
        "validation_fraction": _get_float(cfg, "train.validation_fraction", 0.2),
        "seed": _get_int(cfg, "train.seed", 0),
    }


def load_config_file(path: str | Path | None) -> dict[str, str]:
    """Parse ``path`` or return an empty dict (all defaults) when None."""
    if path is None:
        return {}
    return parse_config(path)
