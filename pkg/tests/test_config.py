"""Shared key=value config file parsing and typed section loaders."""

import pytest

from cdmscan.config import (
    ConfigError,
    load_config_file,
    load_geometry,
    load_sensor_suite,
    load_tendon_settings,
    load_train_settings,
    load_trial_settings,
    parse_config,
)

GOOD = """
# manipulator under test
geometry.joint_count = 26
geometry.steerable_length = 102.14
geometry.marker_joints = 5, 10, 15, 20, 25
geometry.max_motor_steps = 1440
geometry.tip_angle_limit = 90

tendon.backlash_width = 1.0
tendon.hysteresis = off

rfs.flat_resistance = 30000
rfs.noise_sigma = 0
adc.resolution_bits = 12
encoder.counts_per_mm = 200

trial.stabilization_samples = 3
train.learning_rate = 0.002
train.epochs = 17
"""


def test_full_parse(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text(GOOD)
    cfg = parse_config(path)
    geometry = load_geometry(cfg)
    assert geometry.joint_count == 26
    assert geometry.marker_joints == (5, 10, 15, 20, 25)
    suite = load_sensor_suite(cfg)
    assert suite.left.flat_resistance == 30_000.0
    assert suite.left.noise_sigma == 0.0
    assert suite.adc.resolution_bits == 12
    assert suite.counts_per_mm == 200.0
    tendon = load_tendon_settings(cfg)
    assert tendon["backlash_width"] == 1.0
    assert tendon["hysteresis"] is False
    trial = load_trial_settings(cfg)
    assert trial["stabilization_samples"] == 3
    train = load_train_settings(cfg)
    assert train["learning_rate"] == 0.002
    assert train["epochs"] == 17


def test_defaults_when_missing(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text("geometry.joint_count = 26\n")
    cfg = parse_config(path)
    assert load_geometry(cfg).steerable_length == 102.14
    assert load_train_settings(cfg)["batch_size"] == 64
    assert load_config_file(None) == {}


def test_unknown_key(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text("geometry.joint_cout = 26\n")
    with pytest.raises(ConfigError, match="joint_cout"):
        parse_config(path)


def test_duplicate_key(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text("adc.resolution_bits = 10\nadc.resolution_bits = 12\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(path)


def test_missing_equals(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text("geometry.joint_count 26\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config(path)


def test_invalid_marker_list_names_key(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text("geometry.marker_joints = 5, 10, xx\n")
    cfg = None
    with pytest.raises(ConfigError, match="geometry.marker_joints"):
        cfg = parse_config(path)
        load_geometry(cfg)


def test_semantically_invalid_markers_name_key(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text("geometry.marker_joints = 10, 5\n")
    cfg = parse_config(path)
    with pytest.raises(ConfigError, match="geometry.marker_joints"):
        load_geometry(cfg)


def test_bad_number_names_key(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text("rfs.sensitivity = four hundred\n")
    cfg = parse_config(path)
    with pytest.raises(ConfigError, match="rfs.sensitivity"):
        load_sensor_suite(cfg)


def test_bad_bool(tmp_path):
    path = tmp_path / "cdm.cfg"
    path.write_text("tendon.hysteresis = maybe\n")
    cfg = parse_config(path)
    with pytest.raises(ConfigError, match="on/off"):
        load_tendon_settings(cfg)
