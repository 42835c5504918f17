"""Shared fixtures: default hardware descriptions and small helpers."""

from __future__ import annotations

import numpy as np
import pytest

from cdmscan.kinematics import ManipulatorGeometry
from cdmscan.sensors import SensorSuite


@pytest.fixture(scope="session")
def geometry() -> ManipulatorGeometry:
    return ManipulatorGeometry()


@pytest.fixture(scope="session")
def quiet_suite() -> SensorSuite:
    return SensorSuite().noiseless()


@pytest.fixture(scope="session")
def noisy_suite() -> SensorSuite:
    return SensorSuite()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def write_config(path, text: str) -> str:
    path.write_text(text)
    return str(path)
