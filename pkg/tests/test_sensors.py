"""Flex-sensor response law, ADC chain, encoders and scan readings."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from cdmscan.kinematics import ManipulatorGeometry, forward_kinematics, straight_shape
from cdmscan.sensors import (
    AdcParams,
    DriftState,
    RfsParams,
    ScanReading,
    SensorSuite,
    adc_decode,
    adc_quantize,
    channel_depth_offsets,
    encoder_decode,
    encoder_reading,
    integrated_bend,
    rfs_resistance,
    scan_reading,
)


def face_weighted_sum_oracle(angles, depth, seg, side, gain):
    """Scalar re-derivation of the response law's integrated bend."""
    total = 0.0
    for i, a in enumerate(angles, start=1):
        if i * seg > depth + 1e-9:
            break
        toward = a >= 0 if side == "left" else a <= 0
        total += abs(a) * (1.0 if toward else gain)
    return total


class TestParamsValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(flat_resistance=0.0),
            dict(sensitivity=-1.0),
            dict(asymmetry_gain=1.5),
            dict(active_length=200.0),
            dict(noise_sigma=-1.0),
        ],
    )
    def test_rfs_invalid(self, kwargs):
        with pytest.raises(ValueError):
            RfsParams(**kwargs)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(supply_voltage=0.0), dict(divider_resistance=-1.0), dict(resolution_bits=4)],
    )
    def test_adc_invalid(self, kwargs):
        with pytest.raises(ValueError):
            AdcParams(**kwargs)

    def test_reading_invalid(self):
        with pytest.raises(ValueError):
            ScanReading(r_left=-1.0, r_right=1.0, e_left=0.0, e_right=0.0, joint_index=1)
        with pytest.raises(ValueError):
            ScanReading(r_left=1.0, r_right=1.0, e_left=-0.1, e_right=0.0, joint_index=1)


class TestRfsResistance:
    def test_straight_is_exactly_flat(self, geometry, quiet_suite):
        shape = straight_shape(geometry)
        for depth in (0.0, 19.64, 55.0, geometry.steerable_length):
            assert rfs_resistance(shape, depth, "left", quiet_suite.left, geometry) == 25_000.0
            assert rfs_resistance(shape, depth, "right", quiet_suite.right, geometry) == 25_000.0

    def test_uniform_90_full_insertion(self, geometry, quiet_suite):
        # 90 degrees spread uniformly, all joints inside the inserted arc:
        # left face sees the full bend, right face the asymmetry fraction.
        shape = forward_kinematics(geometry, np.full(26, 90.0 / 26))
        left = rfs_resistance(shape, geometry.steerable_length, "left", quiet_suite.left, geometry)
        right = rfs_resistance(shape, geometry.steerable_length, "right", quiet_suite.right, geometry)
        npt.assert_allclose(left, 25_000.0 + 400.0 * 90.0, rtol=1e-12)
        npt.assert_allclose(right, 25_000.0 + 400.0 * 0.25 * 90.0, rtol=1e-12)

    def test_partial_insertion_window(self, geometry, quiet_suite):
        shape = forward_kinematics(geometry, np.full(26, 90.0 / 26))
        depth = geometry.marker_spacing  # tip at marker 1 = joint 5
        got = rfs_resistance(shape, depth, "left", quiet_suite.left, geometry)
        expected_bend = 5 * 90.0 / 26
        npt.assert_allclose(got, 25_000.0 + 400.0 * expected_bend, rtol=1e-12)

    def test_mixed_signs_match_oracle(self, geometry, quiet_suite, rng):
        for _ in range(25):
            angles = rng.uniform(-4, 4, 26)
            depth = rng.uniform(0, geometry.steerable_length)
            shape = forward_kinematics(geometry, angles)
            for side, params in (("left", quiet_suite.left), ("right", quiet_suite.right)):
                got = rfs_resistance(shape, depth, side, params, geometry)
                bend = face_weighted_sum_oracle(
                    angles, depth, geometry.segment_length, side, params.asymmetry_gain
                )
                npt.assert_allclose(got, 25_000.0 + 400.0 * bend, rtol=1e-12)

    def test_side_swap_symmetry_exact(self, geometry, quiet_suite, rng):
        for _ in range(50):
            angles = rng.uniform(-4, 4, 26)
            depth = rng.uniform(0, geometry.steerable_length)
            left = rfs_resistance(
                forward_kinematics(geometry, angles), depth, "left", quiet_suite.left, geometry
            )
            right = rfs_resistance(
                forward_kinematics(geometry, -angles), depth, "right", quiet_suite.right, geometry
            )
            assert left == right

    def test_monotone_in_same_face_bend(self, geometry, quiet_suite):
        values = []
        for tip in np.linspace(0, 90, 40):
            shape = forward_kinematics(geometry, np.full(26, tip / 26))
            values.append(
                rfs_resistance(shape, geometry.steerable_length, "left", quiet_suite.left, geometry)
            )
        assert np.all(np.diff(values) >= 0)

    def test_noise_determinism(self, geometry, noisy_suite):
        shape = straight_shape(geometry)
        a = rfs_resistance(shape, 50.0, "left", noisy_suite.left, geometry, np.random.default_rng(9))
        b = rfs_resistance(shape, 50.0, "left", noisy_suite.left, geometry, np.random.default_rng(9))
        assert a == b
        c = rfs_resistance(shape, 50.0, "left", noisy_suite.left, geometry, np.random.default_rng(10))
        assert a != c

    def test_depth_out_of_range(self, geometry, quiet_suite):
        shape = straight_shape(geometry)
        with pytest.raises(ValueError, match="insertion_depth"):
            rfs_resistance(shape, -1.0, "left", quiet_suite.left, geometry)
        with pytest.raises(ValueError, match="insertion_depth"):
            rfs_resistance(shape, 150.0, "left", quiet_suite.left, geometry)

    def test_bad_side(self, geometry, quiet_suite):
        with pytest.raises(ValueError, match="side"):
            integrated_bend(straight_shape(geometry), 10.0, "top", geometry, 0.25)


class TestAdc:
    def test_divider_fixture_10k(self):
        voltage, counts = adc_quantize(10_000.0, AdcParams())
        assert voltage == 2.5
        assert counts == 511

    def test_divider_fixture_25k(self):
        voltage, counts = adc_quantize(25_000.0, AdcParams())
        npt.assert_allclose(voltage, 5.0 * 10.0 / 35.0, rtol=1e-12)
        assert counts == 292

    def test_low_resistance_limit(self):
        # floor quantization reaches full scale only in the true limit, so
        # drive R below the divider sum's float resolution
        voltage, counts = adc_quantize(1e-13, AdcParams())
        npt.assert_allclose(voltage, 5.0, rtol=1e-12)
        assert counts == 1023
        _, near = adc_quantize(1e-6, AdcParams())
        assert near in (1022, 1023)

    def test_counts_monotone_nonincreasing(self):
        adc = AdcParams()
        sweep = np.linspace(100.0, 80_000.0, 500)
        counts = [adc_quantize(r, adc)[1] for r in sweep]
        assert np.all(np.diff(counts) <= 0)
        assert all(0 <= c <= adc.max_counts for c in counts)

    def test_decode_error_bounded_by_divider_slope(self):
        adc = AdcParams()
        lsb = adc.supply_voltage / adc.max_counts
        for r in np.linspace(5_000.0, 70_000.0, 200):
            _, counts = adc_quantize(r, adc)
            decoded = adc_decode(counts, adc)
            v_decoded = counts / adc.max_counts * adc.supply_voltage
            slope = adc.supply_voltage * adc.divider_resistance / v_decoded**2
            assert abs(decoded - r) <= slope * lsb * 1.0001

    def test_quantize_validation(self):
        with pytest.raises(ValueError):
            adc_quantize(0.0, AdcParams())
        with pytest.raises(ValueError):
            adc_quantize(-5.0, AdcParams())

    def test_decode_validation(self):
        with pytest.raises(ValueError):
            adc_decode(0, AdcParams())
        with pytest.raises(ValueError):
            adc_decode(2000, AdcParams())


class TestEncoder:
    def test_zero(self):
        assert encoder_reading(0.0) == 0

    def test_marker_spacing_counts(self):
        assert encoder_reading(19.64, 100.0) == 1964

    def test_round_trip_within_half_count(self, rng):
        for depth in rng.uniform(0, 102.14, 1000):
            counts = encoder_reading(depth, 100.0)
            assert abs(encoder_decode(counts, 100.0) - depth) <= 0.005 + 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            encoder_reading(-1.0)
        with pytest.raises(ValueError):
            encoder_reading(1.0, counts_per_mm=0.0)


class TestChannelOffsets:
    def test_straight_zero(self, geometry):
        d_l, d_r = channel_depth_offsets(straight_shape(geometry), 10)
        assert d_l == 0.0 and d_r == 0.0

    def test_left_bend_signs(self, geometry):
        shape = forward_kinematics(geometry, np.full(26, 2.0))
        d_l, d_r = channel_depth_offsets(shape, 13)
        assert d_l < 0 < d_r
        assert d_l == -d_r

    def test_matches_offset_curve_quadrature(self, geometry):
        # Oracle: dense polyline length of the curve offset +/-r from a
        # constant-curvature arc, minus the centerline length.
        tip_deg = 60.0
        marker_joint = 20
        r = 7.5
        arc_len = marker_joint * geometry.segment_length
        theta = math.radians(tip_deg) * marker_joint / 26
        radius = arc_len / theta
        s = np.linspace(0.0, theta, 200_001)
        for sign in (+1.0, -1.0):
            # circle centered at (0, radius); left offset moves toward the center
            pts = np.column_stack(
                ((radius - sign * r) * np.sin(s), radius - (radius - sign * r) * np.cos(s))
            )
            offset_len = np.hypot(*np.diff(pts, axis=0).T).sum()
            oracle_delta = offset_len - arc_len
            npt.assert_allclose(oracle_delta, -sign * r * theta, rtol=1e-6)
        shape = forward_kinematics(geometry, np.full(26, tip_deg / 26))
        d_l, d_r = channel_depth_offsets(shape, marker_joint, r)
        npt.assert_allclose(d_l, -r * theta, rtol=1e-9)
        npt.assert_allclose(d_r, +r * theta, rtol=1e-9)


class TestScanReading:
    def test_straight_symmetric(self, geometry, quiet_suite):
        reading = scan_reading(
            straight_shape(geometry), 1, geometry,
            quiet_suite.left, quiet_suite.right, quiet_suite.adc,
        )
        assert reading.e_left == reading.e_right == geometry.marker_spacing
        assert reading.r_left == reading.r_right
        # the ADC decode grid quantizes the flat resistance by up to one step
        assert abs(reading.r_left - 25_000.0) < 40.0
        assert reading.joint_index == 1

    def test_left_bend_channel_signs(self, geometry, quiet_suite):
        shape = forward_kinematics(geometry, np.full(26, 60.0 / 26))
        for k in range(1, 6):
            reading = scan_reading(
                shape, k, geometry, quiet_suite.left, quiet_suite.right, quiet_suite.adc
            )
            marker_arc = geometry.joint_arc(geometry.marker_joints[k - 1])
            assert reading.e_left < marker_arc < reading.e_right
            npt.assert_allclose((reading.e_left + reading.e_right) / 2, marker_arc, rtol=1e-12)

    def test_seed_determinism(self, geometry, noisy_suite):
        shape = forward_kinematics(geometry, np.full(26, 1.0))
        a = scan_reading(
            shape, 3, geometry, noisy_suite.left, noisy_suite.right, noisy_suite.adc,
            rng=np.random.default_rng(4), drift=DriftState(),
        )
        b = scan_reading(
            shape, 3, geometry, noisy_suite.left, noisy_suite.right, noisy_suite.adc,
            rng=np.random.default_rng(4), drift=DriftState(),
        )
        assert a == b

    def test_joint_index_validation(self, geometry, quiet_suite):
        with pytest.raises(ValueError, match="joint_index"):
            scan_reading(
                straight_shape(geometry), 6, geometry,
                quiet_suite.left, quiet_suite.right, quiet_suite.adc,
            )


class TestDrift:
    def test_zero_mean_random_walk(self):
        rng = np.random.default_rng(123)
        drift = DriftState()
        sigma, n = 5.0, 10_000
        increments = []
        last = 0.0
        for _ in range(n):
            drift.advance(rng, sigma, sigma)
            increments.append(drift.left - last)
            last = drift.left
        mean_inc = np.mean(increments)
        assert abs(mean_inc) < 3.0 * sigma / math.sqrt(n)
