"""Phase-matching and pixel-mapping tests."""

import math

import numpy as np
import pytest

from fwm_readout.errors import DomainError
from fwm_readout.geometry import (
    BeamGeometry,
    SensorMap,
    SpinWaveMode,
    conjugate_index,
    conjugate_pixel,
    from_pixel,
    mode_pixel_table,
    scattered_angles,
    to_pixel,
)

GEOM = BeamGeometry(wavelength=795e-9, theta=2e-3)
SENSOR = SensorMap.for_geometry(
    GEOM, pixels_x=128, pixels_y=128, pitch=2e-5, read_center=(64, 110), region_radius=0.62e-3
)


class TestScatteredAngles:
    def test_zero_mode_sits_on_axes(self):
        angles = scattered_angles(SpinWaveMode(0.0, 0.0), GEOM)
        assert angles.ws == GEOM.write_axis
        assert angles.ra == GEOM.read_axis
        assert angles.rs == GEOM.read_axis

    def test_reference_mode_offset_magnitude(self):
        # |k_b| = 45.8 / cm -> offset |k_b| * wavelength / (2 pi) ~ 0.5795 mrad
        mode = SpinWaveMode(45.8e2, 0.0)
        angles = scattered_angles(mode, GEOM)
        offset = math.hypot(angles.ra[0] - GEOM.read_axis[0], angles.ra[1] - GEOM.read_axis[1])
        np.testing.assert_allclose(offset, 45.8e2 * 795e-9 / (2.0 * math.pi), rtol=1e-12)
        np.testing.assert_allclose(offset, 0.5795e-3, rtol=1e-3)

    def test_conjugate_mode_swaps_readout_angles(self):
        mode = SpinWaveMode(3.1e2, -1.7e2)
        a = scattered_angles(mode, GEOM)
        b = scattered_angles(mode.conjugate(), GEOM)
        assert a.ra == b.rs
        assert a.rs == b.ra

    def test_readout_pair_mirrors_through_read_axis(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            kx, ky = rng.uniform(-5e3, 5e3, size=2)
            a = scattered_angles(SpinWaveMode(kx, ky), GEOM)
            np.testing.assert_allclose(
                [a.ra[0] + a.rs[0], a.ra[1] + a.rs[1]],
                [2.0 * GEOM.read_axis[0], 2.0 * GEOM.read_axis[1]],
                atol=1e-18,
            )

    def test_paraxial_violation_rejected(self):
        with pytest.raises(DomainError):
            scattered_angles(SpinWaveMode(1e9, 0.0), GEOM)


class TestPixelMapping:
    def test_axis_maps_to_center(self):
        assert to_pixel((0.0, 0.0), SENSOR) == SENSOR.read_center

    def test_unit_step(self):
        assert to_pixel((SENSOR.pitch, 0.0), SENSOR) == (
            SENSOR.read_center[0] + 1,
            SENSOR.read_center[1],
        )

    def test_round_trip_within_half_pitch(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            ax = rng.uniform(-60, 60) * SENSOR.pitch
            ay = rng.uniform(-100, 15) * SENSOR.pitch
            pixel = to_pixel((ax, ay), SENSOR)
            back = from_pixel(pixel, SENSOR)
            assert abs(back[0] - ax) <= SENSOR.pitch / 2 + 1e-15
            assert abs(back[1] - ay) <= SENSOR.pitch / 2 + 1e-15

    def test_off_sensor_rejected(self):
        with pytest.raises(DomainError):
            to_pixel((1.0, 0.0), SENSOR)

    def test_center_separation_is_tilt_over_pitch(self):
        sep = np.hypot(
            SENSOR.write_center[0] - SENSOR.read_center[0],
            SENSOR.write_center[1] - SENSOR.read_center[1],
        )
        assert abs(sep - GEOM.theta / SENSOR.pitch) <= 0.5

    def test_write_axis_maps_to_write_center(self):
        assert to_pixel(GEOM.write_axis, SENSOR) == SENSOR.write_center


class TestConjugatePixel:
    def test_fixed_point(self):
        assert conjugate_pixel(SENSOR.read_center, SENSOR) == SENSOR.read_center

    def test_reflection(self):
        cx, cy = SENSOR.read_center
        assert conjugate_pixel((cx + 3, cy), SENSOR) == (cx - 3, cy)

    def test_involution(self):
        cx, cy = SENSOR.read_center
        for dx, dy in [(5, 2), (-7, 11), (0, -4)]:
            p = (cx + dx, cy + dy)
            assert conjugate_pixel(conjugate_pixel(p, SENSOR), SENSOR) == p

    def test_outside_region_rejected(self):
        cx, cy = SENSOR.read_center
        with pytest.raises(DomainError):
            conjugate_pixel((cx + 200, cy), SENSOR)


class TestModePixelTable:
    def test_three_distinct_resolvable_spots(self):
        # resolvable when the angular offset exceeds one pitch
        mode = SpinWaveMode(45.8e2, 0.0)
        ws, ra, rs, conj = mode_pixel_table([mode], GEOM, SENSOR)
        assert len({int(ws[0]), int(ra[0]), int(rs[0])}) == 3
        assert conj[0] == -1

    def test_merged_spots_below_resolvability(self):
        tiny = SpinWaveMode(0.5e2, 0.0)  # offset ~ 0.0063 mrad << pitch
        ws, ra, rs, _ = mode_pixel_table([tiny], GEOM, SENSOR)
        assert ra[0] == rs[0]

    def test_conjugate_indexing(self):
        modes = [
            SpinWaveMode(45.8e2, 0.0),
            SpinWaveMode(-45.8e2, 0.0),
            SpinWaveMode(10e2, 10e2),
        ]
        conj = conjugate_index(modes)
        assert list(conj) == [1, 0, -1]

    def test_conjugate_crosstalk_lands_on_partner_pixels(self):
        modes = [SpinWaveMode(45.8e2, 0.0), SpinWaveMode(-45.8e2, 0.0)]
        _, ra, rs, conj = mode_pixel_table(modes, GEOM, SENSOR)
        assert ra[0] == rs[conj[0]]
        assert rs[0] == ra[conj[0]]
