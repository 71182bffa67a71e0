"""Phase-matching geometry and far-field pixel mapping.

Momentum conservation ties each spin-wave mode (transverse wave vector
``k_b``) to three scattered directions: the write-Stokes photon at
``k_W - k_b``, and the readout anti-Stokes / Stokes photons at
``k_R + k_b`` / ``k_R - k_b``.  In the paraxial far field a transverse wave
vector becomes the angular offset ``k_b * wavelength / (2 pi)``, so the
three fields land on three distinct camera pixels, mirror-symmetric through
the read axis for the readout pair.

Conventions: transverse angles are 2-vectors (ax, ay) in radians with the
read-beam axis at (0, 0) and the write axis at (0, -theta); pixel
coordinates are (px, py) = (column, row) with the y angle increasing along
rows.  Rounding to pixels is nearest-integer, half up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Transverse angles beyond this are outside the small-angle regime the
# far-field mapping assumes.
PARAXIAL_LIMIT = 0.05


@dataclass(frozen=True)
class BeamGeometry:
    """Optical wavelength and write/read beam tilt.

    ``write_axis`` and ``read_axis`` are the transverse angle vectors of the
    two beams; the read axis anchors the angular origin.
    """

    wavelength: float  # meters
    theta: float  # radians between write and read beams

    def __post_init__(self):
        if not self.wavelength > 0.0:
            raise DomainError("wavelength must be positive")
        if self.theta < 0.0:
            raise DomainError("theta must be nonnegative")

    @property
    def read_axis(self) -> tuple[float, float]:
        return (0.0, 0.0)

    @property
    def write_axis(self) -> tuple[float, float]:
        return (0.0, -self.theta)

    def mode_angle(self, k_b) -> tuple[float, float]:
        """Angular offset vector of a transverse wave vector (1/m)."""
        kx, ky = float(k_b[0]), float(k_b[1])
        scale = self.wavelength / (2.0 * math.pi)
        return (kx * scale, ky * scale)


@dataclass(frozen=True)
class SpinWaveMode:
    """Transverse spin-wave wave vector, 2 components in 1/m."""

    kx: float
    ky: float

    @property
    def k_b(self) -> tuple[float, float]:
        return (self.kx, self.ky)

    def conjugate(self) -> "SpinWaveMode":
        return SpinWaveMode(-self.kx, -self.ky)


@dataclass(frozen=True)
class ScatterAngles:
    """Far-field angle vectors of the three fields coupled to one mode."""

    ws: tuple[float, float]
    ra: tuple[float, float]
    rs: tuple[float, float]


@dataclass(frozen=True)
class SensorMap:
    """Far-field camera mapping.

    ``pitch`` is the angular size of one pixel (rad/pixel); the write and
    read beam axes map to ``write_center`` and ``read_center``, which must
    be separated by ``theta / pitch`` pixels.  ``region_radius`` is the
    angular radius of each scattering region.
    """

    pixels_x: int
    pixels_y: int
    pitch: float
    write_center: tuple[int, int]
    read_center: tuple[int, int]
    region_radius: float

    def __post_init__(self):
        if self.pixels_x <= 0 or self.pixels_y <= 0:
            raise DomainError("sensor dimensions must be positive")
        if not self.pitch > 0.0:
            raise DomainError("pixel pitch must be positive")
        if not self.region_radius > 0.0:
            raise DomainError("region radius must be positive")

    @property
    def n_pixels(self) -> int:
        return self.pixels_x * self.pixels_y

    @property
    def region_radius_px(self) -> float:
        return self.region_radius / self.pitch

    def contains(self, pixel) -> bool:
        px, py = pixel
        return 0 <= px < self.pixels_x and 0 <= py < self.pixels_y

    def flat_index(self, pixel) -> int:
        px, py = pixel
        return int(py) * self.pixels_x + int(px)

    @classmethod
    def for_geometry(
        cls,
        geom: BeamGeometry,
        pixels_x: int,
        pixels_y: int,
        pitch: float,
        read_center: tuple[int, int],
        region_radius: float,
    ) -> "SensorMap":
        """Build a map whose write center sits theta/pitch pixels above read."""
        sep = _round_half_up(geom.theta / pitch)
        write_center = (read_center[0], read_center[1] - sep)
        return cls(pixels_x, pixels_y, pitch, write_center, read_center, region_radius)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def scattered_angles(mode: SpinWaveMode, geom: BeamGeometry) -> ScatterAngles:
    """Far-field angles of the write-Stokes, anti-Stokes and Stokes fields.

    The readout pair is mirror-symmetric through the read axis; the
    anti-Stokes angle of mode ``k_b`` coincides with the Stokes angle of the
    conjugate mode ``-k_b``, which is the origin of the crosstalk handled in
    frame rendering.
    """
    ox, oy = geom.mode_angle(mode.k_b)
    if math.hypot(ox, oy) > PARAXIAL_LIMIT:
        raise DomainError(
            f"mode angle {math.hypot(ox, oy):.4g} rad exceeds the paraxial limit {PARAXIAL_LIMIT}"
        )
    wx, wy = geom.write_axis
    rx, ry = geom.read_axis
    return ScatterAngles(
        ws=(wx - ox, wy - oy),
        ra=(rx + ox, ry + oy),
        rs=(rx - ox, ry - oy),
    )


def to_pixel(angle, sensor: SensorMap) -> tuple[int, int]:
    """Map a transverse angle vector to the nearest camera pixel."""
    px = _round_half_up(sensor.read_center[0] + angle[0] / sensor.pitch)
    py = _round_half_up(sensor.read_center[1] + angle[1] / sensor.pitch)
    if not sensor.contains((px, py)):
        raise DomainError(f"angle {tuple(angle)} maps off-sensor to pixel ({px}, {py})")
    return (px, py)


def from_pixel(pixel, sensor: SensorMap) -> tuple[float, float]:
    """Inverse of :func:`to_pixel`, exact to within half a pitch."""
    return (
        (pixel[0] - sensor.read_center[0]) * sensor.pitch,
        (pixel[1] - sensor.read_center[1]) * sensor.pitch,
    )


def conjugate_pixel(pixel, sensor: SensorMap) -> tuple[int, int]:
    """Reflect a readout-region pixel through the read center."""
    cx, cy = sensor.read_center
    dx = pixel[0] - cx
    dy = pixel[1] - cy
    if math.hypot(dx, dy) > sensor.region_radius_px:
        raise DomainError(f"pixel {tuple(pixel)} lies outside the readout region")
    return (2 * cx - pixel[0], 2 * cy - pixel[1])


def conjugate_index(modes: list[SpinWaveMode]) -> np.ndarray:
    """Index of each mode's conjugate (-k_b) in the list, or -1 if absent."""
    conj = np.full(len(modes), -1, dtype=np.int64)
    for i, m in enumerate(modes):
        for j, other in enumerate(modes):
            if math.isclose(other.kx, -m.kx, rel_tol=1e-12, abs_tol=1e-12) and math.isclose(
                other.ky, -m.ky, rel_tol=1e-12, abs_tol=1e-12
            ):
                conj[i] = j
                break
    return conj


def mode_pixel_table(modes: list[SpinWaveMode], geom: BeamGeometry, sensor: SensorMap):
    """Flat WS/RA/RS pixel indices for every mode, plus conjugate indices.

    Raises if any predicted spot falls off the sensor.
    """
    n = len(modes)
    ws = np.empty(n, dtype=np.int64)
    ra = np.empty(n, dtype=np.int64)
    rs = np.empty(n, dtype=np.int64)
    for i, mode in enumerate(modes):
        angles = scattered_angles(mode, geom)
        ws[i] = sensor.flat_index(to_pixel(angles.ws, sensor))
        ra[i] = sensor.flat_index(to_pixel(angles.ra, sensor))
        rs[i] = sensor.flat_index(to_pixel(angles.rs, sensor))
    return ws, ra, rs, conjugate_index(modes)
