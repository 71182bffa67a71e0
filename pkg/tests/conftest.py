"""Shared fixtures: a small sensor setup that keeps test stacks cheap."""

import numpy as np
import pytest

from fwm_readout.geometry import BeamGeometry, SensorMap, SpinWaveMode
from fwm_readout.model import ReadoutComponents
from fwm_readout.simulate import DetectionModel, EfficiencyModel, SimulationSpec

GEOM = BeamGeometry(wavelength=795e-9, theta=2e-3)

# 0.05 mrad/pixel: beam separation 40 px, reference-mode offset ~12 px
SENSOR = SensorMap.for_geometry(
    GEOM, pixels_x=48, pixels_y=72, pitch=5e-5, read_center=(24, 54), region_radius=0.65e-3
)

K_REF = 45.8e2  # 1/m
MODE_PAIR = (SpinWaveMode(K_REF, 0.0), SpinWaveMode(-K_REF, 0.0))

# Coarser sensor (0.1 mrad/pixel) for cheap end-to-end analysis runs:
# separation 20 px, reference-mode offset 6 px.
TINY_SENSOR = SensorMap.for_geometry(
    GEOM, pixels_x=24, pixels_y=36, pitch=1e-4, read_center=(12, 27), region_radius=0.65e-3
)


def make_spec(**overrides) -> SimulationSpec:
    base = dict(
        seed=1234,
        shots=2000,
        mean_nb=8.0,
        efficiency=EfficiencyModel(eta_w=0.9, eta_r=0.85),
        components=ReadoutComponents(g_ra=0.3, s_ra=0.05, g_rs=0.35, s_rs=0.4),
        modes=MODE_PAIR,
        geometry=GEOM,
        sensor=SENSOR,
        detection=DetectionModel(kappa=0.1, mode="linear"),
        crosstalk=True,
        spot_sigma_px=0.0,
    )
    base.update(overrides)
    return SimulationSpec(**base)


def make_tiny_spec(**overrides) -> SimulationSpec:
    """Variant on the coarse sensor, for full simulate-analyze round trips."""
    base = dict(sensor=TINY_SENSOR)
    base.update(overrides)
    return make_spec(**base)


@pytest.fixture
def small_spec():
    return make_spec()


@pytest.fixture
def rng_np():
    return np.random.default_rng(2024)
