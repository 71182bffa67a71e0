#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Runs the same simulation workloads through both backends and reports
shots/second plus the speedup.  Output values are also cross-checked for
bit identity, since the backends are required to agree exactly.

Usage: python benchmarks/bench_kernels.py [--shots N]
"""

import argparse
import math
import time

import numpy as np

from fwm_readout.geometry import BeamGeometry, SensorMap, SpinWaveMode
from fwm_readout.kernels import HAVE_COMPILED
from fwm_readout.model import CouplingPair, integrated_components
from fwm_readout.simulate import (
    DetectionModel,
    EfficiencyModel,
    SimulationSpec,
    simulate_stack,
)

GEOM = BeamGeometry(wavelength=795e-9, theta=2e-3)


def mode_ring(n_pairs):
    modes = []
    for i in range(n_pairs):
        angle = math.pi * i / max(n_pairs, 1)
        k = 20e2 + 3e2 * i
        kx, ky = k * math.cos(angle), k * math.sin(angle)
        modes.append(SpinWaveMode(kx, ky))
        modes.append(SpinWaveMode(-kx, -ky))
    return tuple(modes)


def workloads(shots):
    comp = integrated_components(CouplingPair(1.0, 1.4), 0.2)
    sensor_small = SensorMap.for_geometry(
        GEOM, pixels_x=24, pixels_y=36, pitch=1e-4, read_center=(12, 27), region_radius=0.65e-3
    )
    sensor_big = SensorMap.for_geometry(
        GEOM, pixels_x=128, pixels_y=128, pitch=4e-5, read_center=(64, 88), region_radius=0.62e-3
    )
    base = dict(
        seed=7,
        mean_nb=10.0,
        efficiency=EfficiencyModel(0.95, 0.85),
        components=comp,
        geometry=GEOM,
        detection=DetectionModel(kappa=0.1),
    )
    yield "2 modes, 24x36 sensor", SimulationSpec(
        shots=shots, modes=mode_ring(1), sensor=sensor_small, **base
    )
    yield "12 modes, 128x128 sensor", SimulationSpec(
        shots=shots // 4, modes=mode_ring(6), sensor=sensor_big, **base
    )
    yield "12 modes, 128x128, gaussian spots", SimulationSpec(
        shots=shots // 8, modes=mode_ring(6), sensor=sensor_big, spot_sigma_px=1.2, **base
    )


def run(spec, backend):
    t0 = time.perf_counter()
    stack = simulate_stack(spec, threads=1, backend=backend)
    return time.perf_counter() - t0, stack.frames


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--shots", type=int, default=40_000)
    args = parser.parse_args()
    if not HAVE_COMPILED:
        print("compiled kernels unavailable; nothing to compare")
        return
    print(f"{'workload':38s} {'python':>12s} {'compiled':>12s} {'speedup':>8s}")
    for name, spec in workloads(args.shots):
        t_py, frames_py = run(spec, "python")
        t_cy, frames_cy = run(spec, "compiled")
        assert np.array_equal(frames_py, frames_cy), "backends diverged"
        rate_py = spec.shots / t_py
        rate_cy = spec.shots / t_cy
        print(
            f"{name:38s} {rate_py:9.0f}/s {rate_cy:9.0f}/s {t_py / t_cy:7.2f}x"
            f"   ({spec.shots} shots, outputs identical)"
        )


if __name__ == "__main__":
    main()
