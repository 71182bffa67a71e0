"""Monte-Carlo shot generation and deterministic gated-count traces.

A run is a sequence of independent shots.  Each shot draws thermal write-in
photon numbers per spin-wave mode, thins them into stored excitations,
applies the integrated readout gains plus independent spontaneous noise,
and renders the scattered light onto the far-field sensor with conjugate
mode crosstalk, transmissions and camera noise.  Everything is driven by
counter-based random streams, so a run is a pure function of (seed, spec)
no matter how it is chunked or threaded.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import kernels
from .errors import DomainError
from .geometry import BeamGeometry, SensorMap, SpinWaveMode, mode_pixel_table
from .model import CouplingPair, ReadoutComponents, readout_rates

DEFAULT_CHUNK_SHOTS = 4096


@dataclass(frozen=True)
class DetectionModel:
    """Transmissions, counting efficiency and camera read-noise scale.

    ``mode`` selects the camera scheme: ``linear`` (intensified, response
    proportional to intensity, multiplicative read noise of standard
    deviation ``kappa * I``) or ``counting`` (photon counting with quantum
    efficiency ``qe``).
    """

    t_ws: float = 0.12
    t_ra: float = 0.76
    t_rs: float = 0.76
    qe: float = 0.20
    kappa: float = 0.1
    mode: str = "linear"

    def __post_init__(self):
        for name in ("t_ws", "t_ra", "t_rs", "qe"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if self.kappa < 0.0:
            raise DomainError(f"kappa must be nonnegative, got {self.kappa}")
        if self.mode not in ("linear", "counting"):
            raise DomainError(f"mode must be 'linear' or 'counting', got {self.mode!r}")


@dataclass(frozen=True)
class EfficiencyModel:
    """Write-in and readout efficiencies."""

    eta_w: float = 1.0
    eta_r: float = 1.0

    def __post_init__(self):
        for name in ("eta_w", "eta_r"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class GateConfig:
    """Photon-counting gate train: start, width, count and start-to-start spacing."""

    gate_start: float
    gate_width: float
    n_gates: int
    spacing: float

    def __post_init__(self):
        if not self.gate_width > 0.0:
            raise DomainError("gate_width must be positive")
        if self.spacing < 0.0:
            raise DomainError("spacing must be nonnegative")
        if self.n_gates < 1:
            raise DomainError("n_gates must be at least 1")
        if self.gate_start < 0.0:
            raise DomainError("gate_start must be nonnegative")

    def starts(self) -> np.ndarray:
        return self.gate_start + self.spacing * np.arange(self.n_gates)


@dataclass
class ShotRecord:
    """Per-mode photon/excitation numbers of one experimental iteration."""

    modes: list[SpinWaveMode]
    n_ws: np.ndarray
    n_b: np.ndarray
    n_ra: np.ndarray
    n_rs: np.ndarray


@dataclass(frozen=True)
class StackMeta:
    """Everything about a frame stack except the frames themselves."""

    shots: int
    mode: str
    seed: int
    detection: DetectionModel
    sensor: SensorMap
    geometry: BeamGeometry
    efficiency: EfficiencyModel
    mean_nb: float
    modes: tuple[SpinWaveMode, ...]
    crosstalk: bool
    spot_sigma_px: float
    gains_used: ReadoutComponents


@dataclass
class FrameStack:
    """A stack of rendered frames plus the metadata needed to analyze them."""

    meta: StackMeta
    frames: np.ndarray  # (shots, pixels_y, pixels_x)

    @property
    def shots(self) -> int:
        return self.meta.shots

    @property
    def detection(self) -> DetectionModel:
        return self.meta.detection

    @property
    def sensor(self) -> SensorMap:
        return self.meta.sensor

    @property
    def gains_used(self) -> ReadoutComponents:
        return self.meta.gains_used

    def iter_chunks(self, chunk_shots: int = DEFAULT_CHUNK_SHOTS):
        """Yield (start, frames[start:start+n] flattened to (n, pixels))."""
        n_pix = self.meta.sensor.n_pixels
        flat = self.frames.reshape(self.meta.shots, n_pix)
        for start in range(0, self.meta.shots, chunk_shots):
            yield start, flat[start : start + chunk_shots]


@dataclass(frozen=True)
class SimulationSpec:
    """Resolved inputs of one simulated run."""

    seed: int
    shots: int
    mean_nb: float
    efficiency: EfficiencyModel
    components: ReadoutComponents
    modes: tuple[SpinWaveMode, ...]
    geometry: BeamGeometry
    sensor: SensorMap
    detection: DetectionModel
    crosstalk: bool = True
    spot_sigma_px: float = 0.0

    def __post_init__(self):
        if self.shots < 0:
            raise DomainError("shots must be nonnegative")
        if self.mean_nb < 0.0:
            raise DomainError("mean_nb must be nonnegative")
        if not self.modes:
            raise DomainError("at least one spin-wave mode is required")


@dataclass(frozen=True)
class RenderPlan:
    """Precomputed deposit targets and spread stencils for the render kernel.

    Each deposit is one physical spot: a direct term (field selector 0/1/2
    for WS/RA/RS and a mode index) plus an optional conjugate-mode term.
    Paired modes share readout pixels (the anti-Stokes spot of ``k_b`` is
    the Stokes spot of ``-k_b``), so each shared pixel appears as exactly
    one deposit carrying both contributions.
    """

    dep_sel_a: np.ndarray
    dep_mode_a: np.ndarray
    dep_sel_b: np.ndarray
    dep_mode_b: np.ndarray
    stencil_pix: np.ndarray
    stencil_w: np.ndarray
    stencil_start: np.ndarray
    n_pixels: int
    ws_pix: np.ndarray
    ra_pix: np.ndarray
    rs_pix: np.ndarray
    conj: np.ndarray


def sample_write(mean_nb, eta_w, n_modes, seed, shot_start=0, n_shots=1, backend=None):
    """Thermal write-in photons and thinned stored excitations per mode.

    Returns float64 arrays (n_shots, n_modes); ``eta_w = 1`` reproduces the
    write-in counts exactly.
    """
    if mean_nb < 0.0:
        raise DomainError("mean_nb must be nonnegative")
    k = kernels.get_backend(backend)
    return k.sample_write_block(seed, shot_start, n_shots, n_modes, mean_nb, eta_w)


def sample_readout(n_b, components: ReadoutComponents, eta_r, seed, shot_start=0, backend=None):
    """Readout photon numbers: scaled gain plus independent geometric noise.

    The noise draws are independent of ``n_b`` by construction, which is the
    zero-correlation property the gain estimators rely on.
    """
    k = kernels.get_backend(backend)
    n_b = np.atleast_2d(np.asarray(n_b, dtype=np.float64))
    return k.sample_readout_block(
        seed,
        shot_start,
        n_b,
        eta_r,
        components.g_ra,
        components.s_ra,
        components.g_rs,
        components.s_rs,
    )


def build_render_plan(
    modes,
    geometry: BeamGeometry,
    sensor: SensorMap,
    spot_sigma_px: float = 0.0,
    crosstalk: bool = True,
) -> RenderPlan:
    """Resolve every mode's deposit pixels and optional Gaussian spread.

    Every mode deposits its write-Stokes spot.  A mode whose conjugate is in
    the list shares its readout pixels with the partner, so it contributes a
    single readout deposit at its anti-Stokes spot holding the direct
    anti-Stokes term plus (when ``crosstalk`` is on) the partner's Stokes
    term; disabling crosstalk drops the partner term, which isolates the
    direct signal for diagnostics.  An unpaired mode deposits its
    anti-Stokes and Stokes spots separately.

    Spread weights are normalized over the full stencil before clipping at
    the sensor edge, so light leaving the sensor is dropped.
    """
    modes = list(modes)
    ws_pix, ra_pix, rs_pix, conj = mode_pixel_table(modes, geometry, sensor)
    sel_a: list[int] = []
    mode_a: list[int] = []
    sel_b: list[int] = []
    mode_b: list[int] = []
    targets: list[int] = []
    for m in range(len(modes)):
        sel_a.append(0)
        mode_a.append(m)
        sel_b.append(-1)
        mode_b.append(0)
        targets.append(int(ws_pix[m]))
    for m in range(len(modes)):
        partner = int(conj[m])
        if partner < 0:
            sel_a.append(1)
            mode_a.append(m)
            sel_b.append(-1)
            mode_b.append(0)
            targets.append(int(ra_pix[m]))
            sel_a.append(2)
            mode_a.append(m)
            sel_b.append(-1)
            mode_b.append(0)
            targets.append(int(rs_pix[m]))
        else:
            sel_a.append(1)
            mode_a.append(m)
            sel_b.append(2 if crosstalk else -1)
            mode_b.append(partner)
            targets.append(int(ra_pix[m]))

    nx = sensor.pixels_x
    ny = sensor.pixels_y
    if spot_sigma_px > 0.0:
        radius = int(math.ceil(3.0 * spot_sigma_px))
        offsets = [(dx, dy) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)]
        weights = np.array(
            [math.exp(-(dx * dx + dy * dy) / (2.0 * spot_sigma_px**2)) for dx, dy in offsets]
        )
        weights /= weights.sum()
    else:
        offsets = [(0, 0)]
        weights = np.array([1.0])
    pix_list: list[int] = []
    w_list: list[float] = []
    start = [0]
    for t in targets:
        tx = t % nx
        ty = t // nx
        for (dx, dy), w in zip(offsets, weights):
            px, py = tx + dx, ty + dy
            if 0 <= px < nx and 0 <= py < ny:
                pix_list.append(py * nx + px)
                w_list.append(float(w))
        start.append(len(pix_list))
    return RenderPlan(
        dep_sel_a=np.asarray(sel_a, dtype=np.int64),
        dep_mode_a=np.asarray(mode_a, dtype=np.int64),
        dep_sel_b=np.asarray(sel_b, dtype=np.int64),
        dep_mode_b=np.asarray(mode_b, dtype=np.int64),
        stencil_pix=np.asarray(pix_list, dtype=np.int64),
        stencil_w=np.asarray(w_list, dtype=np.float64),
        stencil_start=np.asarray(start, dtype=np.int64),
        n_pixels=sensor.n_pixels,
        ws_pix=ws_pix,
        ra_pix=ra_pix,
        rs_pix=rs_pix,
        conj=np.asarray(conj, dtype=np.int64),
    )


def render_frame(
    shot: ShotRecord,
    geometry: BeamGeometry,
    sensor: SensorMap,
    detection: DetectionModel,
    seed: int,
    shot_index: int = 0,
    crosstalk: bool = True,
    spot_sigma_px: float = 0.0,
    backend=None,
) -> np.ndarray:
    """Render a single shot onto the sensor.

    ``shot_index`` addresses the camera-noise stream, so re-rendering the
    same shot of the same run reproduces the same frame.
    """
    plan = build_render_plan(shot.modes, geometry, sensor, spot_sigma_px, crosstalk)
    k = kernels.get_backend(backend)
    frame = _render_with_plan(
        k,
        seed,
        shot_index,
        np.atleast_2d(np.asarray(shot.n_ws, dtype=np.float64)),
        np.atleast_2d(np.asarray(shot.n_ra, dtype=np.float64)),
        np.atleast_2d(np.asarray(shot.n_rs, dtype=np.float64)),
        plan,
        detection,
    )
    return frame.reshape(sensor.pixels_y, sensor.pixels_x)


def _render_with_plan(k, seed, shot0, n_ws, n_ra, n_rs, plan: RenderPlan, det: DetectionModel):
    return k.render_block(
        seed,
        shot0,
        n_ws,
        n_ra,
        n_rs,
        plan.dep_sel_a,
        plan.dep_mode_a,
        plan.dep_sel_b,
        plan.dep_mode_b,
        plan.stencil_pix,
        plan.stencil_w,
        plan.stencil_start,
        plan.n_pixels,
        det.t_ws,
        det.t_ra,
        det.t_rs,
        det.kappa,
        det.qe,
        det.mode == "counting",
    )


def _stack_meta(spec: SimulationSpec) -> StackMeta:
    return StackMeta(
        shots=spec.shots,
        mode=spec.detection.mode,
        seed=spec.seed,
        detection=spec.detection,
        sensor=spec.sensor,
        geometry=spec.geometry,
        efficiency=spec.efficiency,
        mean_nb=spec.mean_nb,
        modes=tuple(spec.modes),
        crosstalk=spec.crosstalk,
        spot_sigma_px=spec.spot_sigma_px,
        gains_used=spec.components,
    )


def _simulate_chunk(spec: SimulationSpec, plan: RenderPlan, start: int, n: int, backend) -> np.ndarray:
    k = kernels.get_backend(backend)
    n_ws, n_b = k.sample_write_block(
        spec.seed, start, n, len(spec.modes), spec.mean_nb, spec.efficiency.eta_w
    )
    comp = spec.components
    n_ra, n_rs = k.sample_readout_block(
        spec.seed, start, n_b, spec.efficiency.eta_r, comp.g_ra, comp.s_ra, comp.g_rs, comp.s_rs
    )
    return _render_with_plan(k, spec.seed, start, n_ws, n_ra, n_rs, plan, spec.detection)


def iter_simulated_chunks(
    spec: SimulationSpec,
    threads: int = 1,
    chunk_shots: int = DEFAULT_CHUNK_SHOTS,
    backend=None,
):
    """Yield (start, frames) chunks of the run in shot order.

    The decomposition into chunks and the worker count never change the
    values, only the wall time.
    """
    if chunk_shots < 1:
        raise DomainError("chunk_shots must be positive")
    plan = build_render_plan(
        spec.modes, spec.geometry, spec.sensor, spec.spot_sigma_px, spec.crosstalk
    )
    starts = list(range(0, spec.shots, chunk_shots))
    sizes = [min(chunk_shots, spec.shots - s) for s in starts]
    if threads <= 1 or len(starts) <= 1:
        for start, n in zip(starts, sizes):
            yield start, _simulate_chunk(spec, plan, start, n, backend)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_simulate_chunk, spec, plan, start, n, backend)
            for start, n in zip(starts, sizes)
        ]
        for start, fut in zip(starts, futures):
            yield start, fut.result()


def simulate_stack(
    spec: SimulationSpec,
    threads: int = 1,
    chunk_shots: int = DEFAULT_CHUNK_SHOTS,
    backend=None,
) -> FrameStack:
    """Run a full simulation into memory.

    Deterministic: identical (seed, spec) give bit-identical stacks for any
    thread count or chunk size.  For large runs prefer
    :func:`fwm_readout.stackio.write_stack_file`, which streams chunks to
    disk instead of holding them all.
    """
    meta = _stack_meta(spec)
    n_pix = spec.sensor.n_pixels
    dtype = np.uint16 if spec.detection.mode == "counting" else np.float32
    frames = np.zeros((spec.shots, n_pix), dtype=dtype)
    for start, chunk in iter_simulated_chunks(spec, threads, chunk_shots, backend):
        frames[start : start + chunk.shape[0]] = chunk
    return FrameStack(meta=meta, frames=frames.reshape(spec.shots, spec.sensor.pixels_y, spec.sensor.pixels_x))


def simulate_gated_counts(
    coupling: CouplingPair,
    n_b: float,
    gates: GateConfig,
    detection: DetectionModel,
    eta_r: float = 1.0,
    gamma_b: float = 0.0,
    pulse_duration: float | None = None,
):
    """Mean detected photon counts per gate along the readout pulse.

    Integrates the total scattering rate (anti-Stokes and Stokes together,
    gain part scaled by ``eta_r`` and an optional phenomenological spin-wave
    decay ``exp(-gamma_b t)``, spontaneous part undamped) over each gate and
    applies the counting efficiency.  Returns (gate start times, counts).
    """
    if n_b < 0.0:
        raise DomainError("n_b must be nonnegative")
    if gamma_b < 0.0:
        raise DomainError("gamma_b must be nonnegative")
    starts = gates.starts()
    end = starts[-1] + gates.gate_width
    # ending exactly at the pulse edge is fine; allow for rounding in the
    # accumulated gate positions
    if pulse_duration is not None and end > pulse_duration * (1.0 + 1e-9) + 1e-12:
        raise DomainError(
            f"gate train ends at {end:.6g}, outside the pulse duration {pulse_duration:.6g}"
        )

    def rate(t: float) -> float:
        comp = readout_rates(coupling, t)
        decay = math.exp(-gamma_b * t) if gamma_b > 0.0 else 1.0
        return (comp.g_ra + comp.g_rs) * n_b * eta_r * decay + comp.s_ra + comp.s_rs

    counts = np.empty(gates.n_gates)
    for j, t0 in enumerate(starts):
        val, _ = quad(rate, t0, t0 + gates.gate_width, epsabs=0.0, epsrel=1e-11, limit=200)
        counts[j] = detection.qe * val
    return starts, counts
