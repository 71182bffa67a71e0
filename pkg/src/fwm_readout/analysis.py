"""Inversion of the detection model: correlations, gains, exponential fits.

The write-in and readout fields scattered from the same spin-wave mode share
its shot-to-shot excitation-number fluctuations, so the pixel-pair
correlation map against a write-region reference pixel shows the three-spot
pattern that identifies the anti-Stokes and Stokes peaks.  The covariance
between the write pixel and each readout peak, normalized by the read-noise
corrected write variance and the transmission ratio, is an estimator of the
effective readout gain; its uncertainty comes from a shot bootstrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateDataError,
    DomainError,
    MergedSpotsError,
    WeakSignalError,
)
from .geometry import SensorMap
from .model import DetuningSpec, couplings_from_detuning, integrated_components
from .simulate import (
    DEFAULT_CHUNK_SHOTS,
    DetectionModel,
    GateConfig,
    SimulationSpec,
    build_render_plan,
    simulate_gated_counts,
    simulate_stack,
)

PEAK_SEARCH_WINDOW = 5  # pixels, centered on the geometry-predicted spot

SWEEP_ANALYSIS_COLUMNS = ("delta_r", "c_ws_ra", "c_ws_rs", "g_eff_ra", "g_eff_rs", "fit_rate")


@dataclass(frozen=True)
class RegionSpec:
    """Circular write and read analysis regions in pixel coordinates."""

    write_center: tuple[int, int]
    write_radius_px: float
    read_center: tuple[int, int]
    read_radius_px: float

    def __post_init__(self):
        if self.write_radius_px <= 0.0 or self.read_radius_px <= 0.0:
            raise DomainError("region radii must be positive")
        dx = self.write_center[0] - self.read_center[0]
        dy = self.write_center[1] - self.read_center[1]
        if math.hypot(dx, dy) <= self.write_radius_px + self.read_radius_px:
            raise DomainError("write and read regions must be disjoint")

    @classmethod
    def from_sensor(cls, sensor: SensorMap) -> "RegionSpec":
        r = sensor.region_radius_px
        spec = cls(
            write_center=sensor.write_center,
            write_radius_px=r,
            read_center=sensor.read_center,
            read_radius_px=r,
        )
        for cx, cy in (sensor.write_center, sensor.read_center):
            if not (
                0 <= cx - r and cx + r < sensor.pixels_x and 0 <= cy - r and cy + r < sensor.pixels_y
            ):
                raise DomainError("analysis region extends off the sensor")
        return spec

    def _mask(self, shape_yx, center, radius):
        ny, nx = shape_yx
        ys, xs = np.mgrid[0:ny, 0:nx]
        return (xs - center[0]) ** 2 + (ys - center[1]) ** 2 <= radius**2

    def region_mask(self, sensor: SensorMap) -> np.ndarray:
        """Boolean (ny, nx) mask of both analysis regions."""
        shape = (sensor.pixels_y, sensor.pixels_x)
        return self._mask(shape, self.write_center, self.write_radius_px) | self._mask(
            shape, self.read_center, self.read_radius_px
        )

    def read_mask(self, sensor: SensorMap) -> np.ndarray:
        return self._mask((sensor.pixels_y, sensor.pixels_x), self.read_center, self.read_radius_px)


@dataclass
class CorrelationMap:
    """Per-pixel correlation against a reference pixel.

    ``values`` is NaN wherever the correlation is undefined (pixel outside
    the analysis regions or with zero variance); ``defined`` marks usable
    pixels.
    """

    ref_pixel: tuple[int, int]
    values: np.ndarray
    defined: np.ndarray

    def at(self, pixel) -> float:
        return float(self.values[pixel[1], pixel[0]])


@dataclass(frozen=True)
class PeakPixels:
    """The write-in pixel and the located readout peak pixels."""

    ws: tuple[int, int]
    ra: tuple[int, int]
    rs: tuple[int, int]


@dataclass(frozen=True)
class PeakCorrelations:
    """Peak correlation values and where they were found."""

    c_ws_ra: float
    c_ws_rs: float
    peaks: PeakPixels


@dataclass(frozen=True)
class GainEstimate:
    """Effective readout gains with bootstrap standard errors."""

    g_eff_ra: float
    g_eff_rs: float
    stderr_ra: float
    stderr_rs: float
    peaks: PeakPixels


@dataclass(frozen=True)
class ExpFit:
    """Exponential fit a * exp(rate * t) over a time window."""

    rate: float
    amplitude: float
    window: tuple[float, float]
    rms_residual: float


def _flat_region_columns(sensor: SensorMap, regions: RegionSpec) -> np.ndarray:
    mask = regions.region_mask(sensor)
    return np.flatnonzero(mask.ravel())


def pixel_series(stack, pixels, chunk_shots: int = DEFAULT_CHUNK_SHOTS) -> np.ndarray:
    """Per-shot intensity series at the given (px, py) pixels, float64."""
    sensor = stack.sensor
    cols = np.array([sensor.flat_index(p) for p in pixels], dtype=np.int64)
    out = np.empty((stack.shots, cols.size), dtype=np.float64)
    for start, chunk in stack.iter_chunks(chunk_shots):
        out[start : start + chunk.shape[0]] = chunk[:, cols]
    return out


def correlation_map(
    stack,
    ref_pixel,
    regions: RegionSpec,
    chunk_shots: int = DEFAULT_CHUNK_SHOTS,
) -> CorrelationMap:
    """Correlation coefficient of every region pixel against ``ref_pixel``.

    Computed in one streaming pass over shots with first-frame-shifted
    accumulators.  Pixels with zero variance are flagged undefined rather
    than zeroed; the reference pixel itself maps to exactly 1.
    """
    sensor = stack.sensor
    if stack.shots < 2:
        raise DegenerateDataError("need at least 2 shots to correlate")
    cols = _flat_region_columns(sensor, regions)
    ref_flat = sensor.flat_index(ref_pixel)
    ref_local = np.searchsorted(cols, ref_flat)
    if ref_local >= cols.size or cols[ref_local] != ref_flat:
        raise DomainError(f"reference pixel {tuple(ref_pixel)} lies outside the analysis regions")

    n = stack.shots
    shift = None
    s1 = np.zeros(cols.size)
    s2 = np.zeros(cols.size)
    sxy = np.zeros(cols.size)
    for _, chunk in stack.iter_chunks(chunk_shots):
        block = np.asarray(chunk[:, cols], dtype=np.float64)
        if shift is None:
            shift = block[0].copy()
        block -= shift
        s1 += block.sum(axis=0)
        s2 += np.einsum("ij,ij->j", block, block)
        sxy += block.T @ block[:, ref_local]
    var = (s2 - s1 * s1 / n) / (n - 1)
    cov = (sxy - s1 * s1[ref_local] / n) / (n - 1)
    var_ref = var[ref_local]
    if var_ref <= 0.0:
        raise DegenerateDataError(f"reference pixel {tuple(ref_pixel)} has zero variance")

    defined_cols = var > 0.0
    corr = np.full(cols.size, np.nan)
    denom = np.sqrt(var[defined_cols] * var_ref)
    corr[defined_cols] = np.clip(cov[defined_cols] / denom, -1.0, 1.0)
    corr[ref_local] = 1.0

    values = np.full((sensor.pixels_y, sensor.pixels_x), np.nan)
    values.ravel()[cols] = corr
    defined = np.zeros((sensor.pixels_y, sensor.pixels_x), dtype=bool)
    defined.ravel()[cols] = defined_cols
    defined.ravel()[ref_flat] = True
    return CorrelationMap(ref_pixel=tuple(ref_pixel), values=values, defined=defined)


def _window_max(cmap: CorrelationMap, read_mask: np.ndarray, center, half: int):
    ny, nx = cmap.values.shape
    x0, x1 = max(0, center[0] - half), min(nx, center[0] + half + 1)
    y0, y1 = max(0, center[1] - half), min(ny, center[1] + half + 1)
    best_val = -np.inf
    best_px = None
    for py in range(y0, y1):
        for px in range(x0, x1):
            if not (read_mask[py, px] and cmap.defined[py, px]):
                continue
            v = cmap.values[py, px]
            if v > best_val:
                best_val = v
                best_px = (px, py)
    if best_px is None:
        raise DegenerateDataError(f"no defined correlation values around {tuple(center)}")
    return best_val, best_px


def peak_correlations(
    cmap: CorrelationMap,
    regions: RegionSpec,
    predicted_ra,
    predicted_rs,
    sensor: SensorMap,
    window: int = PEAK_SEARCH_WINDOW,
) -> PeakCorrelations:
    """Peak correlations near the predicted anti-Stokes and Stokes spots.

    Each peak is the maximum over a ``window`` x ``window`` box centered on
    the geometry prediction.  Overlapping boxes mean the two readout spots
    are not resolved and the assignment would be ambiguous.
    """
    half = window // 2
    if (
        abs(predicted_ra[0] - predicted_rs[0]) <= 2 * half
        and abs(predicted_ra[1] - predicted_rs[1]) <= 2 * half
    ):
        raise MergedSpotsError(
            f"anti-Stokes spot {tuple(predicted_ra)} and Stokes spot {tuple(predicted_rs)} "
            "are closer than the peak search window"
        )
    read_mask = regions.read_mask(sensor)
    c_ra, px_ra = _window_max(cmap, read_mask, predicted_ra, half)
    c_rs, px_rs = _window_max(cmap, read_mask, predicted_rs, half)
    return PeakCorrelations(
        c_ws_ra=c_ra,
        c_ws_rs=c_rs,
        peaks=PeakPixels(ws=cmap.ref_pixel, ra=px_ra, rs=px_rs),
    )


def read_noise_variance(series: np.ndarray, kappa: float) -> float:
    """Read-noise variance at a pixel from its observed intensity series.

    The noise is multiplicative with variance (kappa * I)^2 at pre-noise
    intensity I, and the observed second moment satisfies
    <I_obs^2> = <I^2> (1 + kappa^2), so Var f = kappa^2 <I_obs^2> / (1 + kappa^2).
    """
    if kappa < 0.0:
        raise DomainError("kappa must be nonnegative")
    if kappa == 0.0:
        return 0.0
    m2 = float(np.mean(np.square(series)))
    return kappa**2 * m2 / (1.0 + kappa**2)


def _gain_point_estimate(ws, ra, rs, detection: DetectionModel, varf_ws: float):
    var_ws = ws.var(ddof=1)
    denom = var_ws - varf_ws
    if denom <= 0.0:
        raise WeakSignalError(
            f"write-pixel variance {var_ws:.4g} does not exceed the read-noise floor {varf_ws:.4g}"
        )
    n = ws.size
    dws = ws - ws.mean()
    cov_ra = float(dws @ (ra - ra.mean())) / (n - 1)
    cov_rs = float(dws @ (rs - rs.mean())) / (n - 1)
    g_ra = (detection.t_ws / detection.t_ra) * cov_ra / denom
    g_rs = (detection.t_ws / detection.t_rs) * cov_rs / denom
    return g_ra, g_rs


def effective_gains(
    stack,
    peaks: PeakPixels,
    detection: DetectionModel | None = None,
    read_noise_var_ws: float | None = None,
    n_boot: int = 200,
    boot_seed: int = 0,
    chunk_shots: int = DEFAULT_CHUNK_SHOTS,
) -> GainEstimate:
    """Effective readout gains from the write/readout pixel covariances.

    Implements the covariance estimator: the write-readout covariance,
    scaled by the transmission ratio and divided by the read-noise corrected
    write variance, isolates the correlated (gain) part of the readout
    because the spontaneous, conjugate-mode and camera-noise contributions
    are all uncorrelated with the write-in signal.  Standard errors come
    from ``n_boot`` bootstrap resamples over shots.
    """
    detection = detection if detection is not None else stack.detection
    series = pixel_series(stack, [peaks.ws, peaks.ra, peaks.rs], chunk_shots)
    ws, ra, rs = series[:, 0], series[:, 1], series[:, 2]
    if read_noise_var_ws is None:
        varf_ws = read_noise_variance(ws, detection.kappa)
        varf_given = False
    else:
        varf_ws = float(read_noise_var_ws)
        varf_given = True
    g_ra, g_rs = _gain_point_estimate(ws, ra, rs, detection, varf_ws)

    n = ws.size
    boot = np.empty((n_boot, 2))
    gen = np.random.default_rng(boot_seed)
    for b in range(n_boot):
        idx = gen.integers(0, n, n)
        wsb, rab, rsb = ws[idx], ra[idx], rs[idx]
        vb = varf_ws if varf_given else read_noise_variance(wsb, detection.kappa)
        try:
            boot[b] = _gain_point_estimate(wsb, rab, rsb, detection, vb)
        except WeakSignalError:
            boot[b] = (np.nan, np.nan)
    ok = ~np.isnan(boot[:, 0])
    if ok.sum() < max(2, n_boot // 2):
        raise WeakSignalError("bootstrap resamples are dominated by the read-noise floor")
    stderr_ra, stderr_rs = boot[ok].std(axis=0, ddof=1)
    return GainEstimate(
        g_eff_ra=g_ra,
        g_eff_rs=g_rs,
        stderr_ra=float(stderr_ra),
        stderr_rs=float(stderr_rs),
        peaks=peaks,
    )


def fit_exponential(times, counts, window=None) -> ExpFit:
    """Least-squares exponential fit in the log domain.

    ``window`` selects the gates to fit: None for all, ("first", k) or
    ("last", k) for the leading or trailing k points.  A single-exponential
    rarely fits a full trace, hence the windowing.
    """
    times = np.asarray(times, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    if times.shape != counts.shape or times.ndim != 1:
        raise DomainError("times and counts must be 1-d arrays of equal length")
    if window is None:
        sel = slice(None)
    else:
        kind, k = window
        k = int(k)
        if k < 1:
            raise DomainError("window size must be positive")
        if kind == "first":
            sel = slice(0, k)
        elif kind == "last":
            sel = slice(max(0, times.size - k), times.size)
        else:
            raise DomainError(f"window kind must be 'first' or 'last', got {kind!r}")
    t = times[sel]
    c = counts[sel]
    if t.size < 3:
        raise DomainError(f"fit window has {t.size} points, need at least 3")
    if np.any(c <= 0.0):
        raise DomainError("all counts in the fit window must be positive")
    slope, intercept = np.polyfit(t, np.log(c), 1)
    resid = np.log(c) - (slope * t + intercept)
    return ExpFit(
        rate=float(slope),
        amplitude=float(np.exp(intercept)),
        window=(float(t[0]), float(t[-1])),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
    )


def analyze_stack(
    stack,
    ref_mode: int = 0,
    window: int = PEAK_SEARCH_WINDOW,
    n_boot: int = 200,
    boot_seed: int = 0,
    chunk_shots: int = DEFAULT_CHUNK_SHOTS,
):
    """Full correlation-and-gains analysis of one stack.

    Uses the stack's own geometry metadata to predict the reference mode's
    three spots, builds the correlation map from the write-Stokes pixel,
    locates the readout peaks and computes the effective gains.  Returns
    (CorrelationMap, PeakCorrelations, GainEstimate).
    """
    meta = stack.meta
    if not 0 <= ref_mode < len(meta.modes):
        raise DomainError(f"ref_mode {ref_mode} out of range for {len(meta.modes)} modes")
    plan = build_render_plan(
        list(meta.modes), meta.geometry, meta.sensor, meta.spot_sigma_px, meta.crosstalk
    )
    nx = meta.sensor.pixels_x
    ws_flat = int(plan.ws_pix[ref_mode])
    ra_flat = int(plan.ra_pix[ref_mode])
    rs_flat = int(plan.rs_pix[ref_mode])
    ws_px = (ws_flat % nx, ws_flat // nx)
    ra_px = (ra_flat % nx, ra_flat // nx)
    rs_px = (rs_flat % nx, rs_flat // nx)
    regions = RegionSpec.from_sensor(meta.sensor)
    cmap = correlation_map(stack, ws_px, regions, chunk_shots)
    peaks = peak_correlations(cmap, regions, ra_px, rs_px, meta.sensor, window)
    gains = effective_gains(
        stack, peaks.peaks, meta.detection, n_boot=n_boot, boot_seed=boot_seed, chunk_shots=chunk_shots
    )
    return cmap, peaks, gains


def sweep_analysis(
    template: SimulationSpec,
    deltas,
    scale: float,
    horizon: float,
    gates: GateConfig | None = None,
    fit_points: int = 10,
    ref_mode: int = 0,
    threads: int = 1,
    chunk_shots: int = DEFAULT_CHUNK_SHOTS,
    n_boot: int = 200,
) -> np.ndarray:
    """End-to-end simulate-and-analyze over a detuning grid.

    Each grid point derives couplings from the detuning, integrates them
    over ``horizon``, simulates a stack from the template (same seed for
    every point, so rows differ only through the physics) and recovers peak
    correlations and effective gains.  When ``gates`` is given, the fitted
    exponential rate of the deterministic gated trace is included, using the
    leading gates in the decaying regime and the trailing ones in the
    growing regime.  Returns rows with columns :data:`SWEEP_ANALYSIS_COLUMNS`.
    """
    deltas = np.asarray(list(deltas), dtype=float)
    if deltas.size == 0:
        raise DomainError("detuning grid is empty")
    rows = np.empty((deltas.size, 6), dtype=float)
    for i, delta in enumerate(deltas):
        pair = couplings_from_detuning(DetuningSpec(delta_r=float(delta), scale=scale))
        comp = integrated_components(pair, horizon)
        spec = replace(template, components=comp)
        stack = simulate_stack(spec, threads=threads, chunk_shots=chunk_shots)
        _, peaks, gains = analyze_stack(
            stack, ref_mode=ref_mode, n_boot=n_boot, chunk_shots=chunk_shots
        )
        fit_rate = np.nan
        if gates is not None:
            eps = pair.xi**2 - pair.chi**2
            t, counts = simulate_gated_counts(
                pair,
                n_b=spec.mean_nb * spec.efficiency.eta_w,
                gates=gates,
                detection=spec.detection,
                eta_r=spec.efficiency.eta_r,
            )
            k = min(fit_points, gates.n_gates)
            fit = fit_exponential(t, counts, ("first", k) if eps <= 0.0 else ("last", k))
            fit_rate = fit.rate
        rows[i] = (delta, peaks.c_ws_ra, peaks.c_ws_rs, gains.g_eff_ra, gains.g_eff_rs, fit_rate)
    return rows
