"""Closed-form single-mode model of four-wave-mixing readout.

Anti-Stokes scattering (coupling ``chi``) converts stored spin-wave
excitations into photons, while Stokes scattering (coupling ``xi``) creates
photon/excitation pairs.  Acting together during readout they give the
stored excitation number an exponential time dependence, and every scattered
field splits into a gain part (proportional to the initial excitation
number) plus a spontaneous, vacuum-seeded noise part.

All quantities are dimensionless model units: couplings carry
(time)^(-1/2), instantaneous rates 1/time, and time-integrated components
are pure numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Switch to series expansions of eps-divided expressions below this value of
# |eps|*t; keeps the truncation error under ~1e-12 while avoiding
# catastrophic cancellation near the chi = xi degeneracy.
DEGENERACY_SWITCH = 1e-6

# Ground-state hyperfine splitting of rubidium-87, used by the physical-units
# adapter when mapping laser detunings in GHz onto the dimensionless detuning.
RB87_HF_SPLITTING_GHZ = 6.834

SWEEP_COLUMNS = ("delta_r", "g_ra_bar", "s_ra_bar", "g_rs_bar", "s_rs_bar")


@dataclass(frozen=True)
class CouplingPair:
    """Anti-Stokes (`chi`) and Stokes (`xi`) coupling strengths, (time)^(-1/2)."""

    chi: float
    xi: float

    def __post_init__(self):
        if not (self.chi >= 0.0 and self.xi >= 0.0):
            raise DomainError(f"couplings must be nonnegative, got chi={self.chi}, xi={self.xi}")


@dataclass(frozen=True)
class DetuningSpec:
    """Read-laser detuning in units of the ground-state splitting.

    ``delta_r`` must lie strictly between 0 and 1: the read laser sits
    between the two Raman resonances, and either edge is a pole of the
    corresponding coupling.  ``scale`` is the overall coupling-strength
    constant, a free calibration input.
    """

    delta_r: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.delta_r < 1.0:
            raise DomainError(f"delta_r must lie in (0, 1), got {self.delta_r}")
        if not self.scale > 0.0:
            raise DomainError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class PhysicalCoupling:
    """Microscopic inputs for a single Raman coupling strength.

    Fields: excited-state linewidth ``gamma`` (1/time), resonant optical
    depth ``depth``, pump Raman frequency ``rabi`` (1/time) and pump
    detuning ``detuning`` (1/time) from the relevant transition.
    """

    gamma: float
    depth: float
    rabi: float
    detuning: float

    def __post_init__(self):
        if not (self.gamma > 0.0 and self.depth > 0.0 and self.rabi >= 0.0):
            raise DomainError("gamma and depth must be positive, rabi nonnegative")
        if self.detuning == 0.0:
            raise DomainError("detuning must be nonzero")


@dataclass(frozen=True)
class SpinWavePopulation:
    """Mean initial spin-wave excitation number."""

    n_b: float

    def __post_init__(self):
        if not self.n_b >= 0.0:
            raise DomainError(f"n_b must be nonnegative, got {self.n_b}")


@dataclass(frozen=True)
class ReadoutComponents:
    """Gain and spontaneous-noise components of the two readout fields.

    Instantaneous rates (1/time) when produced by :func:`readout_rates`,
    dimensionless when produced by :func:`integrated_components`.  The mean
    photon rate (or number) in each field is ``g * n_b + s``.
    """

    g_ra: float
    s_ra: float
    g_rs: float
    s_rs: float

    def mean_rates(self, n_b: float, eta_r: float = 1.0) -> tuple[float, float]:
        """Mean anti-Stokes and Stokes outputs for ``n_b`` stored excitations."""
        return (eta_r * self.g_ra * n_b + self.s_ra, eta_r * self.g_rs * n_b + self.s_rs)


def couplings_from_detuning(spec: DetuningSpec) -> CouplingPair:
    """Couplings at a given dimensionless read-laser detuning.

    Each coupling is inversely proportional to the distance from its
    resonance: ``chi = scale / delta_r`` and ``xi = scale / (1 - delta_r)``,
    so ``delta_r = 0.5`` is the symmetric point ``chi = xi``.
    """
    return CouplingPair(chi=spec.scale / spec.delta_r, xi=spec.scale / (1.0 - spec.delta_r))


def coupling_from_physical(p: PhysicalCoupling) -> float:
    """Coupling magnitude sqrt(gamma * depth * rabi^2 / detuning^2)."""
    return math.sqrt(p.gamma * p.depth) * abs(p.rabi / p.detuning)


def delta_r_from_ghz(
    detuning_ghz: float,
    offset_ghz: float = 0.0,
    splitting_ghz: float = RB87_HF_SPLITTING_GHZ,
) -> float:
    """Map a laboratory detuning in GHz onto the dimensionless ``delta_r``.

    The absolute calibration (offset and splitting) is experiment specific,
    which is why both are explicit inputs.
    """
    if splitting_ghz <= 0.0:
        raise DomainError("splitting_ghz must be positive")
    return (detuning_ghz - offset_ghz) / splitting_ghz


def _rates_generic(chi2: float, xi2: float, t: float) -> tuple[float, float, float, float]:
    """Rate components away from the degeneracy, eps = xi^2 - chi^2 != 0."""
    eps = xi2 - chi2
    grow = math.exp(eps * t)
    w = math.expm1(eps * t)
    g_ra = chi2 * grow
    s_ra = chi2 * xi2 * w / eps
    g_rs = xi2 * grow
    s_rs = xi2 + xi2 * xi2 * w / eps
    return g_ra, s_ra, g_rs, s_rs


def _rates_series(chi2: float, xi2: float, t: float) -> tuple[float, float, float, float]:
    """Second-order expansion of the eps-divided terms around eps = 0."""
    eps = xi2 - chi2
    x = eps * t
    grow = math.exp(x)
    series = 1.0 + x / 2.0 + x * x / 6.0  # (e^x - 1)/x to second order
    g_ra = chi2 * grow
    s_ra = chi2 * xi2 * t * series
    g_rs = xi2 * grow
    s_rs = xi2 + xi2 * xi2 * t * series
    return g_ra, s_ra, g_rs, s_rs


def readout_rates(coupling: CouplingPair, t: float) -> ReadoutComponents:
    """Instantaneous gain and noise rates at time ``t`` into the readout.

    The shared exponential ``exp((xi^2 - chi^2) t)`` makes the rates decay
    when the anti-Stokes coupling dominates, grow when the Stokes coupling
    dominates, and stay constant at the degeneracy, where the analytic
    limits ``s_ra = chi^2 xi^2 t`` and ``s_rs = xi^2 (1 + xi^2 t)`` are used.
    """
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t}")
    chi2 = coupling.chi**2
    xi2 = coupling.xi**2
    if chi2 == 0.0 and xi2 == 0.0:
        raise DomainError("chi and xi cannot both be zero")
    eps = xi2 - chi2
    if abs(eps) * t < DEGENERACY_SWITCH:
        parts = _rates_series(chi2, xi2, t)
    else:
        parts = _rates_generic(chi2, xi2, t)
    return ReadoutComponents(*parts)


def _integrals_generic(chi2: float, xi2: float, horizon: float) -> tuple[float, float, float, float]:
    eps = xi2 - chi2
    y = eps * horizon
    w = math.expm1(y)
    g_ra = chi2 * w / eps
    s_ra = chi2 * xi2 * (w - y) / (eps * eps)
    g_rs = xi2 * w / eps
    s_rs = xi2 * horizon + xi2 * xi2 * (w - y) / (eps * eps)
    return g_ra, s_ra, g_rs, s_rs


def _integrals_series(chi2: float, xi2: float, horizon: float) -> tuple[float, float, float, float]:
    eps = xi2 - chi2
    y = eps * horizon
    lin = 1.0 + y / 2.0 + y * y / 6.0  # (e^y - 1)/y
    quad = 0.5 + y / 6.0 + y * y / 24.0  # (e^y - 1 - y)/y^2
    g_ra = chi2 * horizon * lin
    s_ra = chi2 * xi2 * horizon * horizon * quad
    g_rs = xi2 * horizon * lin
    s_rs = xi2 * horizon + xi2 * xi2 * horizon * horizon * quad
    return g_ra, s_ra, g_rs, s_rs


def integrated_components(coupling: CouplingPair, horizon: float) -> ReadoutComponents:
    """Time integrals of the rate components over ``[0, horizon]``.

    For ``xi = 0`` and a long horizon the anti-Stokes gain saturates at
    unity (``1 - exp(-chi^2 T)``): every stored excitation is converted to
    exactly one photon and no spontaneous noise is added.
    """
    if not horizon > 0.0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    chi2 = coupling.chi**2
    xi2 = coupling.xi**2
    if chi2 == 0.0 and xi2 == 0.0:
        raise DomainError("chi and xi cannot both be zero")
    eps = xi2 - chi2
    if abs(eps) * horizon < DEGENERACY_SWITCH:
        parts = _integrals_series(chi2, xi2, horizon)
    else:
        parts = _integrals_generic(chi2, xi2, horizon)
    return ReadoutComponents(*parts)


def saturation_horizon(coupling: CouplingPair, tail: float = 1e-12) -> float:
    """Horizon long enough that the decaying gain has converged.

    Only meaningful in the decaying regime chi > xi, where it returns the
    time at which ``exp(-(chi^2 - xi^2) T) < tail``.
    """
    chi2 = coupling.chi**2
    xi2 = coupling.xi**2
    if not chi2 > xi2:
        raise DomainError("saturation horizon requires chi > xi (decaying readout)")
    return -math.log(tail) / (chi2 - xi2)


def detuning_sweep(scale: float, horizon: float, deltas) -> np.ndarray:
    """Integrated components on a grid of detunings.

    Returns an array with columns :data:`SWEEP_COLUMNS`; the asymmetry
    between the two edges (near-unity anti-Stokes gain with suppressed noise
    at small ``delta_r``, steeply growing Stokes gain with comparable noise
    toward ``delta_r = 1``) is the main content of the table.
    """
    deltas = np.asarray(list(deltas), dtype=float)
    if deltas.size == 0:
        raise DomainError("detuning grid is empty")
    rows = np.empty((deltas.size, 5), dtype=float)
    for i, delta in enumerate(deltas):
        pair = couplings_from_detuning(DetuningSpec(delta_r=float(delta), scale=scale))
        comp = integrated_components(pair, horizon)
        rows[i] = (delta, comp.g_ra, comp.s_ra, comp.g_rs, comp.s_rs)
    return rows
