"""Tests of the closed-form readout model against independent oracles.

The independent oracle used throughout is the excitation-number rate
equation dn/dt = (xi^2 - chi^2) n + xi^2 with photon fluxes chi^2 * n
(anti-Stokes) and xi^2 * (n + 1) (Stokes): the gain components are the
fluxes seeded by n(0) = 1 with the source removed, the noise components the
fluxes seeded by n(0) = 0 with the source on.  Integrated components are
checked by adaptive quadrature of the rates.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from fwm_readout.errors import DomainError
from fwm_readout.model import (
    CouplingPair,
    DetuningSpec,
    PhysicalCoupling,
    SpinWavePopulation,
    _integrals_generic,
    _integrals_series,
    _rates_generic,
    _rates_series,
    coupling_from_physical,
    couplings_from_detuning,
    delta_r_from_ghz,
    detuning_sweep,
    integrated_components,
    readout_rates,
    saturation_horizon,
)


def ode_components(chi2, xi2, t):
    """Rate components at time t from the excitation-number ODE."""
    eps = xi2 - chi2
    if t == 0.0:
        return chi2, 0.0, xi2, xi2
    hom = solve_ivp(
        lambda _, y: [eps * y[0]], (0.0, t), [1.0], method="DOP853", rtol=1e-12, atol=1e-14
    ).y[0, -1]
    src = solve_ivp(
        lambda _, y: [eps * y[0] + xi2], (0.0, t), [0.0], method="DOP853", rtol=1e-12, atol=1e-14
    ).y[0, -1]
    return chi2 * hom, chi2 * src, xi2 * hom, xi2 * (src + 1.0)


class TestReadoutRates:
    def test_no_stokes_at_time_zero(self):
        comp = readout_rates(CouplingPair(chi=1.0, xi=0.0), t=0.0)
        assert (comp.g_ra, comp.s_ra, comp.g_rs, comp.s_rs) == (1.0, 0.0, 0.0, 0.0)

    def test_generic_point_closed_form(self):
        # chi^2=1, xi^2=2, t=1
        comp = readout_rates(CouplingPair(chi=1.0, xi=math.sqrt(2.0)), t=1.0)
        np.testing.assert_allclose(comp.g_ra, math.e, rtol=1e-14)
        np.testing.assert_allclose(comp.s_ra, 2.0 * (math.e - 1.0), rtol=1e-14)
        np.testing.assert_allclose(comp.g_rs, 2.0 * math.e, rtol=1e-14)
        np.testing.assert_allclose(comp.s_rs, 4.0 * math.e - 2.0, rtol=1e-14)

    def test_generic_point_against_ode_oracle(self):
        comp = readout_rates(CouplingPair(chi=1.0, xi=math.sqrt(2.0)), t=1.0)
        oracle = ode_components(1.0, 2.0, 1.0)
        np.testing.assert_allclose(
            [comp.g_ra, comp.s_ra, comp.g_rs, comp.s_rs], oracle, rtol=1e-10
        )

    def test_degenerate_point(self):
        comp = readout_rates(CouplingPair(chi=1.0, xi=1.0), t=2.0)
        assert comp.g_ra == 1.0
        assert comp.s_ra == 2.0
        assert comp.g_rs == 1.0
        assert comp.s_rs == 3.0

    @pytest.mark.parametrize("shift", [1e-8, -1e-8])
    def test_degenerate_point_matches_nearby_generic(self, shift):
        comp = readout_rates(CouplingPair(chi=1.0, xi=math.sqrt(1.0 + shift)), t=2.0)
        np.testing.assert_allclose(
            [comp.g_ra, comp.s_ra, comp.g_rs, comp.s_rs], [1.0, 2.0, 1.0, 3.0], rtol=1e-7
        )

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            readout_rates(CouplingPair(chi=1.0, xi=0.5), t=-0.1)

    def test_both_couplings_zero_rejected(self):
        with pytest.raises(DomainError):
            readout_rates(CouplingPair(chi=0.0, xi=0.0), t=1.0)

    def test_zero_noise_limit_for_pure_anti_stokes(self):
        pair = CouplingPair(chi=1.3, xi=0.0)
        for t in np.linspace(0.0, 8.0, 17):
            comp = readout_rates(pair, float(t))
            assert comp.s_ra == 0.0
            assert comp.s_rs == 0.0
            assert comp.g_rs == 0.0

    def test_exponent_sign_matches_coupling_ordering(self):
        grid = np.linspace(0.1, 2.0, 9)
        for chi, xi in [(1.5, 0.5), (0.5, 1.5), (1.0, 1.0)]:
            g = [readout_rates(CouplingPair(chi, xi), float(t)).g_ra for t in grid]
            diffs = np.diff(g)
            if xi > chi:
                assert np.all(diffs > 0)
            elif chi > xi:
                assert np.all(diffs < 0)
            else:
                np.testing.assert_allclose(diffs, 0.0, atol=1e-15)

    def test_noise_positivity(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            chi, xi = rng.uniform(0.0, 2.0, size=2)
            if chi == 0.0 and xi == 0.0:
                continue
            t = rng.uniform(0.0, 5.0)
            comp = readout_rates(CouplingPair(chi, xi), t)
            eps = xi**2 - chi**2
            assert comp.s_ra >= 0.0
            assert comp.s_rs >= xi**2 * min(1.0, math.exp(t * eps)) - 1e-12 * xi**2

    def test_branch_continuity_at_switch_scale(self):
        # generic and series branches agree to 1e-6 relative at |eps| t = 1e-4
        rng = np.random.default_rng(11)
        for _ in range(1000):
            chi2 = rng.uniform(0.05, 4.0)
            t = rng.uniform(0.05, 5.0)
            sign = rng.choice([-1.0, 1.0])
            xi2 = chi2 + sign * 1e-4 / t
            if xi2 <= 0.0:
                continue
            gen = _rates_generic(chi2, xi2, t)
            ser = _rates_series(chi2, xi2, t)
            np.testing.assert_allclose(gen, ser, rtol=1e-6)

    def test_mean_rates_helper(self):
        comp = readout_rates(CouplingPair(chi=1.0, xi=math.sqrt(2.0)), t=1.0)
        ra, rs = comp.mean_rates(n_b=3.0, eta_r=0.5)
        assert ra == pytest.approx(0.5 * comp.g_ra * 3.0 + comp.s_ra)
        assert rs == pytest.approx(0.5 * comp.g_rs * 3.0 + comp.s_rs)


class TestIntegratedComponents:
    def test_unit_gain_for_pure_anti_stokes(self):
        comp = integrated_components(CouplingPair(chi=1.0, xi=0.0), horizon=100.0)
        np.testing.assert_allclose(comp.g_ra, 1.0 - math.exp(-100.0), rtol=1e-15)
        assert comp.s_ra == 0.0

    def test_generic_point_closed_form(self):
        comp = integrated_components(CouplingPair(chi=1.0, xi=math.sqrt(2.0)), horizon=1.0)
        np.testing.assert_allclose(comp.g_ra, math.e - 1.0, rtol=1e-14)
        np.testing.assert_allclose(comp.s_ra, 2.0 * (math.e - 2.0), rtol=1e-14)
        np.testing.assert_allclose(comp.g_rs, 2.0 * (math.e - 1.0), rtol=1e-14)
        np.testing.assert_allclose(comp.s_rs, 4.0 * math.e - 6.0, rtol=1e-14)

    def test_degenerate_point(self):
        comp = integrated_components(CouplingPair(chi=1.0, xi=1.0), horizon=1.0)
        np.testing.assert_allclose(
            [comp.g_ra, comp.s_ra, comp.g_rs, comp.s_rs], [1.0, 0.5, 1.0, 1.5], rtol=1e-15
        )

    def test_nonpositive_horizon_rejected(self):
        with pytest.raises(DomainError):
            integrated_components(CouplingPair(chi=1.0, xi=0.5), horizon=0.0)

    def test_quadrature_consistency_random_draws(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            horizon = rng.uniform(0.1, 8.0)
            eps_t = rng.uniform(-20.0, 20.0)
            base = rng.uniform(0.1, 4.0)
            eps = eps_t / horizon
            chi2 = base if eps >= 0.0 else base - eps
            xi2 = base + eps if eps >= 0.0 else base
            pair = CouplingPair(math.sqrt(chi2), math.sqrt(xi2))
            comp = integrated_components(pair, horizon)
            for got, pick in [
                (comp.g_ra, lambda c: c.g_ra),
                (comp.s_ra, lambda c: c.s_ra),
                (comp.g_rs, lambda c: c.g_rs),
                (comp.s_rs, lambda c: c.s_rs),
            ]:
                want = quad(
                    lambda s: pick(readout_rates(pair, s)), 0.0, horizon, epsabs=0.0, epsrel=1e-11
                )[0]
                np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-12)

    def test_integral_branch_continuity(self):
        rng = np.random.default_rng(29)
        for _ in range(500):
            chi2 = rng.uniform(0.05, 4.0)
            horizon = rng.uniform(0.05, 5.0)
            sign = rng.choice([-1.0, 1.0])
            xi2 = chi2 + sign * 1e-4 / horizon
            if xi2 <= 0.0:
                continue
            gen = _integrals_generic(chi2, xi2, horizon)
            ser = _integrals_series(chi2, xi2, horizon)
            np.testing.assert_allclose(gen, ser, rtol=1e-6)

    def test_unitarity_monotone_below_one(self):
        pair = CouplingPair(chi=0.8, xi=0.0)
        horizons = np.linspace(0.2, 40.0, 25)
        gains = [integrated_components(pair, float(T)).g_ra for T in horizons]
        assert all(g <= 1.0 + 1e-15 for g in gains)
        assert np.all(np.diff(gains) > 0.0)

    def test_saturation_horizon_converges(self):
        pair = CouplingPair(chi=1.2, xi=0.3)
        T = saturation_horizon(pair, tail=1e-12)
        comp = integrated_components(pair, T)
        comp_longer = integrated_components(pair, 2.0 * T)
        np.testing.assert_allclose(comp.g_ra, comp_longer.g_ra, rtol=1e-11)
        with pytest.raises(DomainError):
            saturation_horizon(CouplingPair(chi=0.3, xi=1.2))


class TestCouplingsFromDetuning:
    def test_symmetric_point(self):
        pair = couplings_from_detuning(DetuningSpec(delta_r=0.5, scale=1.0))
        assert pair.chi == 2.0
        assert pair.xi == 2.0

    def test_asymmetric_point(self):
        pair = couplings_from_detuning(DetuningSpec(delta_r=0.3, scale=1.0))
        np.testing.assert_allclose(pair.chi, 1.0 / 0.3, rtol=1e-15)
        np.testing.assert_allclose(pair.xi, 1.0 / 0.7, rtol=1e-15)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.2])
    def test_edges_rejected(self, bad):
        with pytest.raises(DomainError):
            DetuningSpec(delta_r=bad, scale=1.0)

    def test_units_adapter(self):
        assert delta_r_from_ghz(6.834) == pytest.approx(1.0)
        assert delta_r_from_ghz(2.0, offset_ghz=0.5) == pytest.approx(1.5 / 6.834)
        with pytest.raises(DomainError):
            delta_r_from_ghz(1.0, splitting_ghz=0.0)


class TestSpinWavePopulation:
    def test_validation(self):
        assert SpinWavePopulation(n_b=3.5).n_b == 3.5
        assert SpinWavePopulation(n_b=0.0).n_b == 0.0
        with pytest.raises(DomainError):
            SpinWavePopulation(n_b=-1.0)


class TestPhysicalCoupling:
    def test_all_ones(self):
        assert coupling_from_physical(PhysicalCoupling(1.0, 1.0, 1.0, 1.0)) == 1.0

    def test_dense_medium(self):
        got = coupling_from_physical(PhysicalCoupling(gamma=1.0, depth=135.0, rabi=1.0, detuning=10.0))
        np.testing.assert_allclose(got, math.sqrt(1.35), rtol=1e-15)

    def test_no_pump(self):
        assert coupling_from_physical(PhysicalCoupling(1.0, 1.0, 0.0, 1.0)) == 0.0

    def test_zero_detuning_rejected(self):
        with pytest.raises(DomainError):
            PhysicalCoupling(1.0, 1.0, 1.0, 0.0)


class TestDetuningSweep:
    def test_symmetry_at_center(self):
        rows = detuning_sweep(scale=1.0, horizon=0.5, deltas=[0.5])
        assert rows.shape == (1, 5)
        np.testing.assert_allclose(rows[0, 1], rows[0, 3], rtol=1e-14)  # g_ra == g_rs

    def test_pure_readout_regime(self):
        # Small detuning, horizon sized so chi^2 T ~ 7: near-unity gain with
        # suppressed spontaneous noise.
        delta = 0.01
        horizon = 7.0 * delta**2
        rows = detuning_sweep(scale=1.0, horizon=horizon, deltas=[delta])
        _, g_ra, s_ra, _, _ = rows[0]
        assert 1.0 - 1e-3 <= g_ra <= 1.0
        assert s_ra < 1e-3

    def test_amplified_regime_noise_tracks_gain(self):
        rows = detuning_sweep(scale=1.0, horizon=0.05, deltas=[0.9])
        _, _, _, g_rs, s_rs = rows[0]
        assert g_rs > 1.0
        assert abs(s_rs - g_rs) / g_rs < 0.10

    def test_empty_grid_rejected(self):
        with pytest.raises(DomainError):
            detuning_sweep(scale=1.0, horizon=1.0, deltas=[])

    def test_bad_grid_point_propagates(self):
        with pytest.raises(DomainError):
            detuning_sweep(scale=1.0, horizon=1.0, deltas=[0.5, 1.5])
