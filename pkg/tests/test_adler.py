import math

import numpy as np
import pytest
from scipy import integrate as spi

from seo_sync import adler
from seo_sync.adler import AdlerParams
from seo_sync.constants import BOLTZMANN
from seo_sync.envelope import sigma_fo, stored_energy
from seo_sync.errors import LockedRegimeError, StepSizeError, UnlockedRegimeError

TWO_PI = 2.0 * math.pi


class TestStationaryPhase:
    def test_zero_detuning(self):
        assert adler.stationary_phase(0.0).gamma == 0.0

    def test_half_detuning(self):
        sp = adler.stationary_phase(0.5)
        assert sp.gamma == pytest.approx(math.pi / 6, rel=1e-14)
        assert sp.cos_gamma == pytest.approx(math.sqrt(0.75), rel=1e-14)

    def test_running_phase_absent(self):
        assert adler.stationary_phase(1.2) is None


class TestPeriod:
    def test_sqrt2(self):
        assert adler.period(math.sqrt(2.0)) == pytest.approx(TWO_PI, rel=1e-14)

    def test_five_quarters(self):
        assert adler.period(1.25) == pytest.approx(8 * math.pi / 3, rel=1e-14)

    def test_locked_absent(self):
        assert adler.period(0.99) is None

    def test_near_threshold_square_root_asymptote(self):
        # 1/T_J ~ sqrt(i_b - 1)/(sqrt(2) pi) just outside the tongue
        eps = np.geomspace(1e-4, 1e-2, 9)
        inv_t = np.array([1.0 / adler.period(1.0 + e) for e in eps])
        slope, intercept = np.polyfit(np.log(eps), np.log(inv_t), 1)
        assert slope == pytest.approx(0.5, abs=0.005)
        assert math.exp(intercept) == pytest.approx(1.0 / (math.sqrt(2.0) * math.pi), rel=0.01)


class TestNoiselessSolution:
    def test_value_at_zero(self):
        assert adler.gamma_noiseless(1.5, 0.0) == pytest.approx(2 * math.atan(1 / 1.5), rel=1e-14)

    def test_round_trip_with_tau_of_gamma(self):
        ib = 1.3
        t_j = adler.period(ib)
        for tau in np.linspace(-0.49, 0.49, 21) * t_j:
            g = adler.gamma_noiseless(ib, tau)
            assert adler.tau_of_gamma(ib, g) == pytest.approx(tau, abs=1e-10)

    def test_ode_residual_by_finite_differences(self):
        ib, h = 1.7, 1e-6
        for tau in np.linspace(-3.0, 3.0, 31):
            lhs = (adler.gamma_noiseless(ib, tau + h) - adler.gamma_noiseless(ib, tau - h)) / (2 * h)
            assert lhs == pytest.approx(ib - math.sin(adler.gamma_noiseless(ib, tau)), abs=1e-6)

    def test_periodic_increment_and_continuity(self):
        for ib in (1.2, -1.2):
            t_j = adler.period(ib)
            tau = np.linspace(-3 * t_j, 3 * t_j, 4001)
            g = adler.gamma_noiseless(ib, tau)
            assert np.max(np.abs(np.diff(g))) < 0.1  # no branch jumps
            assert adler.gamma_noiseless(ib, 1.234 + t_j) == pytest.approx(
                adler.gamma_noiseless(ib, 1.234) + math.copysign(TWO_PI, ib), rel=1e-12
            )

    def test_locked_regime_rejected(self):
        with pytest.raises(LockedRegimeError):
            adler.gamma_noiseless(0.5, 1.0)


class TestFourierComb:
    def test_five_quarters_values(self):
        g = adler.fourier_coefficients(1.25, 2)
        k0 = 2
        assert g[k0] == pytest.approx(0.75, rel=1e-14)
        assert g[k0 + 1] == pytest.approx(0.375j, rel=1e-14)
        assert g[k0 + 2] == pytest.approx(-0.1875, rel=1e-14)

    def test_g0_is_mean_winding_rate(self):
        for ib in (1.05, 2.0, 7.0):
            g = adler.fourier_coefficients(ib, 0)
            assert g[0] == pytest.approx(math.sqrt(ib**2 - 1), rel=1e-14)

    def test_quadrature_oracle(self):
        x = np.linspace(0.0, TWO_PI, 200001)[:-1]
        for ib in (1.05, 1.5, 3.0):
            v = (ib**2 - 1) / (ib + np.sin(x))
            g = adler.fourier_coefficients(ib, 8)
            for k in range(-8, 9):
                ck = np.mean(v * np.exp(-1j * k * x))
                assert abs(ck - g[k + 8]) < 1e-8

    def test_mirrored_detuning_has_equal_magnitudes(self):
        g_pos = adler.fourier_coefficients(1.4, 5)
        g_neg = adler.fourier_coefficients(-1.4, 5)
        assert np.allclose(np.abs(g_pos), np.abs(g_neg), rtol=1e-13)


class TestSidebandAmplitudes:
    def test_against_quadrature_of_exact_solution(self):
        # comb coefficients of exp(i gamma(tau)) over one exact period
        for ib in (1.2, 1.5, 3.0):
            t_j = adler.period(ib)
            tau = np.linspace(0.0, t_j, 20001)[:-1]
            z = np.exp(1j * adler.gamma_noiseless(ib, tau))
            c = adler.sideband_amplitudes(ib, 4)
            for n in range(5):
                cn = np.mean(z * np.exp(-1j * n * TWO_PI * tau / t_j))
                assert abs(cn - c[n]) < 1e-6
            # nothing on the other side of the drive
            for n in (-1, -2):
                cn = np.mean(z * np.exp(-1j * n * TWO_PI * tau / t_j))
                assert abs(cn) < 1e-6

    def test_successive_ratio_matches_fourier_comb(self):
        for ib in (1.05, 1.5, 3.0):
            c = adler.sideband_amplitudes(ib, 4)
            g = adler.fourier_coefficients(ib, 4)
            rho = abs(g[5] / g[4])  # |g_1 / g_0|
            ratios = np.abs(c[2:] / c[1:-1])
            assert np.allclose(ratios, rho, rtol=1e-12)

    def test_total_power_is_unity(self):
        for ib in (1.05, 2.0):
            c = adler.sideband_amplitudes(ib, 4000)
            assert np.sum(np.abs(c) ** 2) == pytest.approx(1.0, rel=1e-12)


class TestSidebandSpacing:
    def test_sqrt2_case(self):
        assert adler.sideband_spacing(1.0 + math.sqrt(2.0) * 0.3, 1.0, 0.3) == pytest.approx(0.3, rel=1e-12)

    def test_edge_gives_zero(self):
        assert adler.sideband_spacing(1.5, 1.0, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_inside_absent(self):
        assert adler.sideband_spacing(1.1, 1.0, 0.3) is None

    def test_published_tongue_geometry(self):
        # half-width/Omega_eff at the published numbers: 49.6 Hz / 236.4 kHz
        assert 49.6 / 236400.0 == pytest.approx(2.1e-4, rel=5e-3)


class TestIntegration:
    def test_converges_to_stable_fixed_point(self):
        p = AdlerParams(i_b=0.5)
        ts = adler.integrate_adler(p, math.asin(0.5) + 0.1, 50.0, 0.005)
        assert ts.values[-1] == pytest.approx(math.asin(0.5), abs=1e-6)

    def test_noiseless_winding_rate(self):
        ib = 1.5
        rate_expected = math.sqrt(ib**2 - 1)
        t_j = adler.period(ib)
        ts = adler.integrate_adler(AdlerParams(i_b=ib), 2 * math.atan(1 / ib), 100 * t_j, 2e-3)
        # evaluate over an integer number of analytic periods
        n_per = int(ts.duration / t_j) - 1
        g = np.interp(n_per * t_j, ts.times, ts.values)
        rate = (g - ts.values[0]) / (n_per * t_j)
        assert rate == pytest.approx(rate_expected, rel=1e-4)

    def test_locked_variance_matches_linearized_formula(self):
        p = AdlerParams(i_b=0.5, d_noise=0.004)
        ts = adler.integrate_adler(p, math.asin(0.5), 12000.0, 0.01, seed=2)
        var = float(np.var(ts.values - math.asin(0.5)))
        assert var == pytest.approx(adler.correlation(p, 0.0), rel=0.10)

    def test_step_guard(self):
        with pytest.raises(StepSizeError):
            adler.integrate_adler(AdlerParams(i_b=12.0), 0.0, 1.0, 0.01)

    def test_determinism(self):
        p = AdlerParams(i_b=0.3, d_noise=0.01)
        a = adler.integrate_adler(p, 0.0, 50.0, 0.01, seed=9)
        b = adler.integrate_adler(p, 0.0, 50.0, 0.01, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_batch_matches_single(self):
        ib = np.array([0.4, 1.6])
        g0 = np.array([0.1, 0.2])
        batch = adler.integrate_adler_batch(ib, g0, 30.0, 0.005)
        for j in range(2):
            single = adler.integrate_adler(AdlerParams(i_b=float(ib[j])), float(g0[j]), 30.0, 0.005)
            assert np.allclose(batch[:, j], single.values, atol=1e-12)

    def test_bounded_phase_lag_at_large_detuning(self):
        # for |i_b| >> 1 the modulation barely perturbs the uniform winding:
        # after removing the mean rate, the residual wiggle stays within
        # 2 asin(1/i_b) + O(1/i_b^2)
        ib = 8.0
        ts = adler.integrate_adler(AdlerParams(i_b=ib), 0.0, 40.0, 5e-3)
        drift = ts.values - math.sqrt(ib**2 - 1) * ts.times
        wiggle = 0.5 * (drift.max() - drift.min())
        assert wiggle < 2 * math.asin(1 / ib) + 0.5 / ib**2

    def test_simulated_comb_matches_g_k(self):
        # spectral content of d(gamma)/d(tau): coefficients at k 2pi/T_J match g_k
        ib = 1.5
        t_j = adler.period(ib)
        d_tau = 1e-3
        ts = adler.integrate_adler(AdlerParams(i_b=ib), 2 * math.atan(1 / ib), 20 * t_j, d_tau)
        n_keep = int(18 * t_j / d_tau)
        tau = ts.times[:n_keep]
        v = ib - np.sin(ts.values[:n_keep])
        g = adler.fourier_coefficients(ib, 5)
        x0 = adler.phase_offset(ib)
        for k in range(-5, 6):
            ck = 2 * np.mean(v * np.exp(-1j * k * (TWO_PI * tau / t_j + x0))) / 2
            assert abs(ck - g[k + 5]) <= 0.01 * max(abs(g[k + 5]), abs(g[5]))


class TestNoiseAnalysis:
    def test_psd_at_zero(self):
        p = AdlerParams(i_b=0.0, d_noise=0.02)
        assert adler.phase_noise_psd(p, 0.0) == pytest.approx(0.02 / math.pi, rel=1e-14)

    def test_lorentzian_integral_equals_c0(self):
        p = AdlerParams(i_b=0.6, d_noise=0.013)
        val, _ = spi.quad(lambda w: adler.phase_noise_psd(p, w), -np.inf, np.inf)
        assert val == pytest.approx(adler.correlation(p, 0.0), rel=1e-9)

    def test_correlation_values(self):
        p = AdlerParams(i_b=0.0, d_noise=0.4)
        assert adler.correlation(p, 0.0) == pytest.approx(0.4, rel=1e-14)
        lam = math.sqrt(1 - 0.0**2)
        assert adler.correlation(p, 1.0 / lam) == pytest.approx(0.4 / math.e, rel=1e-12)

    def test_unlocked_regime_rejected(self):
        p = AdlerParams(i_b=1.4, d_noise=0.1)
        with pytest.raises(UnlockedRegimeError):
            adler.phase_noise_psd(p, 0.0)
        with pytest.raises(UnlockedRegimeError):
            adler.correlation(p, 0.0)

    def test_welch_psd_of_simulation_matches_lorentzian(self):
        from seo_sync.spectral import welch_psd

        p = AdlerParams(i_b=0.5, d_noise=0.01)
        ts = adler.integrate_adler(p, math.asin(0.5), 26000.0, 0.01, seed=4)
        gn = ts.with_values(ts.values - math.asin(0.5))
        psd = welch_psd(gn, 1 << 14, 0.5, "hann")
        lam = math.sqrt(1 - 0.25)
        w = TWO_PI * psd.freqs
        band = (np.abs(w) > 0.1 * lam) & (np.abs(w) < 5.0 * lam)
        # one-sided per-Hz density -> two-sided angular density: /(4 pi)
        ratio = (psd.power[band] / (2 * TWO_PI)) / adler.phase_noise_psd(p, w[band])
        assert abs(np.mean(ratio) - 1.0) < 0.15


class TestJitterAndSensitivity:
    def test_jitter_independent_of_detuning(self):
        rates = {adler.jitter_rate(AdlerParams(i_b=ib, d_noise=0.07))[0] for ib in (0.0, 0.5, 0.9)}
        assert rates == {0.07}

    def test_zero_noise_zero_jitter(self):
        assert adler.jitter_rate(AdlerParams(i_b=0.3, d_noise=0.0)) == (0.0, 0.0)

    def test_dimensionful_identity_with_stored_energy(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            mass, om, r0, gamma0, t_eff = rng.uniform(0.1, 10.0, 5)
            theta = gamma0 * BOLTZMANN * t_eff / (4 * mass * om**2)
            om_a = rng.uniform(0.01, 1.0)
            p = AdlerParams.from_physical(theta, r0, om_a, om, om)
            _, dimful = adler.jitter_rate(p)
            u0 = stored_energy(mass, om, r0)
            assert dimful == pytest.approx(BOLTZMANN * t_eff / u0 * gamma0, rel=1e-12)

    def test_delta_omega_detuning_cancellation(self):
        theta, r0, t_a = 1e-4, 0.8, 30.0
        vals = []
        for ib in (0.0, 0.5, 0.9):
            for om_a in (0.2, 0.7):
                p = AdlerParams.from_physical(theta, r0, om_a, 5.0 + ib * om_a, 5.0)
                vals.append(adler.sync_sensitivity(p, om_a * t_a).delta_omega)
        assert np.allclose(vals, vals[0], rtol=1e-12)

    def test_matches_forced_oscillation_sensitivity(self):
        mass, om_h, r0, gamma0, t_eff, t_a = 2.0, 11.0, 0.4, 0.15, 50.0, 80.0
        theta = gamma0 * BOLTZMANN * t_eff / (4 * mass * om_h**2)
        p = AdlerParams.from_physical(theta, r0, 0.3, om_h + 0.12, om_h)
        sens = adler.sync_sensitivity(p, 0.3 * t_a, omega_h=om_h)
        fo = sigma_fo(gamma0, t_eff, stored_energy(mass, om_h, r0), om_h, t_a)
        assert sens.sigma_relative == pytest.approx(fo.value, rel=1e-12)

    def test_quadrupling_sampling_time_halves_spread(self):
        p = AdlerParams(i_b=0.2, d_noise=0.05)
        a = adler.sync_sensitivity(p, 10.0).delta_gamma
        b = adler.sync_sensitivity(p, 40.0).delta_gamma
        assert a == pytest.approx(2 * b, rel=1e-12)


class TestWashboard:
    def test_barrier_at_zero_detuning(self):
        assert adler.washboard(0.0, 0.0).barrier == pytest.approx(2.0, rel=1e-14)

    def test_barrier_matches_numerical_extremization(self):
        ib = 0.5
        g = np.linspace(0.0, TWO_PI, 2_000_001)
        u = -np.cos(g) - ib * g
        expected = float(u.max() - u[: len(g) // 2].min())
        assert adler.washboard(ib, 0.0).barrier == pytest.approx(expected, abs=1e-8)

    def test_barrier_vanishes_at_edge(self):
        assert adler.washboard(1.0 - 1e-12, 0.0).barrier == pytest.approx(0.0, abs=1e-5)

    def test_running_regime_has_no_barrier(self):
        wb = adler.washboard(1.5, 0.3)
        assert wb.barrier is None and wb.kramers_rate is None

    def test_extrema_locations(self):
        wb = adler.washboard(0.5, 0.0, d_noise=0.1)
        assert wb.gamma_min == pytest.approx(math.asin(0.5), rel=1e-14)
        assert wb.gamma_max == pytest.approx(math.pi - math.asin(0.5), rel=1e-14)

    def test_slip_rate_vs_kramers_estimate(self):
        ib = 0.5
        barrier = adler.washboard(ib, 0.0).barrier
        d = barrier / 4.0
        wb = adler.washboard(ib, 0.0, d_noise=d)
        duration = 60000.0
        ts = adler.integrate_adler(AdlerParams(i_b=ib, d_noise=d), math.asin(ib),
                                   duration, 0.01, seed=12)
        rate = adler.count_phase_slips(ts.values, ib) / duration
        assert wb.kramers_rate / 2 <= rate <= wb.kramers_rate * 2
