import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seo_sync import presets
from seo_sync.cavity import (
    CavityParams,
    ThermoMechParams,
    envelope_coefficients,
    fsr,
    intensity,
    intensity_derivatives,
    reflection,
    static_displacement,
    validity_report,
)
from seo_sync.constants import BOLTZMANN
from seo_sync.errors import DegenerateCavityError, ParameterError, UnsupportedBifurcationError

TWO_PI = 2.0 * math.pi


def make_cavity(**kw):
    defaults = dict(t_b=0.2, t_a=0.05, t_r=0.05, finesse=2.1, wavelength=1.0)
    defaults.update(kw)
    return CavityParams(**defaults)


def make_thermo(**kw):
    defaults = dict(mass=1.0, omega0=TWO_PI, gamma0=0.01, kappa=0.25, t_eff=77.0)
    defaults.update(kw)
    return ThermoMechParams(**defaults)


class TestIntensity:
    def test_peak_value_at_reference_point(self):
        cav = make_cavity()
        bp, bm = cav.beta_plus_sq, cav.beta_minus_sq
        assert intensity(cav, cav.x_r) == pytest.approx(cav.finesse * (1 - bm / bp), rel=1e-14)

    def test_lossless_mirror_symmetry_gives_zero(self):
        cav = make_cavity(t_a=0.0, t_r=0.0)
        x = np.linspace(-1, 1, 57)
        assert np.max(np.abs(intensity(cav, x))) == 0.0

    def test_eighth_wavelength_value_against_direct_evaluation(self):
        # independent re-derivation: beta_pm from the transmissions, then the
        # profile formula evaluated with plain floats at x_D = lambda/8
        cav = make_cavity()
        bp = (0.2 + 0.05 + 0.05) ** 2 / 8
        bm = (0.2 - 0.05 - 0.05) ** 2 / 8
        expected = 2.1 * (1 - bm / bp) * bp / (1 - math.cos(math.pi / 2) + bp)
        assert intensity(cav, cav.wavelength / 8) == pytest.approx(expected, rel=1e-14)

    def test_degenerate_cavity_rejected(self):
        cav = make_cavity(t_b=0.0, t_a=0.0, t_r=0.0)
        with pytest.raises(DegenerateCavityError):
            intensity(cav, 0.0)

    def test_periodicity_half_wavelength(self):
        cav = make_cavity(x_r=0.123)
        x = np.linspace(-2, 2, 401)
        assert np.max(np.abs(intensity(cav, x + 0.5) - intensity(cav, x))) < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(
        t_b=st.floats(0.01, 1.0),
        t_a=st.floats(0.0, 1.0),
        t_r=st.floats(0.0, 1.0),
        finesse=st.floats(0.1, 100.0),
        x=st.floats(-10.0, 10.0),
    )
    def test_intensity_and_reflection_ranges(self, t_b, t_a, t_r, finesse, x):
        cav = make_cavity(t_b=t_b, t_a=t_a, t_r=t_r, finesse=finesse)
        i = intensity(cav, x)
        r = reflection(cav, x)
        assert -1e-12 <= i <= finesse * (1 + 1e-12)
        assert -1e-12 <= r <= 1 + 1e-12


class TestDerivatives:
    def test_slope_vanishes_at_extrema(self):
        cav = make_cavity()
        for x in (0.0, 0.25):  # maximum and minimum of the fringe
            _, i1, _ = intensity_derivatives(cav, x)
            assert abs(i1) < 1e-10

    def test_matches_central_finite_differences(self):
        # rel 1e-6 away from the roundoff floor of the h^2-scaled difference;
        # the second-derivative oracle is Richardson extrapolated so its own
        # truncation does not dominate on the steep fringe flank
        cav = make_cavity()
        h = cav.wavelength * 1e-6
        eps = np.finfo(float).eps
        for x in np.linspace(-0.2, 0.2, 41):
            i0, i1, i2 = intensity_derivatives(cav, x)
            fd1 = (intensity(cav, x + h) - intensity(cav, x - h)) / (2 * h)
            d2 = lambda hh: (intensity(cav, x + hh) - 2 * i0 + intensity(cav, x - hh)) / hh**2
            fd2 = (4.0 * d2(h) - d2(2 * h)) / 3.0
            assert i1 == pytest.approx(fd1, rel=1e-6, abs=8 * eps * i0 / h)
            assert i2 == pytest.approx(fd2, rel=1e-6, abs=32 * eps * i0 / h**2)


class TestFsr:
    def test_device_value_near_80_pm(self):
        assert fsr(presets.device_cavity()) == pytest.approx(80e-12, abs=2e-12)

    def test_halves_when_length_doubles(self):
        a = make_cavity(length=0.01)
        b = make_cavity(length=0.02)
        assert fsr(a) == pytest.approx(2 * fsr(b), rel=1e-14)

    def test_unit_case(self):
        cav = make_cavity(center_wavelength=1.0, n_eff=1.0, length=0.5)
        assert fsr(cav) == pytest.approx(1.0, rel=1e-14)


class TestEnvelopeCoefficients:
    def test_zero_absorption_decouples_optics(self):
        cav = make_cavity()
        tm = make_thermo(eta=0.0, gamma2=3.0, beta=0.1, theta=1.0)
        c = envelope_coefficients(cav, tm, p0=0.5, x_eval=0.01)
        assert c.x0 == 0.0
        assert c.linear_damping == tm.gamma0
        assert c.quadratic_damping == tm.gamma2
        assert c.frequency == tm.omega0
        assert c.frequency_pull == 0.0

    def test_noise_intensity_spreadsheet_arithmetic(self):
        # device values: omega0 = 2*pi*236.4 kHz, Q = 3800, m = 1.1e-12 kg, T = 77 K
        omega0 = 2 * math.pi * 236.4e3
        gamma0 = omega0 / (2 * 3800.0)
        expected = gamma0 * BOLTZMANN * 77.0 / (4 * 1.1e-12 * omega0**2)
        tm = ThermoMechParams(mass=1.1e-12, omega0=omega0, gamma0=gamma0,
                              kappa=0.05 * omega0, t_eff=77.0)
        c = envelope_coefficients(make_cavity(), tm, p0=0.0, x_eval=0.0)
        assert c.noise_intensity == pytest.approx(expected, rel=1e-12)

    def test_pump_power_homogeneity(self):
        cav, _, p0 = presets.consistency_set()
        tm = make_thermo(gamma2=0.0, beta=0.005, theta=1.0, eta=1.0)
        a = envelope_coefficients(cav, tm, p0, x_eval=0.012)
        b = envelope_coefficients(cav, tm, 2 * p0, x_eval=0.012)
        assert b.linear_damping - tm.gamma0 == pytest.approx(2 * (a.linear_damping - tm.gamma0), rel=1e-12)
        assert b.quadratic_damping - tm.gamma2 == pytest.approx(2 * (a.quadratic_damping - tm.gamma2), rel=1e-12)
        assert tm.omega0 - b.frequency == pytest.approx(2 * (tm.omega0 - a.frequency), rel=1e-12)
        assert b.frequency_pull == pytest.approx(2 * a.frequency_pull, rel=1e-12)
        assert b.x0 == pytest.approx(2 * a.x0, rel=1e-12)

    def test_subcritical_regime_rejected(self):
        cav, tm, p0 = presets.consistency_set()
        tm_sub = make_thermo(gamma0=tm.gamma0, gamma2=0.0, beta=-0.005, theta=1.0,
                             eta=1.0, kappa=0.25)
        with pytest.raises(UnsupportedBifurcationError):
            envelope_coefficients(cav, tm_sub, p0)

    def test_above_threshold_fields(self):
        cav, tm, p0 = presets.consistency_set()
        c = envelope_coefficients(cav, tm, p0, p1=0.05 * p0)
        assert c.r0 is not None and c.r0 > 0
        assert c.r0**2 == pytest.approx(-c.linear_damping / c.quadratic_damping, rel=1e-12)
        assert c.omega_h == pytest.approx(c.frequency + c.frequency_pull * c.r0**2, rel=1e-12)
        assert c.zeta0 == pytest.approx(2 * c.frequency_pull * c.r0, rel=1e-12)
        assert c.omega_a is not None and c.omega_a > 0

    def test_below_threshold_fields_absent(self):
        c = envelope_coefficients(make_cavity(), make_thermo(), p0=0.0, x_eval=0.0)
        assert c.r0 is None and c.omega_h is None and c.zeta0 is None and c.omega_a is None


class TestStaticPoint:
    def test_self_consistency(self):
        cav, tm, p0 = presets.consistency_set()
        x0 = static_displacement(cav, tm, p0)
        c1 = tm.eta * tm.theta * p0 / (tm.kappa * tm.omega0**2)
        assert x0 == pytest.approx(c1 * intensity(cav, x0), abs=1e-14)

    def test_validity_report_passes_for_preset(self):
        cav, tm, p0 = presets.consistency_set()
        checks = validity_report(cav, tm, p0)
        assert len(checks) == 3
        assert all(c.ok for c in checks)

    def test_validity_report_flags_failure(self):
        cav, tm, p0 = presets.consistency_set()
        bad = make_thermo(kappa=5.0, beta=tm.beta, theta=tm.theta, eta=tm.eta,
                          gamma2=tm.gamma2)
        checks = {c.name: c for c in validity_report(cav, bad, p0)}
        assert not checks["kappa_ll_omega0"].ok


class TestValidation:
    def test_transmission_range_enforced(self):
        with pytest.raises(ParameterError):
            make_cavity(t_b=1.5)

    def test_positive_rates_enforced(self):
        with pytest.raises(ParameterError):
            make_thermo(gamma0=-1.0)
