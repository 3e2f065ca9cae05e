"""Named verification suites behind ``seo-sync verify``.

Four suites: ``analytic`` (closed-form identities, seconds), ``monte-carlo``
(statistical checks of the stochastic integrators), ``crossmodule``
(consistency between the full model, the envelope reduction, the phase
equation and the circle map) and ``squareroot`` (unlocking exponents). Every
check prints one line with the measured value, the expectation, and the
tolerance it was held to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as spi

from . import adler, circlemap, envelope, fulldyn, presets, spectral
from .cavity import envelope_coefficients, fsr, intensity, intensity_derivatives
from .constants import BOLTZMANN
from .envelope import EnvelopeCoefficients
from .errors import SeoSyncError
from .rng import make_rng
from .timeseries import TimeSeries

TWO_PI = 2.0 * math.pi


@dataclass
class CheckResult:
    name: str
    ok: bool
    measured: float
    expected: float
    tolerance: str


def _rel(measured: float, expected: float) -> float:
    return abs(measured - expected) / abs(expected) if expected != 0 else abs(measured)


def _check(name, measured, expected, rel_tol=None, abs_tol=None) -> CheckResult:
    if rel_tol is not None:
        ok = _rel(measured, expected) <= rel_tol
        tol = f"rel {rel_tol:g}"
    else:
        ok = abs(measured - expected) <= abs_tol
        tol = f"abs {abs_tol:g}"
    return CheckResult(name, ok, float(measured), float(expected), tol)


# ---------------------------------------------------------------------------
# analytic
# ---------------------------------------------------------------------------

def _analytic_checks(fast: bool) -> list[CheckResult]:
    out = []
    cav = presets.desk_cavity()

    bp, bm = cav.beta_plus_sq, cav.beta_minus_sq
    out.append(_check("intensity peak value", intensity(cav, cav.x_r),
                      cav.finesse * (1 - bm / bp), rel_tol=1e-12))
    x = np.linspace(-1.0, 1.0, 101)
    out.append(_check("intensity periodicity (lambda/2)",
                      float(np.max(np.abs(intensity(cav, x + cav.wavelength / 2) - intensity(cav, x)))),
                      0.0, abs_tol=1e-12))

    h = cav.wavelength * 1e-6
    eps = np.finfo(float).eps
    worst = 0.0
    for xx in np.linspace(-0.2, 0.2, 41):
        i0, i1, i2 = intensity_derivatives(cav, xx)
        fd1 = (intensity(cav, xx + h) - intensity(cav, xx - h)) / (2 * h)
        # Richardson-extrapolated central difference cancels the oracle's own
        # h^2 truncation, which otherwise dominates on the steep fringe flank
        d2 = lambda hh: (intensity(cav, xx + hh) - 2 * i0 + intensity(cav, xx - hh)) / hh**2
        fd2 = (4.0 * d2(h) - d2(2 * h)) / 3.0
        # rel error outside the roundoff floor of the h^2-scaled difference
        worst = max(
            worst,
            abs(i1 - fd1) / max(abs(fd1), 8 * eps * i0 / h / 1e-6),
            abs(i2 - fd2) / max(abs(fd2), 64 * eps * i0 / h**2 / 1e-6),
        )
    out.append(_check("closed-form derivatives vs finite differences", worst, 0.0, abs_tol=1e-6))

    out.append(_check("free spectral range (device constants)",
                      fsr(presets.device_cavity()), 80e-12, abs_tol=2e-12))

    coeffs = EnvelopeCoefficients.from_dynamics(-1.0, 1.0, TWO_PI)
    out.append(_check("limit-cycle amplitude r0 at Gamma0=-1, Gamma2=1", coeffs.r0, 1.0, rel_tol=1e-14))

    out.append(_check("stationary phase at i_b = 1/2",
                      adler.stationary_phase(0.5).gamma, math.pi / 6, rel_tol=1e-14))
    out.append(_check("running-phase period at i_b = sqrt(2)",
                      adler.period(math.sqrt(2.0)), TWO_PI, rel_tol=1e-12))

    ib = 1.3
    taus = np.linspace(-0.45, 0.45, 21) * adler.period(ib)
    rt = max(abs(adler.tau_of_gamma(ib, adler.gamma_noiseless(ib, t)) - t) for t in taus)
    out.append(_check("gamma(tau) / tau(gamma) round trip", rt, 0.0, abs_tol=1e-10))

    ht = 1e-6
    resid = max(
        abs((adler.gamma_noiseless(ib, t + ht) - adler.gamma_noiseless(ib, t - ht)) / (2 * ht)
            - (ib - math.sin(adler.gamma_noiseless(ib, t))))
        for t in taus
    )
    out.append(_check("phase ODE residual of the closed-form solution", resid, 0.0, abs_tol=1e-6))

    worst = 0.0
    for ib_ in (1.05, 1.5, 3.0):
        g = adler.fourier_coefficients(ib_, 8)
        xg = np.linspace(0.0, TWO_PI, 20001)[:-1]
        v = (ib_**2 - 1) / (ib_ + np.sin(xg))
        for k in range(-8, 9):
            ck = np.mean(v * np.exp(-1j * k * xg))
            worst = max(worst, abs(ck - g[k + 8]))
    out.append(_check("Fourier comb g_k vs quadrature", worst, 0.0, abs_tol=1e-8))

    out.append(_check("sideband spacing at detuning sqrt(2) omega_a",
                      adler.sideband_spacing(1.0 + math.sqrt(2.0), 1.0, 1.0), 1.0, rel_tol=1e-12))
    out.append(_check("published tongue half-width ratio",
                      presets.DEVICE["tongue_ratio"], 2.1e-4, rel_tol=1e-2))

    wb = adler.washboard(0.0, 0.0, d_noise=0.5)
    out.append(_check("washboard barrier at zero detuning", wb.barrier, 2.0, rel_tol=1e-14))
    gg = np.linspace(0, TWO_PI, 400001)
    u = -np.cos(gg) - 0.5 * gg
    num_barrier = float(u.max() - u[: len(gg) // 2].min())
    out.append(_check("washboard barrier vs numerical extremization (i_b=0.5)",
                      adler.washboard(0.5, 0.0).barrier, num_barrier, rel_tol=1e-8))

    theta_n, r0, om_a, t_a, om_h = 2.5e-4, 0.7, 0.35, 50.0, 5.0
    p = adler.AdlerParams.from_physical(theta_n, r0, om_a, om_h + 0.2 * om_a, om_h)
    sens = adler.sync_sensitivity(p, om_a * t_a, omega_h=om_h)
    mass = 1.3
    gamma0 = 0.2
    t_eff = 4.0 * mass * om_h**2 * theta_n / (gamma0 * BOLTZMANN)
    fo = envelope.sigma_fo(gamma0, t_eff, envelope.stored_energy(mass, om_h, r0), om_h, t_a)
    out.append(_check("synchronized sensitivity equals forced-oscillation formula",
                      sens.sigma_relative, fo.value, rel_tol=1e-12))

    gg_, rate = adler.jitter_rate(p)
    u0 = envelope.stored_energy(mass, om_h, r0)
    out.append(_check("dimensionful jitter identity",
                      rate, BOLTZMANN * t_eff / u0 * gamma0, rel_tol=1e-12))

    pl = adler.AdlerParams(i_b=0.6, d_noise=0.01)
    integral, _ = spi.quad(lambda w: adler.phase_noise_psd(pl, w), -np.inf, np.inf)
    out.append(_check("Lorentzian integral equals C(0)", integral,
                      adler.correlation(pl, 0.0), rel_tol=1e-9))

    spec = circlemap.quadratic_cap_map(alpha=0.1 + 1e-4, alpha_c=0.1, z=1.0)
    out.append(_check("unlock-time formula", circlemap.unlock_time(spec)[0],
                      math.pi / math.sqrt(1e-5), rel_tol=1e-12))

    w = circlemap.winding_number(circlemap.sine_map(alpha=0.31, w_a=0.0), n_measure=2000)
    out.append(_check("zero-drive winding is -alpha/2pi", w.w, -0.31 / TWO_PI, rel_tol=1e-9))

    cav2, tm2, p0 = presets.consistency_set()
    c1 = envelope_coefficients(cav2, tm2, p0, x_eval=0.01)
    c2 = envelope_coefficients(cav2, tm2, 2 * p0, x_eval=0.01)
    out.append(_check("pump linearity of the optical damping",
                      (c2.linear_damping - tm2.gamma0) / (c1.linear_damping - tm2.gamma0),
                      2.0, rel_tol=1e-12))
    return out


# ---------------------------------------------------------------------------
# monte-carlo
# ---------------------------------------------------------------------------

def _stationary_mean_square(g0: float, g2: float, theta: float) -> float:
    """Radial quadrature of the stationary envelope density (independent oracle)."""
    def weight(r):
        return r * np.exp(-(g0 * r**2 / 2 + g2 * r**4 / 4) / theta)

    norm, _ = spi.quad(weight, 0, np.inf)
    mom2, _ = spi.quad(lambda r: r**2 * weight(r), 0, np.inf)
    return mom2 / norm


def _monte_carlo_checks(fast: bool) -> list[CheckResult]:
    out = []
    scale = 0.25 if fast else 1.0
    widen = 2.0 if fast else 1.0

    rng = make_rng(11)
    n = int(131072 * scale) + 4096
    noise = TimeSeries(dt=0.5, values=rng.standard_normal(n) * 1.7)
    psd = spectral.welch_psd(noise, 1024, 0.5, "hann")
    out.append(_check("white-noise PSD integral", psd.total_power(), 1.7**2,
                      rel_tol=0.05 * widen))

    coeffs = EnvelopeCoefficients.from_dynamics(0.5, 1.0, TWO_PI, 0.0, 0.2)
    ts = envelope.integrate_envelope(coeffs, duration=4000.0 * scale + 500.0, dt=0.01, seed=3,
                                     a0=0.5 + 0j)
    tail = ts.values[int(0.1 * len(ts)):]
    out.append(_check("envelope mean |A|^2 vs stationary-density quadrature",
                      float(np.mean(np.abs(tail) ** 2)),
                      _stationary_mean_square(0.5, 1.0, 0.2), rel_tol=0.05 * widen))

    p = adler.AdlerParams(i_b=0.5, d_noise=0.005)
    dur = 12000.0 * scale + 2000.0
    ts = adler.integrate_adler(p, math.asin(0.5), dur, 0.01, seed=5)
    gn = ts.values - math.asin(0.5)
    out.append(_check("locked-phase variance vs C(0)", float(np.var(gn)),
                      adler.correlation(p, 0.0), rel_tol=0.10 * widen))

    ib, dd = 0.5, adler.washboard(0.5, 0.0).barrier / 5.0
    wb = adler.washboard(ib, 0.0, d_noise=dd)
    dur = (30000.0 if fast else 120000.0)
    path = adler.integrate_adler(adler.AdlerParams(i_b=ib, d_noise=dd), math.asin(ib),
                                 dur, 0.01, seed=7)
    slips = adler.count_phase_slips(path.values, ib)
    measured_rate = slips / dur
    ok = wb.kramers_rate / 2 <= measured_rate <= wb.kramers_rate * 2 * widen
    res = CheckResult("phase-slip rate vs Kramers estimate", ok, measured_rate,
                      wb.kramers_rate, "factor 2")
    out.append(res)

    # synchronized-detection spread vs the closed-form delta_Omega
    p = adler.AdlerParams(i_b=0.3, d_noise=2e-3, omega_a=0.5, omega_d=5.0 + 0.3 * 0.5)
    tau_a = 60.0
    n_win = 24 if fast else 96
    ts = adler.integrate_adler(p, math.asin(0.3), tau_a * n_win, 0.01, seed=13)
    _, spread = adler.locked_frequency_estimate(ts, p.omega_a, p.omega_d, tau_a)
    pred = adler.sync_sensitivity(p, tau_a).delta_omega
    out.append(_check("locked-phase frequency spread vs formula", spread, pred,
                      rel_tol=0.35 * widen))
    return out


# ---------------------------------------------------------------------------
# crossmodule
# ---------------------------------------------------------------------------

def _crossmodule_checks(fast: bool) -> list[CheckResult]:
    out = []
    cav, tm, p0 = presets.consistency_set()
    coeffs = envelope_coefficients(cav, tm, p0)

    drive = fulldyn.DriveProgram(p0=p0, eps=0.0, omega_d=0.0)
    eq = fulldyn.equilibrium_state(cav, tm, p0)
    init = fulldyn.FullState(eq.x + 0.3 * coeffs.r0, 0.0, eq.t_rel)
    dur = 250.0 if fast else 420.0
    ts = fulldyn.integrate_full(cav, tm, drive, init, dur, 0.005)
    amp, freq = fulldyn.oscillation_stats(ts, discard_fraction=0.6)
    out.append(_check("full-model amplitude vs 2 r0", amp, 2 * coeffs.r0, rel_tol=0.05))
    out.append(_check("full-model frequency vs Omega_H", freq, coeffs.omega_h, rel_tol=1e-3))

    tau_d = 0.05
    ibs = np.linspace(-1.8, 1.8, 13)
    worst = 0.0
    for ib in ibs:
        ts = adler.integrate_adler(adler.AdlerParams(i_b=float(ib)), 0.2, 2500.0 * tau_d, 1e-3)
        strobe = ts.values[:: int(tau_d / 1e-3)]
        w_flow = (strobe[-1] - strobe[200]) / (TWO_PI * (len(strobe) - 201))
        res = circlemap.winding_number(
            circlemap.sine_map(alpha=-tau_d * ib, w_a=tau_d), theta0=0.2 + math.pi,
            n_transient=200, n_measure=2200,
        )
        worst = max(worst, abs(w_flow - res.w))
    out.append(_check("phase-flow strobe vs sine-map winding", worst, 0.0, abs_tol=1e-3))

    cfg = spectral.AdlerSweepConfig(omega_a=1.0, omega_eff=1.0, d_tau=0.01,
                                    segment_len=1 << 14, n_segments=8)
    ib = 1.5
    gram = spectral.sweep_adler_spectrogram([ib], cfg)
    psd = spectral.PsdEstimate(freqs=gram.freqs, power=10 ** (gram.db[0] / 10.0),
                               window="hann", segments=8, enbw=1.5)
    peaks = spectral.extract_sidebands(psd, min_prominence_db=10)
    spacing = TWO_PI * float(np.median(np.diff([pk.freq for pk in peaks])))
    out.append(_check("comb spacing vs sideband formula", spacing,
                      adler.sideband_spacing(1.0 + ib, 1.0, 1.0), rel_tol=0.01))

    omega_h, omega_a = fulldyn.adler_equivalent(cav, tm,
                                                fulldyn.DriveProgram(p0=p0, eps=0.02, omega_d=coeffs.omega_h))
    dr = fulldyn.DriveProgram(p0=p0, eps=0.02, omega_d=omega_h + 0.3 * omega_a)
    init = fulldyn.FullState(eq.x + 0.5 * coeffs.r0, 0.0, eq.t_rel)
    ts = fulldyn.integrate_full(cav, tm, dr, init, 1400.0, 0.008)
    report = fulldyn.detect_lock(ts, dr.omega_d, 1, 1, discard_fraction=0.5)
    out.append(CheckResult("full model locks inside the predicted tongue",
                           report.locked, float(report.winding), 1.0, "winding tol 1e-4"))

    # locking half-width of the full model vs the reduced-model prediction
    lo, hi = 0.5 * omega_a, 2.0 * omega_a
    for _ in range(4):
        probes = np.linspace(lo, hi, 5)[1:-1]
        ws = fulldyn.winding_staircase(cav, tm, p0, 0.02, omega_h + probes,
                                       1600.0, 0.01, discard_fraction=0.5,
                                       x_kick=0.5 * coeffs.r0)
        locked = np.abs(ws - 1.0) < 5e-6
        hi = probes[~locked][0] if (~locked).any() else hi
        lo = probes[locked][-1] if locked.any() else lo
    out.append(_check("full-model locking half-width vs phase-model omega_a",
                      0.5 * (lo + hi), omega_a, rel_tol=0.20))
    return out


# ---------------------------------------------------------------------------
# squareroot
# ---------------------------------------------------------------------------

def _fit_exponent(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def square_root_exponents(fast: bool = False) -> dict[str, float]:
    """Fitted unlocking exponents for the phase flow and both built-in maps."""
    pts = 7 if fast else 11

    eps = np.geomspace(1e-4, 1e-2, pts)
    ibs = 1.0 + eps
    d_tau = 2e-3
    dur = 6.0 * adler.period(float(ibs[0]))
    g0 = np.array([2.0 * math.atan(1.0 / v) for v in ibs])
    g = adler.integrate_adler_batch(ibs, g0, dur, d_tau)
    rates = (g[-1] - g[0]) / (d_tau * (g.shape[0] - 1))
    adler_exp = _fit_exponent(eps, rates / TWO_PI)

    w_a = 0.9
    alphas = w_a + w_a * np.geomspace(1e-4, 1e-2, pts)
    windings = np.abs(
        circlemap.winding_batch(lambda a: circlemap.sine_map(a, w_a), alphas,
                                theta0=0.0, n_transient=200,
                                n_measure=120_000 if not fast else 40_000)
    )
    sine_exp = _fit_exponent(alphas - w_a, windings)

    alpha_c, z = 0.1, 1.0
    alphas = alpha_c + alpha_c * np.geomspace(1e-4, 1e-2, pts)
    windings = np.abs(
        circlemap.winding_batch(
            lambda a: circlemap.quadratic_cap_map(a, alpha_c=alpha_c, z=z),
            alphas, theta0=0.0, n_transient=200,
            n_measure=250_000 if not fast else 80_000,
        )
    )
    quad_exp = _fit_exponent(alphas - alpha_c, windings)

    return {"adler": adler_exp, "sine_map": sine_exp, "quadratic_map": quad_exp}


def _squareroot_checks(fast: bool) -> list[CheckResult]:
    exps = square_root_exponents(fast)
    tol = 0.02 if not fast else 0.04
    return [
        _check(f"unlocking exponent ({name})", e, 0.5, abs_tol=tol)
        for name, e in exps.items()
    ]


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

SUITES: dict[str, Callable[[bool], list[CheckResult]]] = {
    "analytic": _analytic_checks,
    "monte-carlo": _monte_carlo_checks,
    "crossmodule": _crossmodule_checks,
    "squareroot": _squareroot_checks,
}


def run_suite(name: str, fast: bool = False, printer=print) -> bool:
    """Run one suite, print one line per check, return overall pass."""
    if name not in SUITES:
        raise SeoSyncError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    results = SUITES[name](fast)
    all_ok = True
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        printer(f"[{status}] {r.name}: measured={r.measured:.6g} expected={r.expected:.6g} ({r.tolerance})")
        all_ok &= r.ok
    return all_ok
