"""Stochastic complex-amplitude dynamics and frequency-sensing formulas.

The displacement envelope obeys

    dA/dt + (Gamma0 + Gamma2 |A|^2 + i (Omega0 + Omega2 |A|^2)) A = xi(t) + noise

with complex white noise whose real and imaginary parts each have
autocorrelation ``2 Theta delta(t - t')``. Integration is fixed-step
Euler-Maruyama in the frame co-rotating at Omega0, so the step only has to
resolve the slow rates, not the mechanical frequency. The returned series is
the rotating-frame amplitude; the frame is recorded in the series metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BOLTZMANN, HBAR
from .errors import (
    BelowThresholdError,
    ParameterError,
    PhaseUndefinedError,
    StepSizeError,
    TooShortSeriesError,
)
from .rng import PRNG_ALGORITHM, make_rng
from .timeseries import TimeSeries


@dataclass(frozen=True)
class EnvelopeCoefficients:
    """Coefficients of the slow-envelope equation.

    ``linear_damping`` and ``quadratic_damping`` are Gamma0 (1/s) and Gamma2
    (1/(s m^2)); ``frequency`` and ``frequency_pull`` are Omega0 (rad/s) and
    Omega2 (rad/(s m^2)); ``noise_intensity`` is Theta (m^2/s). Above the Hopf
    threshold (Gamma0 < 0, Gamma2 > 0) the derived fields are present:
    ``r0 = sqrt(-Gamma0/Gamma2)``, ``omega_h = Omega0 + Omega2 r0^2``,
    ``zeta0 = 2 Omega2 r0`` and optionally the modulation strength ``omega_a``.
    Below threshold they are None rather than NaN.
    """

    linear_damping: float
    quadratic_damping: float
    frequency: float
    frequency_pull: float
    noise_intensity: float
    x0: float = 0.0
    r0: float | None = None
    omega_h: float | None = None
    zeta0: float | None = None
    omega_a: float | None = None

    def __post_init__(self):
        if self.noise_intensity < 0:
            raise ParameterError("noise intensity Theta must be non-negative")
        if self.omega_a is not None and self.omega_a < 0:
            raise ParameterError("omega_a must be non-negative")

    @classmethod
    def from_dynamics(
        cls,
        linear_damping: float,
        quadratic_damping: float,
        frequency: float,
        frequency_pull: float = 0.0,
        noise_intensity: float = 0.0,
        x0: float = 0.0,
        omega_a: float | None = None,
    ) -> "EnvelopeCoefficients":
        """Build coefficients, deriving the limit-cycle fields when above threshold."""
        r0 = omega_h = zeta0 = None
        if linear_damping < 0 and quadratic_damping > 0:
            r0 = math.sqrt(-linear_damping / quadratic_damping)
            omega_h = frequency + frequency_pull * r0**2
            zeta0 = 2.0 * frequency_pull * r0
        return cls(
            linear_damping=linear_damping,
            quadratic_damping=quadratic_damping,
            frequency=frequency,
            frequency_pull=frequency_pull,
            noise_intensity=noise_intensity,
            x0=x0,
            r0=r0,
            omega_h=omega_h,
            zeta0=zeta0,
            omega_a=omega_a if r0 is not None else None,
        )

    @property
    def above_threshold(self) -> bool:
        return self.r0 is not None


def integrate_envelope(
    coeffs: EnvelopeCoefficients,
    duration: float,
    dt: float,
    seed: int = 0,
    drive: tuple[float, float] | None = None,
    a0: complex = 0j,
) -> TimeSeries:
    """Euler-Maruyama trajectory of the envelope in the Omega0-rotating frame.

    ``drive`` is an optional ``(omega_d, xi0)`` pair: a forcing
    ``xi0 * exp(-i omega_d t)`` in the lab frame, which appears at the offset
    frequency ``omega_d - Omega0`` in the rotating frame. Noise adds
    independent Gaussian increments of variance ``2 Theta dt`` to the real and
    imaginary parts each step. The step must satisfy
    ``dt * max(|Gamma0|, |omega_d - Omega0|, Gamma2 r0^2, |Omega2| r0^2) < 0.05``.
    """
    if duration < dt:
        raise ParameterError("duration must be at least one step")
    theta = coeffs.noise_intensity
    g0, g2 = coeffs.linear_damping, coeffs.quadratic_damping
    w2 = coeffs.frequency_pull

    rates = [abs(g0)]
    if coeffs.r0 is not None:
        rates += [g2 * coeffs.r0**2, abs(w2) * coeffs.r0**2]
    delta = 0.0
    xi0 = 0.0
    if drive is not None:
        omega_d, xi0 = drive
        delta = omega_d - coeffs.frequency
        rates.append(abs(delta))
    guard = dt * max(rates)
    if guard >= 0.05:
        raise StepSizeError(
            f"dt * max rate = {guard:.3g} >= 0.05; reduce dt for a stable envelope step"
        )

    n = int(round(duration / dt))
    values = np.empty(n, dtype=complex)
    rng = make_rng(seed)
    sigma = math.sqrt(2.0 * theta * dt)
    noise = None
    if theta > 0.0:
        noise = rng.standard_normal(2 * n) * sigma

    a = complex(a0)
    for k in range(n):
        values[k] = a
        r2 = a.real * a.real + a.imag * a.imag
        dadt = -complex(g0 + g2 * r2, w2 * r2) * a
        if xi0:
            t = k * dt
            dadt += xi0 * complex(math.cos(delta * t), -math.sin(delta * t))
        a = a + dt * dadt
        if noise is not None:
            a = a + complex(noise[2 * k], noise[2 * k + 1])

    meta = {
        "frame": "rotating",
        "frame_frequency": coeffs.frequency,
        "integrator": "euler-maruyama",
        "prng": PRNG_ALGORITHM,
    }
    return TimeSeries(dt=dt, values=values, seed=seed, meta=meta)


def to_polar(series: TimeSeries) -> tuple[TimeSeries, TimeSeries]:
    """Split a complex series into amplitude and continuously unwrapped phase.

    Raises PhaseUndefinedError (with the sample index) if any sample is exactly
    zero; the unwrap maps adjacent-sample jumps into (-pi, pi].
    """
    a = series.values
    r = np.abs(a)
    zero = np.flatnonzero(r == 0.0)
    if zero.size:
        raise PhaseUndefinedError(int(zero[0]))
    theta = np.unwrap(np.angle(a))
    return series.with_values(r), series.with_values(theta)


def stored_energy(mass: float, omega0: float, r0: float) -> float:
    """Energy stored in the oscillator at envelope amplitude r0: U0 = 4 m omega0^2 r0^2."""
    if mass <= 0 or omega0 <= 0 or r0 <= 0:
        raise ParameterError("mass, omega0 and r0 must be positive")
    return 4.0 * mass * omega0**2 * r0**2


@dataclass(frozen=True)
class SigmaEstimate:
    """A minimum-detectable relative frequency change, plus context flags."""

    value: float
    classical_limit_ok: bool = True
    degradation: float = 1.0


def sigma_fo(gamma0: float, t_eff: float, u0: float, omega0: float, t_a: float) -> SigmaEstimate:
    """Forced-oscillation sensitivity sigma = sqrt(2 gamma0 k_B T_eff / (U0 omega0^2 t_a)).

    ``classical_limit_ok`` reports whether k_B T_eff exceeds hbar omega0 by at
    least a factor of 10; the formula assumes the classical limit.
    """
    if min(gamma0, t_eff, u0, omega0, t_a) <= 0:
        raise ParameterError("all sigma_fo inputs must be positive")
    value = math.sqrt(2.0 * gamma0 * BOLTZMANN * t_eff / (u0 * omega0**2 * t_a))
    classical = BOLTZMANN * t_eff > 10.0 * HBAR * omega0
    return SigmaEstimate(value=value, classical_limit_ok=classical)


def sigma_seo(
    sigma_fo_value: float,
    zeta0: float,
    linear_damping: float,
    quadratic_damping: float,
) -> SigmaEstimate:
    """Self-excited-oscillation sensitivity.

    The amplitude-frequency coupling zeta0 degrades the forced-oscillation
    figure by ``sqrt(1 + zeta0^2 / (4 |Gamma0| Gamma2))``; requires operation
    above threshold (Gamma0 < 0, Gamma2 > 0).
    """
    if linear_damping >= 0:
        raise BelowThresholdError("sigma_seo requires Gamma0 < 0 (above Hopf threshold)")
    if quadratic_damping <= 0:
        raise ParameterError("sigma_seo requires Gamma2 > 0")
    factor = math.sqrt(1.0 + zeta0**2 / (4.0 * abs(linear_damping) * quadratic_damping))
    return SigmaEstimate(value=sigma_fo_value * factor, degradation=factor)


@dataclass(frozen=True)
class FrequencyEstimate:
    """Windowed frequency estimate: mean, absolute spread, and relative spread."""

    omega: float
    delta_omega: float
    sigma: float
    n_windows: int


def frequency_estimator(theta_series: TimeSeries, t_a: float) -> FrequencyEstimate:
    """Estimate the oscillation frequency and its empirical uncertainty.

    The unwrapped phase is cut into disjoint windows of length ``t_a``; each
    window contributes an ordinary-least-squares slope. With the
    ``exp(-i Omega t)`` phase convention the frequency estimate is minus the
    mean slope; ``sigma`` is the window-to-window standard deviation divided by
    the mean magnitude. Requires at least ten windows.
    """
    if theta_series.duration < 10.0 * t_a:
        raise TooShortSeriesError(
            f"series covers {theta_series.duration:g} s; needs >= 10 * t_a = {10 * t_a:g} s"
        )
    n_w = int(t_a / theta_series.dt)
    if n_w < 2:
        raise ParameterError("averaging window shorter than two samples")
    theta = np.asarray(theta_series.values, dtype=float)
    n_windows = len(theta) // n_w
    t = theta_series.dt * np.arange(n_w)
    t = t - t.mean()
    denom = float(t @ t)
    slopes = np.array(
        [float(t @ theta[i * n_w : (i + 1) * n_w]) / denom for i in range(n_windows)]
    )
    mean_slope = slopes.mean()
    spread = slopes.std(ddof=1) if n_windows > 1 else 0.0
    sigma = spread / abs(mean_slope) if mean_slope != 0.0 else math.inf
    return FrequencyEstimate(
        omega=-mean_slope, delta_omega=spread, sigma=sigma, n_windows=n_windows
    )


def locked_frequency_estimator(
    gamma_series: TimeSeries,
    omega_a: float,
    omega_d: float,
    t_a: float,
) -> FrequencyEstimate:
    """Frequency estimate from the locked relative phase.

    In the synchronized regime the stationary phase obeys
    ``sin(gamma) = (omega_d - Omega) / omega_a``, so each window mean
    ``mean(gamma)`` yields an estimate ``Omega = omega_d - omega_a sin(mean)``.
    Windows of ``t_a`` in the series' own time units; requires >= 10 windows.
    """
    if gamma_series.duration < 10.0 * t_a:
        raise TooShortSeriesError("need at least ten averaging windows")
    n_w = int(t_a / gamma_series.dt)
    if n_w < 1:
        raise ParameterError("averaging window shorter than one sample")
    gamma = np.asarray(gamma_series.values, dtype=float)
    n_windows = len(gamma) // n_w
    means = gamma[: n_windows * n_w].reshape(n_windows, n_w).mean(axis=1)
    estimates = omega_d - omega_a * np.sin(means)
    spread = estimates.std(ddof=1) if n_windows > 1 else 0.0
    mean = float(estimates.mean())
    sigma = spread / abs(mean) if mean != 0.0 else math.inf
    return FrequencyEstimate(omega=mean, delta_omega=float(spread), sigma=sigma, n_windows=n_windows)
