"""The reduced phase equation  d(gamma)/d(tau) + sin(gamma) = i_b + noise.

Everything here works in the dimensionless time tau = omega_a * t of the
locking problem: exact noiseless solutions, Fourier sidebands, stochastic
paths, linearized noise spectra, jitter, synchronized-detection sensitivity
and Kramers phase-slip rates. Conversion from physical quantities happens
once, in ``AdlerParams.from_physical``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    LockedRegimeError,
    ParameterError,
    StepSizeError,
    UnlockedRegimeError,
)
from .rng import PRNG_ALGORITHM, derive_seed, make_rng
from .timeseries import TimeSeries


@dataclass(frozen=True)
class AdlerParams:
    """Dimensionless locking problem.

    ``i_b`` is the normalized detuning ``(omega_d - Omega_eff)/omega_a``;
    ``d_noise`` the noise intensity D = Theta/(omega_a r0^2) appearing in the
    correlator <i_n i_n> = 2 D delta. ``omega_a`` and ``omega_d`` (rad/s) only
    matter when mapping results back to physical frequencies.
    """

    i_b: float
    d_noise: float = 0.0
    omega_a: float = 1.0
    omega_d: float | None = None

    def __post_init__(self):
        if self.d_noise < 0:
            raise ParameterError("d_noise must be non-negative")
        if self.omega_a <= 0:
            raise ParameterError("omega_a must be positive")

    @classmethod
    def from_physical(
        cls,
        theta_noise: float,
        r0: float,
        omega_a: float,
        omega_d: float,
        omega_eff: float,
    ) -> "AdlerParams":
        """Build from Theta, the limit-cycle amplitude and physical frequencies."""
        if r0 <= 0:
            raise ParameterError("r0 must be positive")
        return cls(
            i_b=(omega_d - omega_eff) / omega_a,
            d_noise=theta_noise / (omega_a * r0**2),
            omega_a=omega_a,
            omega_d=omega_d,
        )


# ---------------------------------------------------------------------------
# noiseless solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StationaryPhase:
    gamma: float
    cos_gamma: float


def stationary_phase(i_b: float) -> StationaryPhase | None:
    """Stable locked phase arcsin(i_b) in [-pi/2, pi/2], or None when running."""
    if abs(i_b) > 1.0:
        return None
    g = math.asin(i_b)
    return StationaryPhase(gamma=g, cos_gamma=math.sqrt(1.0 - i_b**2))


def period(i_b: float) -> float | None:
    """Period 2 pi / sqrt(i_b^2 - 1) of the running phase; None inside the tongue."""
    if abs(i_b) <= 1.0:
        return None
    return 2.0 * math.pi / math.sqrt(i_b**2 - 1.0)


def phase_offset(i_b: float) -> float:
    """Offset atan(1/sqrt(i_b^2 - 1)) aligning d(gamma)/d(tau) with its Fourier comb."""
    if abs(i_b) <= 1.0:
        raise LockedRegimeError("phase offset is defined for |i_b| > 1")
    return math.atan(1.0 / math.sqrt(i_b**2 - 1.0))


def tau_of_gamma(i_b: float, gamma: float) -> float:
    """Time at which the running phase reaches ``gamma`` (principal branch)."""
    if abs(i_b) <= 1.0:
        raise LockedRegimeError("tau(gamma) requires |i_b| > 1")
    s = math.sqrt(i_b**2 - 1.0)
    return (2.0 / s) * math.atan((i_b * math.tan(gamma / 2.0) - 1.0) / s)


def gamma_noiseless(i_b: float, tau):
    """Exact running-phase solution, continued smoothly across branch cuts.

    Within one period the closed form is
    ``2 atan((1 + sqrt(i_b^2-1) tan(pi tau / T_J)) / i_b)``; whole periods add
    ``2 pi sign(i_b)`` each, so gamma is continuous and monotone.
    """
    if abs(i_b) <= 1.0:
        raise LockedRegimeError("gamma(tau) requires |i_b| > 1")
    s = math.sqrt(i_b**2 - 1.0)
    t_j = 2.0 * math.pi / s
    tau = np.asarray(tau, dtype=float)
    wind = np.round(tau / t_j)
    tau_r = tau - wind * t_j  # in [-T_J/2, T_J/2)
    g = 2.0 * np.arctan((1.0 + s * np.tan(np.pi * tau_r / t_j)) / i_b)
    out = g + 2.0 * math.pi * math.copysign(1.0, i_b) * wind
    return float(out) if out.ndim == 0 else out


def fourier_coefficients(i_b: float, k_max: int) -> np.ndarray:
    """Fourier coefficients g_k of d(gamma)/d(tau), k = -k_max .. k_max.

    ``g_k = sign(i_b) sqrt(i_b^2-1) i^k (i_b - sign(i_b) sqrt(i_b^2-1))^|k|``;
    index ``k + k_max`` in the returned array holds g_k. g_0 is the mean
    winding rate.
    """
    if abs(i_b) <= 1.0:
        raise LockedRegimeError("the Fourier comb requires |i_b| > 1")
    if k_max < 0:
        raise ParameterError("k_max must be >= 0")
    s = math.sqrt(i_b**2 - 1.0)
    sg = math.copysign(1.0, i_b)
    k = np.arange(-k_max, k_max + 1)
    return sg * s * (1j) ** k * (i_b - sg * s) ** np.abs(k)


def sideband_amplitudes(i_b: float, n_max: int) -> np.ndarray:
    """Complex comb amplitudes C_n of exp(i gamma(tau)), n = 0 .. n_max.

    The oscillation signal exp(i A_theta) = exp(i gamma) exp(-i omega_d t) is a
    one-sided comb: spectral lines sit at omega_d - n * omega_s only on the
    free-running side of the drive. Writing z = exp(i 2 pi tau / T_J), the
    closed form of exp(i gamma) is the Moebius function (a z + b)/(c z + d)
    with a = i_b + i + s, b = i_b + i - s, c = conj(b), d = conj(a),
    s = sqrt(i_b^2 - 1); its geometric expansion gives C_0 = b/d and
    C_n = (a d - b c)/d^2 * (-c/d)^(n-1). Successive sidebands (n >= 1) decay
    by the same ratio |i_b| - sqrt(i_b^2 - 1) as the g_k comb.
    """
    if abs(i_b) <= 1.0:
        raise LockedRegimeError("sideband amplitudes require |i_b| > 1")
    if n_max < 0:
        raise ParameterError("n_max must be >= 0")
    s = math.sqrt(i_b**2 - 1.0)
    a = i_b + 1j + s
    b = i_b + 1j - s
    c = b.conjugate()
    d = a.conjugate()
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = b / d
    if n_max >= 1:
        lead = (a * d - b * c) / d**2
        ratio = -c / d
        out[1:] = lead * ratio ** np.arange(n_max)
    return out


def sideband_spacing(omega_d: float, omega_eff: float, omega_a: float) -> float | None:
    """Spacing sqrt((omega_d - Omega_eff)^2 - omega_a^2); None strictly inside
    the tongue, zero exactly at its edge."""
    if omega_a <= 0:
        raise ParameterError("omega_a must be positive")
    delta = omega_d - omega_eff
    if abs(delta) < omega_a:
        return None
    return math.sqrt(delta**2 - omega_a**2)


# ---------------------------------------------------------------------------
# stochastic integration
# ---------------------------------------------------------------------------

def _check_step(d_tau: float, i_b: float) -> None:
    if d_tau > 0.01 or d_tau * (abs(i_b) + 1.0) >= 0.1:
        raise StepSizeError(
            f"d_tau = {d_tau:g} violates d_tau <= 0.01 and d_tau*(|i_b|+1) < 0.1"
        )


def integrate_adler(
    params: AdlerParams,
    gamma0_init: float,
    duration_tau: float,
    d_tau: float,
    seed: int = 0,
) -> TimeSeries:
    """Euler-Maruyama path of the phase equation.

    Gaussian increments have variance ``2 d_noise d_tau`` per step. The series
    time base is the dimensionless tau.
    """
    _check_step(d_tau, params.i_b)
    n = int(round(duration_tau / d_tau))
    if n < 1:
        raise ParameterError("duration shorter than one step")
    values = np.empty(n)
    i_b = params.i_b
    g = float(gamma0_init)
    sin = math.sin
    if params.d_noise > 0.0:
        rng = make_rng(seed)
        kicks = rng.standard_normal(n) * math.sqrt(2.0 * params.d_noise * d_tau)
        for k in range(n):
            values[k] = g
            g += d_tau * (i_b - sin(g)) + kicks[k]
    else:
        for k in range(n):
            values[k] = g
            g += d_tau * (i_b - sin(g))
    meta = {"integrator": "euler-maruyama", "prng": PRNG_ALGORITHM, "i_b": i_b}
    return TimeSeries(dt=d_tau, values=values, seed=seed, meta=meta)


def integrate_adler_batch(
    i_b: np.ndarray,
    gamma0_init: np.ndarray,
    duration_tau: float,
    d_tau: float,
    d_noise: float = 0.0,
    seed: int = 0,
) -> np.ndarray:
    """Integrate many detunings side by side; returns gamma of shape (steps, points).

    Noiseless sweeps are deterministic per point. With noise the draws come
    from per-point generators seeded by ``derive_seed(seed, index)``, so each
    column is independent of the grid it is embedded in.
    """
    i_b = np.asarray(i_b, dtype=float)
    _check_step(d_tau, float(np.abs(i_b).max()))
    n = int(round(duration_tau / d_tau))
    g = np.array(np.broadcast_to(np.asarray(gamma0_init, dtype=float), i_b.shape))
    out = np.empty((n, i_b.size))
    if d_noise > 0.0:
        sig = math.sqrt(2.0 * d_noise * d_tau)
        streams = [make_rng(derive_seed(seed, j)) for j in range(i_b.size)]
        kicks = np.column_stack([r.standard_normal(n) for r in streams]) * sig
        for k in range(n):
            out[k] = g
            g = g + d_tau * (i_b - np.sin(g)) + kicks[k]
    else:
        for k in range(n):
            out[k] = g
            g = g + d_tau * (i_b - np.sin(g))
    return out


def count_phase_slips(gamma_values: np.ndarray, i_b: float) -> int:
    """Number of committed 2-pi well changes along a locked-regime path.

    A slip is counted when the phase settles within pi/2 of a neighboring well
    center (hysteresis band rejects jitter across the barrier top).
    """
    sp = stationary_phase(i_b)
    if sp is None:
        raise UnlockedRegimeError("slip counting is defined inside the tongue")
    rel = (np.asarray(gamma_values) - sp.gamma) / (2.0 * math.pi)
    nearest = np.round(rel)
    committed = np.abs(rel - nearest) < 0.25  # within pi/2 of a well center
    wells = nearest[committed]
    if wells.size == 0:
        return 0
    return int(np.count_nonzero(np.diff(wells) != 0))


# ---------------------------------------------------------------------------
# linearized noise analysis (|i_b| < 1)
# ---------------------------------------------------------------------------

def _require_locked(i_b: float) -> float:
    if abs(i_b) >= 1.0:
        raise UnlockedRegimeError(f"|i_b| = {abs(i_b):g} >= 1: not in the locked regime")
    return math.sqrt(1.0 - i_b**2)


def phase_noise_psd(params: AdlerParams, w) -> np.ndarray | float:
    """Lorentzian phase-noise spectrum S(w) = (D/pi) / (1 - i_b^2 + w^2)."""
    _require_locked(params.i_b)
    w = np.asarray(w, dtype=float)
    out = (params.d_noise / math.pi) / (1.0 - params.i_b**2 + w**2)
    return float(out) if out.ndim == 0 else out


def correlation(params: AdlerParams, tau_lag) -> np.ndarray | float:
    """Phase autocorrelation C(tau') = D/sqrt(1-i_b^2) * exp(-sqrt(1-i_b^2)|tau'|)."""
    lam = _require_locked(params.i_b)
    tau_lag = np.asarray(tau_lag, dtype=float)
    out = params.d_noise / lam * np.exp(-lam * np.abs(tau_lag))
    return float(out) if out.ndim == 0 else out


def jitter_rate(params: AdlerParams) -> tuple[float, float]:
    """Jitter rate (dimensionless, dimensionful): gamma_g = D, independent of i_b."""
    return params.d_noise, params.omega_a * params.d_noise


@dataclass(frozen=True)
class SyncSensitivity:
    delta_gamma: float
    responsivity: float
    delta_omega: float
    sigma_relative: float | None = None


def sync_sensitivity(
    params: AdlerParams,
    tau_a: float,
    omega_h: float | None = None,
) -> SyncSensitivity:
    """Frequency-detection figures in the synchronized regime.

    Sampling the locked phase for a duration tau_a gives a phase reading with
    standard deviation ``delta_gamma = sqrt(2 pi S(0) / tau_a)``; the
    responsivity ``R = omega_a sqrt(1 - i_b^2)`` converts it to a frequency
    deviation ``delta_omega = R delta_gamma`` in which the (1 - i_b^2) factors
    cancel. With the oscillation frequency supplied, ``sigma_relative`` is
    delta_omega / omega_h.
    """
    lam2 = 1.0 - params.i_b**2
    _require_locked(params.i_b)
    if tau_a <= 0:
        raise ParameterError("tau_a must be positive")
    s0 = phase_noise_psd(params, 0.0)
    delta_gamma = math.sqrt(2.0 * math.pi * s0 / tau_a)
    responsivity = params.omega_a * math.sqrt(lam2)
    delta_omega = responsivity * delta_gamma
    rel = delta_omega / omega_h if omega_h else None
    return SyncSensitivity(delta_gamma, responsivity, delta_omega, rel)


def locked_frequency_estimate(
    gamma_series: TimeSeries,
    omega_a: float,
    omega_d: float,
    tau_a: float,
) -> tuple[float, float]:
    """Windowed frequency estimates from a simulated locked phase.

    Each disjoint window of length tau_a yields
    ``Omega = omega_d - omega_a sin(mean gamma)``; returns (mean, std) of the
    per-window estimates in the same frequency units as the inputs.
    """
    n_w = int(tau_a / gamma_series.dt)
    if n_w < 1:
        raise ParameterError("window shorter than one sample")
    gamma = np.asarray(gamma_series.values, dtype=float)
    n_windows = len(gamma) // n_w
    if n_windows < 2:
        raise ParameterError("need at least two windows")
    means = gamma[: n_windows * n_w].reshape(n_windows, n_w).mean(axis=1)
    est = omega_d - omega_a * np.sin(means)
    return float(est.mean()), float(est.std(ddof=1))


# ---------------------------------------------------------------------------
# washboard potential and Kramers estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Washboard:
    potential: float
    barrier: float | None
    kramers_rate: float | None
    gamma_min: float | None
    gamma_max: float | None


def washboard(i_b: float, gamma: float, d_noise: float | None = None) -> Washboard:
    """Tilted-washboard potential U(gamma) = -cos(gamma) - i_b gamma.

    Inside the tongue the barrier between the stable minimum arcsin(i_b) and
    the adjacent maximum pi - arcsin(i_b) is
    ``2 sqrt(1-i_b^2) - |i_b| (pi - 2 asin|i_b|)``. The escape rate uses the
    overdamped Kramers form ``sqrt(1-i_b^2)/(2 pi) exp(-barrier/D)``; the
    prefactor is an estimate (order-of-magnitude contract), reported only when
    ``d_noise`` is given and positive.
    """
    u = -math.cos(gamma) - i_b * gamma
    if abs(i_b) >= 1.0:
        return Washboard(u, None, None, None, None)
    ai = math.asin(abs(i_b))
    barrier = 2.0 * math.sqrt(1.0 - i_b**2) - abs(i_b) * (math.pi - 2.0 * ai)
    g_min = math.asin(i_b)
    g_max = math.copysign(math.pi, i_b if i_b != 0 else 1.0) - g_min if i_b != 0 else math.pi
    rate = None
    if d_noise is not None and d_noise > 0.0:
        rate = math.sqrt(1.0 - i_b**2) / (2.0 * math.pi) * math.exp(-barrier / d_noise)
    return Washboard(u, barrier, rate, g_min, g_max)
