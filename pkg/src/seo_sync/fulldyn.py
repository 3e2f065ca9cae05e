"""The unreduced dynamics: mechanical oscillator coupled to the thermal balance.

Equations of motion (per unit mass, displacement x, relative temperature T_R):

    x'' + 2 gamma0 x' + 2 gamma2 (x - x_s)^2 x' + (omega0 - beta T_R)^2 x = theta T_R
    T_R' = eta P_L(t) I(x) - kappa T_R,     P_L(t) = P0 (1 + eps cos(omega_d t))

where x_s is the static working point. The intrinsic quadratic damping term
uses the displacement from x_s so that its envelope reduction is exactly
``Gamma2 = gamma2 + ...``; it vanishes for gamma2 = 0. The deterministic core
is classical RK4; when noise is on, a Gaussian velocity kick with force
intensity consistent with the envelope noise Theta (two-sided force PSD
4 m gamma0 k_B T_eff) is added after each step, which keeps the noiseless path
exactly RK4-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import hilbert

from .cavity import CavityParams, ThermoMechParams, envelope_coefficients, intensity, static_displacement
from .constants import BOLTZMANN
from .errors import (
    DivergenceError,
    NoOscillationError,
    ParameterError,
    StepSizeError,
    TooShortSeriesError,
)
from .rng import PRNG_ALGORITHM, derive_seed, make_rng
from .timeseries import TimeSeries

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FullState:
    """Mechanical displacement, velocity, and relative mirror temperature."""

    x: float
    v: float
    t_rel: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.v) and math.isfinite(self.t_rel)):
            raise ParameterError("state components must be finite")


@dataclass(frozen=True)
class DriveProgram:
    """Laser power program P_L(t) = p0 (1 + eps cos(omega_d t))."""

    p0: float
    eps: float = 0.0
    omega_d: float = 0.0

    def __post_init__(self):
        if self.p0 < 0:
            raise ParameterError("p0 must be non-negative")
        if not 0.0 <= self.eps < 1.0:
            raise ParameterError("eps must lie in [0, 1)")


def _intensity_closure(cav: CavityParams):
    bp = cav.beta_plus_sq
    num = cav.finesse * (1.0 - cav.beta_minus_sq / bp) * bp
    u = 4.0 * math.pi / cav.wavelength
    x_r = cav.x_r
    cos = math.cos

    def fn(x: float) -> float:
        return num / (1.0 - cos(u * (x - x_r)) + bp)

    return fn


def _check_steps(tm: ThermoMechParams, dt: float) -> None:
    if dt * tm.omega0 >= 0.1:
        raise StepSizeError(f"dt*omega0 = {dt * tm.omega0:.3g} >= 0.1: fast oscillation unresolved")
    if dt * tm.kappa >= 0.1:
        raise StepSizeError(f"dt*kappa = {dt * tm.kappa:.3g} >= 0.1: thermal relaxation unresolved")


def equilibrium_state(cav: CavityParams, tm: ThermoMechParams, p0: float) -> FullState:
    """Static working point: self-consistent displacement and temperature."""
    x_s = static_displacement(cav, tm, p0)
    return FullState(x=x_s, v=0.0, t_rel=tm.eta * p0 * intensity(cav, x_s) / tm.kappa)


def integrate_full(
    cav: CavityParams,
    tm: ThermoMechParams,
    drive: DriveProgram,
    init: FullState,
    duration: float,
    dt: float,
    seed: int = 0,
    noise_on: bool = False,
) -> TimeSeries:
    """RK4 trajectory of the coupled mechanical-thermal system.

    Returns a TimeSeries whose values have shape (n, 3) with columns
    (x, v, T_R). Raises DivergenceError with the approximate failure time if
    the state leaves the finite domain.
    """
    _check_steps(tm, dt)
    n = int(round(duration / dt))
    if n < 1:
        raise ParameterError("duration shorter than one step")

    x_s = static_displacement(cav, tm, drive.p0)
    i_of = _intensity_closure(cav)
    g0, g2 = tm.gamma0, tm.gamma2
    w0, beta, theta = tm.omega0, tm.beta, tm.theta
    eta_, kappa = tm.eta, tm.kappa
    p0, eps, wd = drive.p0, drive.eps, drive.omega_d
    cos = math.cos

    kick = 0.0
    noise = None
    if noise_on:
        # velocity kicks with <F F'> = 4 m gamma0 k_B T_eff delta(t-t'), per unit mass
        kick = math.sqrt(4.0 * g0 * BOLTZMANN * tm.t_eff / tm.mass * dt)
        noise = make_rng(seed).standard_normal(n)

    out = np.empty((n, 3))
    x, v, tr = init.x, init.v, init.t_rel
    t = 0.0
    half = 0.5 * dt

    def accel(x_, v_, tr_):
        w = w0 - beta * tr_
        return -2.0 * g0 * v_ - 2.0 * g2 * (x_ - x_s) ** 2 * v_ - w * w * x_ + theta * tr_

    try:
        for k in range(n):
            out[k, 0] = x
            out[k, 1] = v
            out[k, 2] = tr

            pl1 = p0 * (1.0 + eps * cos(wd * t)) if eps else p0
            pl2 = p0 * (1.0 + eps * cos(wd * (t + half))) if eps else p0
            pl4 = p0 * (1.0 + eps * cos(wd * (t + dt))) if eps else p0

            a1 = accel(x, v, tr)
            q1 = eta_ * pl1 * i_of(x) - kappa * tr

            x2 = x + half * v
            v2 = v + half * a1
            tr2 = tr + half * q1
            a2 = accel(x2, v2, tr2)
            q2 = eta_ * pl2 * i_of(x2) - kappa * tr2

            x3 = x + half * v2
            v3 = v + half * a2
            tr3 = tr + half * q2
            a3 = accel(x3, v3, tr3)
            q3 = eta_ * pl2 * i_of(x3) - kappa * tr3

            x4 = x + dt * v3
            v4 = v + dt * a3
            tr4 = tr + dt * q3
            a4 = accel(x4, v4, tr4)
            q4 = eta_ * pl4 * i_of(x4) - kappa * tr4

            x += dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
            v += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            tr += dt / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
            if noise is not None:
                v += kick * noise[k]
            t += dt

            if k % 256 == 0 and not (math.isfinite(x) and math.isfinite(v) and math.isfinite(tr)):
                raise DivergenceError(t)
    except OverflowError:
        # scalar float math overflows loudly instead of producing inf
        raise DivergenceError(t) from None

    if not (math.isfinite(x) and math.isfinite(v) and math.isfinite(tr)):
        raise DivergenceError(t)

    meta = {
        "integrator": "rk4" + ("+gaussian-kicks" if noise_on else ""),
        "prng": PRNG_ALGORITHM,
        "columns": ("x", "v", "t_rel"),
        "x_static": x_s,
    }
    return TimeSeries(dt=dt, values=out, seed=seed, meta=meta)


def integrate_full_batch(
    cav: CavityParams,
    tm: ThermoMechParams,
    p0: float,
    eps: float,
    omega_ds: np.ndarray,
    duration: float,
    dt: float,
    x_kick: float = 0.0,
) -> np.ndarray:
    """Noiseless RK4 for many drive frequencies side by side; returns x (n, points).

    All points start from the static working point displaced by ``x_kick``.
    """
    _check_steps(tm, dt)
    omega_ds = np.asarray(omega_ds, dtype=float)
    n = int(round(duration / dt))
    x_s = static_displacement(cav, tm, p0)
    bp = cav.beta_plus_sq
    num = cav.finesse * (1.0 - cav.beta_minus_sq / bp) * bp
    u = 4.0 * math.pi / cav.wavelength

    def i_of(xv):
        return num / (1.0 - np.cos(u * (xv - cav.x_r)) + bp)

    g0, g2 = tm.gamma0, tm.gamma2
    w0, beta, theta = tm.omega0, tm.beta, tm.theta
    eta_, kappa = tm.eta, tm.kappa

    x = np.full(omega_ds.shape, x_s + x_kick)
    v = np.zeros_like(x)
    tr = np.full(omega_ds.shape, eta_ * p0 * i_of(x_s) / kappa)
    out = np.empty((n, omega_ds.size))
    half = 0.5 * dt
    t = 0.0

    def accel(x_, v_, tr_):
        w = w0 - beta * tr_
        return -2.0 * g0 * v_ - 2.0 * g2 * (x_ - x_s) ** 2 * v_ - w * w * x_ + theta * tr_

    for k in range(n):
        out[k] = x
        pl1 = p0 * (1.0 + eps * np.cos(omega_ds * t))
        plh = p0 * (1.0 + eps * np.cos(omega_ds * (t + half)))
        pl4 = p0 * (1.0 + eps * np.cos(omega_ds * (t + dt)))

        a1 = accel(x, v, tr)
        q1 = eta_ * pl1 * i_of(x) - kappa * tr
        x2, v2, tr2 = x + half * v, v + half * a1, tr + half * q1
        a2 = accel(x2, v2, tr2)
        q2 = eta_ * plh * i_of(x2) - kappa * tr2
        x3, v3, tr3 = x + half * v2, v + half * a2, tr + half * q2
        a3 = accel(x3, v3, tr3)
        q3 = eta_ * plh * i_of(x3) - kappa * tr3
        x4, v4, tr4 = x + dt * v3, v + dt * a3, tr + dt * q3
        a4 = accel(x4, v4, tr4)
        q4 = eta_ * pl4 * i_of(x4) - kappa * tr4

        x = x + dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        tr = tr + dt / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
        t += dt
    if not np.all(np.isfinite(x)):
        raise DivergenceError(t)
    return out


# ---------------------------------------------------------------------------
# phase extraction and lock detection
# ---------------------------------------------------------------------------

def analytic_phase(x: np.ndarray, trim_fraction: float = 0.02) -> tuple[np.ndarray, np.ndarray, int]:
    """Unwrapped analytic-signal phase and envelope of a real oscillation.

    The FFT-based analytic signal rings at the record edges, so
    ``trim_fraction`` of the samples is dropped on each side; returns
    (phase, envelope, offset-of-first-kept-sample).
    """
    y = np.asarray(x, dtype=float)
    y = y - y.mean()
    a = hilbert(y)
    k = int(trim_fraction * len(y))
    sl = slice(k, len(y) - k if k else None)
    return np.unwrap(np.angle(a[sl])), np.abs(a[sl]), k


@dataclass(frozen=True)
class LockReport:
    """Stroboscopic lock diagnosis of one driven trajectory."""

    omega_d: float
    p: int
    q: int
    winding: float
    locked: bool
    mean_freq: float
    phase_var: float
    eps: float = 0.0
    seed: int = 0


def _strobe_winding(
    x: np.ndarray,
    dt: float,
    omega_d: float,
    discard_fraction: float,
    min_amplitude_ratio: float = 1e-3,
) -> tuple[float, np.ndarray]:
    """Least-squares winding per drive period and the strobed phase samples."""
    n0 = int(discard_fraction * len(x))
    phase, env, _ = analytic_phase(x[n0:])
    if env.size == 0 or np.min(env) < min_amplitude_ratio * np.max(env):
        raise NoOscillationError("oscillation amplitude collapses below 1e-3 of its maximum")
    t = dt * np.arange(phase.size)
    t_d = TWO_PI / omega_d
    n_strobe = int(t[-1] / t_d)
    if n_strobe < 4:
        raise TooShortSeriesError("fewer than four drive periods after transient discard")
    idx = np.arange(n_strobe)
    theta = np.interp(idx * t_d, t, phase)
    c = idx - idx.mean()
    slope = float(c @ theta) / float(c @ c)
    return slope / TWO_PI, theta


def detect_lock(
    trajectory: TimeSeries,
    omega_d: float,
    p: int,
    q: int,
    discard_fraction: float = 0.25,
    winding_tol: float = 1e-4,
    phase_var_tol: float = (math.pi / 8.0) ** 2,
    eps: float = 0.0,
) -> LockReport:
    """Decide p:q locking from the stroboscopic oscillation phase.

    The trajectory must contain at least 200 drive periods after the transient
    discard. ``winding`` is the mean phase advance per drive period over 2 pi
    (the oscillation frequency in units of the drive); the state is locked
    when ``|winding - p/q| < winding_tol`` and the strobe-phase residual
    variance is below ``phase_var_tol``.
    """
    x = trajectory.values[:, 0] if trajectory.values.ndim == 2 else np.asarray(trajectory.values)
    post = trajectory.duration * (1.0 - discard_fraction)
    if post < 200.0 * TWO_PI / omega_d:
        raise TooShortSeriesError(
            f"only {post * omega_d / TWO_PI:.0f} drive periods after discard; need >= 200"
        )
    winding, theta = _strobe_winding(x, trajectory.dt, omega_d, discard_fraction)
    target = p / q
    residual = theta - TWO_PI * target * np.arange(theta.size)
    phase_var = float(np.var(residual))
    locked = abs(winding - target) < winding_tol and phase_var < phase_var_tol
    return LockReport(
        omega_d=omega_d,
        p=p,
        q=q,
        winding=winding,
        locked=locked,
        mean_freq=winding * omega_d,
        phase_var=phase_var,
        eps=eps,
        seed=trajectory.seed,
    )


def lock_reports_to_csv(path, reports) -> None:
    with open(path, "w") as fh:
        fh.write("omega_d,eps,winding,locked,mean_freq,phase_var,seed\n")
        for r in reports:
            fh.write(
                f"{float(r.omega_d)!r},{float(r.eps)!r},{float(r.winding)!r},"
                f"{int(r.locked)},{float(r.mean_freq)!r},{float(r.phase_var)!r},{r.seed}\n"
            )


def winding_staircase(
    cav: CavityParams,
    tm: ThermoMechParams,
    p0: float,
    eps: float,
    omega_ds: np.ndarray,
    duration: float,
    dt: float,
    discard_fraction: float = 0.25,
    x_kick: float | None = None,
) -> np.ndarray:
    """Winding number versus drive frequency (noiseless, batch-integrated)."""
    omega_ds = np.asarray(omega_ds, dtype=float)
    if x_kick is None:
        coeffs = envelope_coefficients(cav, tm, p0)
        x_kick = 0.5 * coeffs.r0 if coeffs.r0 else 1e-3 * cav.wavelength
    xs = integrate_full_batch(cav, tm, p0, eps, omega_ds, duration, dt, x_kick=x_kick)
    return np.array(
        [
            _strobe_winding(xs[:, j], dt, omega_ds[j], discard_fraction)[0]
            for j in range(omega_ds.size)
        ]
    )


def oscillation_stats(trajectory: TimeSeries, discard_fraction: float = 0.25) -> tuple[float, float]:
    """Late-time oscillation amplitude and angular frequency of x(t).

    Amplitude is half the peak-to-peak excursion; frequency comes from the
    mean period between rising zero crossings of the centered displacement.
    """
    x = trajectory.values[:, 0] if trajectory.values.ndim == 2 else np.asarray(trajectory.values)
    tail = x[int(discard_fraction * len(x)) :]
    y = tail - tail.mean()
    amplitude = 0.5 * (y.max() - y.min())
    idx = np.flatnonzero((y[:-1] < 0) & (y[1:] >= 0))
    if idx.size < 2:
        raise NoOscillationError("fewer than two zero crossings in the trajectory tail")
    crossings = (idx - y[idx] / (y[idx + 1] - y[idx])) * trajectory.dt
    return float(amplitude), TWO_PI / float(np.diff(crossings).mean())


def adler_equivalent(
    cav: CavityParams,
    tm: ThermoMechParams,
    drive: DriveProgram,
) -> tuple[float, float]:
    """The (Omega_H, omega_a) pair that maps this drive onto the phase equation.

    The modulation strength uses the rotating-wave projection of the lagged
    thermal force, ``omega_a = eta theta eps p0 I0 / (4 omega0 sqrt(kappa^2 +
    omega_d^2) r0)``, which is what the full model's measured locking
    half-width follows when the beat-mediated cross channels are weak
    (small beta/theta and r0 I0'/I0).
    """
    coeffs = envelope_coefficients(cav, tm, drive.p0)
    if coeffs.r0 is None or coeffs.omega_h is None:
        raise ParameterError("adler_equivalent requires operation above the Hopf threshold")
    x_s = static_displacement(cav, tm, drive.p0)
    i0 = intensity(cav, x_s)
    p1 = drive.eps * drive.p0
    omega_a = (
        tm.eta
        * abs(tm.theta)
        * p1
        * i0
        / (4.0 * tm.omega0 * math.hypot(tm.kappa, drive.omega_d) * coeffs.r0)
    )
    return coeffs.omega_h, omega_a
