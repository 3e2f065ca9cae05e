"""Intra-cavity intensity profile and the derived slow-envelope coefficients.

The optical cavity formed between the fiber Bragg grating and the suspended
mirror concentrates an intensity ``P_L * I(x)`` on the mirror, where

    I(x) = F (1 - bm/bp) bp / (1 - cos(4 pi x_D / lambda) + bp)

with ``x_D = x - x_r``, ``bp = (t_b + t_a + t_r)^2 / 8``,
``bm = (t_b - t_a - t_r)^2 / 8`` and ``F`` the finesse. Everything here is a
pure function of the parameters; derivatives are closed-form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import envelope
from .constants import BOLTZMANN
from .errors import DegenerateCavityError, ParameterError, UnsupportedBifurcationError


@dataclass(frozen=True)
class CavityParams:
    """Optical cavity geometry and loss parameters.

    ``t_b``, ``t_a``, ``t_r`` are the per-pass transmission probabilities of
    the Bragg mirror, mirror absorption, and radiation channels. ``wavelength``
    is the laser wavelength and ``x_r`` the mirror displacement at which the
    stored energy peaks. ``center_wavelength``, ``n_eff`` and ``length`` enter
    only the free-spectral-range calculation.
    """

    t_b: float
    t_a: float
    t_r: float
    finesse: float
    wavelength: float
    x_r: float = 0.0
    center_wavelength: float = 1545e-9
    n_eff: float = 1.468
    length: float = 10e-3

    def __post_init__(self):
        for name in ("t_b", "t_a", "t_r"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if self.finesse <= 0:
            raise ParameterError(f"finesse must be positive, got {self.finesse}")
        if self.wavelength <= 0:
            raise ParameterError(f"wavelength must be positive, got {self.wavelength}")
        if self.length <= 0 or self.n_eff <= 0:
            raise ParameterError("length and n_eff must be positive")

    @property
    def beta_plus_sq(self) -> float:
        return (self.t_b + self.t_a + self.t_r) ** 2 / 8.0

    @property
    def beta_minus_sq(self) -> float:
        return (self.t_b - self.t_a - self.t_r) ** 2 / 8.0


@dataclass(frozen=True)
class ThermoMechParams:
    """Mechanical resonator and thermal-balance parameters.

    ``beta`` couples mirror temperature to resonance frequency, ``theta`` to a
    thermal force per unit mass, ``eta`` converts absorbed optical power to
    heating, and ``kappa`` is the thermal decay rate. ``t_eff`` sets the
    thermomechanical noise temperature.
    """

    mass: float
    omega0: float
    gamma0: float
    kappa: float
    t_eff: float
    gamma2: float = 0.0
    beta: float = 0.0
    theta: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        for name in ("mass", "omega0", "gamma0", "kappa", "t_eff"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.gamma2 < 0:
            raise ParameterError("gamma2 must be non-negative")


def _peak_numerator(params: CavityParams) -> float:
    bp = params.beta_plus_sq
    if bp == 0.0:
        raise DegenerateCavityError("all transmission probabilities are zero")
    return params.finesse * (1.0 - params.beta_minus_sq / bp) * bp


def intensity(params: CavityParams, x):
    """Dimensionless intra-cavity intensity I(x); periodic in x with period lambda/2."""
    num = _peak_numerator(params)
    phase = 4.0 * np.pi * (np.asarray(x, dtype=float) - params.x_r) / params.wavelength
    out = num / (1.0 - np.cos(phase) + params.beta_plus_sq)
    return float(out) if np.isscalar(x) else out


def reflection(params: CavityParams, x):
    """Cavity reflection probability R_C = 1 - I(x)/finesse, in [0, 1]."""
    return 1.0 - intensity(params, x) / params.finesse


def intensity_derivatives(params: CavityParams, x: float) -> tuple[float, float, float]:
    """Value, first, and second derivative of I at ``x`` (closed form)."""
    num = _peak_numerator(params)
    u = 4.0 * math.pi / params.wavelength
    psi = u * (x - params.x_r)
    c, s = math.cos(psi), math.sin(psi)
    den = 1.0 - c + params.beta_plus_sq
    i0 = num / den
    i1 = -num * u * s / den**2
    i2 = -num * u**2 * (c * den - 2.0 * s**2) / den**3
    return i0, i1, i2


def fsr(params: CavityParams) -> float:
    """Free spectral range in wavelength units: lambda0^2 / (2 n_eff l)."""
    return params.center_wavelength**2 / (2.0 * params.n_eff * params.length)


def static_displacement(
    cav: CavityParams,
    tm: ThermoMechParams,
    p0: float,
    tol: float = 1e-15,
    max_iter: int = 100,
) -> float:
    """Self-consistent static working point.

    The optically induced static displacement obeys
    ``x = eta theta P0 I(x) / (kappa omega0^2)``; since I depends on x this is
    solved by fixed-point iteration from x = 0. Raises if the iteration has not
    contracted to ``tol`` within ``max_iter`` steps (steep slope regimes).
    """
    c1 = tm.eta * tm.theta * p0 / (tm.kappa * tm.omega0**2)
    x = 0.0
    for _ in range(max_iter):
        x_next = c1 * intensity(cav, x)
        if abs(x_next - x) < tol:
            return x_next
        x = x_next
    raise ParameterError(
        f"static working point did not converge to {tol} within {max_iter} iterations; "
        "the slope feedback is too steep for plain fixed-point iteration"
    )


def envelope_coefficients(
    cav: CavityParams,
    tm: ThermoMechParams,
    p0: float,
    p1: float = 0.0,
    x_eval: float | None = None,
) -> "envelope.EnvelopeCoefficients":
    """Slow-envelope coefficients of the amplitude equation at the working point.

    With I0, I0', I0'' evaluated at ``x_eval`` (default: the self-consistent
    static displacement):

        x0      = eta theta P0 I0 / (kappa omega0^2)
        Gamma0  = gamma0 + eta theta P0 I0'  / (2 omega0^2)
        Gamma2  = gamma2 + eta beta  P0 I0'' / (4 omega0)
        Omega0  = omega0 - eta beta  P0 I0   / kappa
        Omega2  = -eta beta P0 I0'' / kappa
        Theta   = gamma0 k_B T_eff / (4 m omega0^2)

    Above threshold (Gamma0 < 0, Gamma2 > 0) the limit-cycle amplitude
    r0 = sqrt(-Gamma0/Gamma2) exists and the modulation strength
    ``omega_a = eta P1 I0 theta / (Omega0^2 r0)`` is attached; below threshold
    those fields are absent. Gamma0 < 0 with Gamma2 <= 0 is rejected
    (subcritical regime is out of scope).
    """
    if p0 < 0 or p1 < 0:
        raise ParameterError("laser powers must be non-negative")
    if x_eval is None:
        x_eval = static_displacement(cav, tm, p0)
    i0, i1, i2 = intensity_derivatives(cav, x_eval)

    w0 = tm.omega0
    x0 = tm.eta * tm.theta * p0 * i0 / (tm.kappa * w0**2)
    gamma_lin = tm.gamma0 + tm.eta * tm.theta * p0 * i1 / (2.0 * w0**2)
    gamma_quad = tm.gamma2 + tm.eta * tm.beta * p0 * i2 / (4.0 * w0)
    omega_lin = w0 - tm.eta * tm.beta * p0 * i0 / tm.kappa
    omega_pull = -tm.eta * tm.beta * p0 * i2 / tm.kappa
    theta_noise = tm.gamma0 * BOLTZMANN * tm.t_eff / (4.0 * tm.mass * w0**2)

    if gamma_lin < 0 and gamma_quad <= 0:
        raise UnsupportedBifurcationError(
            "negative linear damping with non-positive quadratic damping: "
            "no supercritical limit cycle"
        )

    omega_a = None
    if gamma_lin < 0 and gamma_quad > 0 and p1 > 0:
        r0 = math.sqrt(-gamma_lin / gamma_quad)
        omega_a = abs(tm.eta * p1 * i0 * tm.theta) / (omega_lin**2 * r0)

    return envelope.EnvelopeCoefficients.from_dynamics(
        linear_damping=gamma_lin,
        quadratic_damping=gamma_quad,
        frequency=omega_lin,
        frequency_pull=omega_pull,
        noise_intensity=theta_noise,
        x0=x0,
        omega_a=omega_a,
    )


@dataclass(frozen=True)
class ValidityCheck:
    name: str
    ok: bool
    ratio: float
    description: str


def validity_report(
    cav: CavityParams,
    tm: ThermoMechParams,
    p0: float,
    margin: float = 0.1,
) -> list[ValidityCheck]:
    """Check the separation-of-scales inequalities behind the envelope reduction.

    The reduction assumes ``kappa << omega0`` and
    ``kappa^2/(omega0^3 lambda) << beta/theta << 1/(2 omega0 x0)``. A check
    passes when the small side is below ``margin`` times the large side. Each
    entry reports the actual ratio so the caller can see which inequality fails
    and by how much.
    """
    checks = []
    r = tm.kappa / tm.omega0
    checks.append(ValidityCheck("kappa_ll_omega0", r < margin, r, "kappa << omega0"))
    if tm.theta != 0.0 and tm.beta != 0.0:
        bt = tm.beta / tm.theta
        lhs = tm.kappa**2 / (tm.omega0**3 * cav.wavelength)
        r = lhs / bt
        checks.append(
            ValidityCheck("kappa_sq_ll_beta_theta", r < margin, r, "kappa^2/(omega0^3 lambda) << beta/theta")
        )
        x0 = static_displacement(cav, tm, p0)
        if x0 != 0.0:
            r = bt * 2.0 * tm.omega0 * abs(x0)
            checks.append(
                ValidityCheck("beta_theta_ll_inv_2wx0", r < margin, r, "beta/theta << 1/(2 omega0 x0)")
            )
    return checks
