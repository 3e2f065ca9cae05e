"""Canonical parameter sets used by the verification suites and examples.

Two desk-scale operating points of the full thermo-mechanical model (mechanical
frequency near 1 Hz so trajectories are cheap), plus the published device
constants for the static checks. The desk sets put the static working point on
the slope of the intensity fringe where the optical anti-damping overcomes the
intrinsic loss, so the oscillator self-excites; the intrinsic quadratic damping
sets the limit-cycle amplitude well inside the fringe.
"""

from __future__ import annotations

import math

from .cavity import CavityParams, ThermoMechParams

TWO_PI = 2.0 * math.pi

# Published device constants (static formulas, sensitivity arithmetic).
DEVICE = {
    "finesse": 2.1,
    "center_wavelength": 1545e-9,
    "n_eff": 1.468,
    "length": 10e-3,
    "freq_hz": 236.4e3,
    "quality_factor": 3800.0,  # omega0 / (2 gamma0)
    "mass": 1.1e-12,
    "t_eff": 77.0,
    "tongue_ratio": 49.6 / 236400.0,  # omega_a / Omega_eff in the locking measurement
    "eps": 0.025,
}


def device_cavity() -> CavityParams:
    """Cavity with the published geometry; transmissions are desk placeholders."""
    return CavityParams(
        t_b=0.2,
        t_a=0.05,
        t_r=0.05,
        finesse=DEVICE["finesse"],
        wavelength=DEVICE["center_wavelength"],
        center_wavelength=DEVICE["center_wavelength"],
        n_eff=DEVICE["n_eff"],
        length=DEVICE["length"],
    )


def device_thermo() -> ThermoMechParams:
    omega0 = TWO_PI * DEVICE["freq_hz"]
    return ThermoMechParams(
        mass=DEVICE["mass"],
        omega0=omega0,
        gamma0=omega0 / (2.0 * DEVICE["quality_factor"]),
        kappa=0.05 * omega0,
        t_eff=DEVICE["t_eff"],
    )


def desk_cavity() -> CavityParams:
    """Unit-wavelength cavity; x_r places the static point on the fringe slope."""
    return CavityParams(
        t_b=0.2, t_a=0.05, t_r=0.05, finesse=2.1, wavelength=1.0, x_r=-0.0105
    )


def consistency_set() -> tuple[CavityParams, ThermoMechParams, float]:
    """Weak-coupling operating point for envelope-versus-full comparisons.

    Small beta/theta and small limit-cycle amplitude keep the beat-mediated
    cross channels of the power modulation negligible, so the reduced phase
    model describes the full dynamics quantitatively.
    Above threshold: Gamma0 ~ -0.048 1/s, r0 ~ 4.9e-4 m, Omega_H ~ 6.282 rad/s.
    """
    cav = desk_cavity()
    tm = ThermoMechParams(
        mass=1.0,
        omega0=TWO_PI,
        gamma0=0.01,
        gamma2=2.0e5,
        beta=0.005,
        theta=1.0,
        eta=1.0,
        kappa=0.25,
        t_eff=77.0,
    )
    return cav, tm, 0.0874


def staircase_set() -> tuple[CavityParams, ThermoMechParams, float]:
    """Strong-coupling operating point for fractional-locking staircases.

    A larger limit cycle and thermal-frequency coupling strengthen the
    beat-mediated channels through which the power modulation entrains the
    oscillator at rational frequency ratios.
    Above threshold: Gamma0 ~ -0.048 1/s, r0 ~ 4.9e-3 m, Omega_H ~ 6.26 rad/s.
    """
    cav = desk_cavity()
    tm = ThermoMechParams(
        mass=1.0,
        omega0=TWO_PI,
        gamma0=0.01,
        gamma2=2.0e3,
        beta=0.1,
        theta=1.0,
        eta=1.0,
        kappa=0.25,
        t_eff=77.0,
    )
    return cav, tm, 0.0874
