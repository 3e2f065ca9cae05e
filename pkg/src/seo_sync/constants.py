"""Physical constants (CODATA 2018)."""

BOLTZMANN = 1.380649e-23
"""Boltzmann constant k_B (J/K)."""

HBAR = 1.054571817e-34
"""Reduced Planck constant (J s)."""
