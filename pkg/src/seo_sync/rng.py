"""Deterministic seeding utilities.

All stochastic integrators draw from numpy's PCG64 generator seeded with an
explicit 64-bit seed. Sweep points derive their seed as ``seed ^ splitmix64(i)``
so that extending a sweep grid never reshuffles the streams of existing points.
"""

import numpy as np

PRNG_ALGORITHM = "numpy-PCG64"

_MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(x: int) -> int:
    """One output of the splitmix64 sequence for input ``x`` (64-bit)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(seed: int, index: int) -> int:
    """Per-point seed for sweep element ``index``."""
    return (seed ^ splitmix64(index)) & _MASK64


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & _MASK64)
