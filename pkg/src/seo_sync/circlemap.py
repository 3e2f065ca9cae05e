"""General 1-D phase maps: iteration, fixed points, winding and unlocking.

The map is ``theta_{n+1} = theta_n - alpha + W_a * F(theta_n)`` with F periodic
of period 2 pi. Built-ins: the sine map F = sin(theta) and the quadratic-cap
map ``W_a F = alpha_c (1 - z^2 wrap(theta - theta_c)^2)``, the local normal
form of any map near its tangency. Just past the tangency the phase needs
``N = pi / (z sqrt(alpha_c (alpha - alpha_c)))`` iterations per 2-pi slip, the
square-root law shared by every locking edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import LockedRegimeError, ParameterError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MapSpec:
    """A phase map: detuning per iteration, drive strength, and map function.

    ``kind`` is "sine", "quadratic" or "custom"; the quadratic kind carries
    ``(alpha_c, theta_c, z)`` in ``params``. ``map_fn`` accepts and returns
    numpy arrays.
    """

    alpha: float
    w_a: float
    map_fn: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        if self.w_a < 0:
            raise ParameterError("w_a must be non-negative")

    def step(self, theta):
        return theta - self.alpha + self.w_a * self.map_fn(theta)


def sine_map(alpha: float, w_a: float) -> MapSpec:
    return MapSpec(alpha=alpha, w_a=w_a, map_fn=np.sin, kind="sine")


def quadratic_cap_map(
    alpha: float,
    alpha_c: float,
    theta_c: float = 0.0,
    z: float = 1.0,
    w_a: float = 1.0,
) -> MapSpec:
    """Map with a quadratic cap at theta_c: W_a F = alpha_c (1 - z^2 d^2), d wrapped."""
    if alpha_c <= 0 or z <= 0:
        raise ParameterError("alpha_c and z must be positive")

    def fn(theta):
        d = np.mod(np.asarray(theta, dtype=float) - theta_c + math.pi, TWO_PI) - math.pi
        return (alpha_c / w_a) * (1.0 - z**2 * d**2)

    return MapSpec(alpha=alpha, w_a=w_a, map_fn=fn, kind="quadratic", params=(alpha_c, theta_c, z))


def iterate(spec: MapSpec, theta0: float, n_steps: int) -> np.ndarray:
    """The exact recurrence, unwrapped: returns theta_0 .. theta_{n_steps}."""
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    out = np.empty(n_steps + 1)
    th = float(theta0)
    fn, a, wa = spec.map_fn, spec.alpha, spec.w_a
    for k in range(n_steps):
        out[k] = th
        th = th - a + wa * float(fn(th))
    out[n_steps] = th
    return out


def _map_derivative(spec: MapSpec, theta: float) -> float:
    if spec.kind == "sine":
        return math.cos(theta)
    if spec.kind == "quadratic":
        alpha_c, theta_c, z = spec.params
        d = (theta - theta_c + math.pi) % TWO_PI - math.pi
        return -2.0 * (alpha_c / spec.w_a) * z**2 * d
    h = 1e-6
    return float(spec.map_fn(theta + h) - spec.map_fn(theta - h)) / (2.0 * h)


@dataclass(frozen=True)
class FixedPoint:
    theta: float
    stable: bool


def fixed_point(spec: MapSpec) -> FixedPoint | None:
    """Solve alpha = W_a F(theta*); None when no root exists (running phase).

    Stability flag from |1 + W_a F'(theta*)| < 1. For the sine map the stable
    branch (pi - asin(alpha/W_a) for positive W_a) is returned when it exists;
    the quadratic-cap map returns theta_c + sqrt(1 - alpha/alpha_c)/z. Custom
    maps are bracketed on a grid over [0, 2 pi).
    """
    if spec.kind == "sine":
        if spec.w_a == 0.0 or abs(spec.alpha) > spec.w_a:
            return None
        base = math.asin(spec.alpha / spec.w_a)
        for cand in (math.pi - base, base):
            if abs(1.0 + spec.w_a * _map_derivative(spec, cand)) < 1.0:
                return FixedPoint(theta=cand, stable=True)
        return FixedPoint(theta=base, stable=False)
    if spec.kind == "quadratic":
        alpha_c, theta_c, z = spec.params
        if spec.alpha > alpha_c:
            return None
        th = theta_c + math.sqrt(1.0 - spec.alpha / alpha_c) / z
        stable = abs(1.0 + spec.w_a * _map_derivative(spec, th)) < 1.0
        return FixedPoint(theta=th, stable=stable)

    def resid(th):
        return spec.w_a * float(spec.map_fn(th)) - spec.alpha

    grid = np.linspace(0.0, TWO_PI, 257)
    vals = np.array([resid(t) for t in grid])
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(resid, grid[i], grid[i + 1]))
    if not roots:
        return None
    for th in roots:
        if abs(1.0 + spec.w_a * _map_derivative(spec, th)) < 1.0:
            return FixedPoint(theta=float(th), stable=True)
    return FixedPoint(theta=float(roots[0]), stable=False)


@dataclass(frozen=True)
class WindingResult:
    w: float
    locked_p: int | None = None
    locked_q: int | None = None

    @property
    def locked(self) -> bool:
        return self.locked_p is not None


def _rational_plateau(w: float, tol: float = 1e-6, q_max: int = 16):
    """Continued-fraction convergent p/q (q <= q_max) within tol of w, if any."""
    frac = Fraction(w).limit_denominator(q_max)
    if abs(w - float(frac)) < tol:
        return frac.numerator, frac.denominator
    return None


def winding_number(
    spec: MapSpec,
    theta0: float = 0.0,
    n_transient: int = 1000,
    n_measure: int = 10_000,
) -> WindingResult:
    """Mean phase advance per iteration over 2 pi, after a transient discard.

    Attaches the locked rational p/q when |w - p/q| < 1e-6 with q <= 16.
    """
    if n_measure < 1000:
        raise ParameterError("n_measure must be >= 1000")
    th = float(theta0)
    fn, a, wa = spec.map_fn, spec.alpha, spec.w_a
    for _ in range(n_transient):
        th = th - a + wa * float(fn(th))
    start = th
    for _ in range(n_measure):
        th = th - a + wa * float(fn(th))
    w = (th - start) / (TWO_PI * n_measure)
    plateau = _rational_plateau(w)
    if plateau is None:
        return WindingResult(w=w)
    return WindingResult(w=w, locked_p=plateau[0], locked_q=plateau[1])


def winding_batch(
    spec_factory: Callable[[float], MapSpec],
    alphas: np.ndarray,
    theta0: float = 0.0,
    n_transient: int = 1000,
    n_measure: int = 10_000,
) -> np.ndarray:
    """Winding numbers along a detuning sweep, iterated side by side."""
    alphas = np.asarray(alphas, dtype=float)
    specs = [spec_factory(a) for a in alphas]
    wa = np.array([s.w_a for s in specs])
    fn = specs[0].map_fn
    th = np.full(alphas.shape, float(theta0))
    for _ in range(n_transient):
        th = th - alphas + wa * fn(th)
    start = th.copy()
    for _ in range(n_measure):
        th = th - alphas + wa * fn(th)
    return (th - start) / (TWO_PI * n_measure)


def unlock_time(
    spec: MapSpec,
    alpha: float | None = None,
    omega_d: float | None = None,
) -> tuple[float, float | None]:
    """Iterations per 2-pi slip just past the quadratic-cap tangency.

    ``N = pi / (z sqrt(alpha_c (alpha - alpha_c)))``. With the drive frequency
    supplied, also returns the sideband scale 2 pi / T_LC = omega_d / N.
    """
    if spec.kind != "quadratic":
        raise ParameterError("unlock_time is defined for the quadratic-cap map")
    alpha_c, _, z = spec.params
    a = spec.alpha if alpha is None else alpha
    if a <= alpha_c:
        raise LockedRegimeError(f"alpha = {a:g} <= alpha_c = {alpha_c:g}: still locked")
    n_slip = math.pi / (z * math.sqrt(alpha_c * (a - alpha_c)))
    sideband = omega_d / n_slip if omega_d is not None else None
    return n_slip, sideband


_COMPOSE_GRID = 1 << 12


def compose(spec: MapSpec, p: int, reduce_alpha: bool = True) -> MapSpec:
    """The p-fold iterated map as a new MapSpec.

    The composed recurrence is ``theta -> theta - p alpha + G(theta)`` with
    ``G(theta) = f^(p)(theta) - theta + p alpha`` periodic; G is tabulated on
    4096 points and interpolated with a periodic cubic spline, and the
    effective amplitude is max|G|. With ``reduce_alpha`` the detuning is
    brought to (-pi, pi] by dropping whole turns, which shifts the winding by
    an integer but exposes the fixed points of near-rational locking.
    """
    if p < 1:
        raise ParameterError("p must be >= 1")
    if p == 1:
        return spec
    grid = np.linspace(0.0, TWO_PI, _COMPOSE_GRID + 1)
    th = grid.copy()
    for _ in range(p):
        th = spec.step(th)
    g_tab = th - grid + p * spec.alpha
    g_tab[-1] = g_tab[0]  # enforce exact periodicity at the seam
    w_eff = float(np.max(np.abs(g_tab)))
    alpha_eff = p * spec.alpha
    if reduce_alpha:
        alpha_eff -= TWO_PI * round(alpha_eff / TWO_PI)
    if w_eff == 0.0:
        return MapSpec(alpha=alpha_eff, w_a=0.0, map_fn=lambda t: np.zeros_like(np.asarray(t, dtype=float)), kind="custom")
    spline = CubicSpline(grid, g_tab / w_eff, bc_type="periodic")

    def fn(theta):
        out = spline(np.mod(theta, TWO_PI))
        return out

    return MapSpec(alpha=alpha_eff, w_a=w_eff, map_fn=fn, kind="custom")


def staircase_csv(path, rows) -> None:
    """Write sweep rows ``(alpha, w_a, WindingResult)`` as the staircase CSV."""
    with open(path, "w") as fh:
        fh.write("alpha,w_a,winding,locked_p,locked_q\n")
        for alpha, w_a, res in rows:
            p = "" if res.locked_p is None else str(res.locked_p)
            q = "" if res.locked_q is None else str(res.locked_q)
            fh.write(f"{float(alpha)!r},{float(w_a)!r},{float(res.w)!r},{p},{q}\n")
