"""Strict TOML run configuration.

Unknown keys are rejected anywhere in the file (no silent typo absorption).
Angular frequencies may be written either directly (``omega_*``, rad/s) or as
``*_hz`` / ``freq_hz`` fields that are multiplied by 2 pi at parse time; giving
both forms of the same quantity is an error. All physical quantities are SI.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

TWO_PI = 2.0 * math.pi

SCENARIOS = ("envelope", "full", "adler", "circle-map", "spectrogram", "sensitivity")

# section -> allowed keys
_SCHEMA: dict[str, set[str]] = {
    "": {"scenario", "seed", "output_dir"},
    "cavity": {
        "t_b", "t_a", "t_r", "finesse", "wavelength", "x_r",
        "center_wavelength", "n_eff", "length",
    },
    "thermo": {
        "mass", "omega0", "freq_hz", "gamma0", "gamma2", "beta", "theta",
        "eta", "kappa", "t_eff",
    },
    "drive": {"p0", "eps", "omega_d", "freq_hz"},
    "envelope": {
        "linear_damping", "quadratic_damping", "frequency", "freq_hz",
        "frequency_pull", "noise_intensity", "x0", "omega_a", "omega_a_hz", "xi0",
    },
    "adler": {"i_b", "d_noise", "omega_a", "omega_a_hz", "omega_d", "omega_d_hz"},
    "map": {
        "kind", "alpha", "w_a", "alpha_c", "theta_c", "z",
        "theta0", "n_transient", "n_measure",
    },
    "sim": {
        "duration", "dt", "a0_re", "a0_im", "gamma0_init", "noise_on",
        "x_kick", "discard_fraction",
    },
    "sweep": {"axis", "min", "max", "steps", "scale"},
    "lock": {"p", "q", "winding_tol", "phase_var_tol"},
    "spectrogram": {
        "source", "omega_a", "omega_a_hz", "omega_eff", "omega_eff_hz",
        "d_noise", "d_tau", "segment_len", "n_segments", "overlap", "window",
        "db_floor", "band_hz",
    },
    "sensitivity": {
        "gamma0", "t_eff", "u0", "mass", "r0", "omega0", "freq_hz", "t_a",
        "zeta0", "linear_damping", "quadratic_damping", "i_b", "d_noise",
        "omega_a", "omega_a_hz", "tau_a",
    },
}


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    lo: float
    hi: float
    steps: int
    scale: str = "linear"

    def grid(self):
        import numpy as np

        if self.scale == "log":
            if self.lo <= 0 or self.hi <= 0:
                raise ConfigError("log sweep endpoints must be positive")
            return np.geomspace(self.lo, self.hi, self.steps)
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    seed: int
    output_dir: Path
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)
    overrides: tuple[str, ...] = ()

    def section(self, name: str) -> dict[str, Any]:
        return dict(self.sections.get(name, {}))

    def require(self, name: str) -> dict[str, Any]:
        if name not in self.sections:
            raise ConfigError(f"scenario {self.scenario!r} requires a [{name}] section")
        return dict(self.sections[name])

    def sweep(self) -> SweepSpec | None:
        sw = self.sections.get("sweep")
        if sw is None:
            return None
        try:
            spec = SweepSpec(
                axis=str(sw["axis"]),
                lo=float(sw["min"]),
                hi=float(sw["max"]),
                steps=int(sw["steps"]),
                scale=str(sw.get("scale", "linear")),
            )
        except KeyError as exc:
            raise ConfigError(f"sweep section is missing key {exc}") from exc
        if spec.steps < 1:
            raise ConfigError("sweep.steps must be >= 1")
        if spec.scale not in ("linear", "log"):
            raise ConfigError(f"sweep.scale must be linear or log, got {spec.scale!r}")
        return spec


def _validate_tree(tree: dict[str, Any]) -> None:
    for key, value in tree.items():
        if isinstance(value, dict):
            if key not in _SCHEMA:
                raise ConfigError(f"unknown section [{key}]")
            for sub, subval in value.items():
                if isinstance(subval, dict):
                    raise ConfigError(f"nested tables are not allowed: [{key}.{sub}]")
                if sub not in _SCHEMA[key]:
                    raise ConfigError(f"unknown key {key}.{sub}")
        else:
            if key not in _SCHEMA[""]:
                raise ConfigError(f"unknown top-level key {key!r}")


def _parse_override_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text  # bare strings may come unquoted on the command line


def apply_overrides(tree: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        path = key.strip().split(".")
        value = _parse_override_value(raw.strip())
        node = tree
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a scalar")
        node[path[-1]] = value
    return tree


def load_config(
    path,
    overrides: list[str] | None = None,
    seed_env: str | None = None,
    output_dir: str | None = None,
) -> RunConfig:
    """Parse, override, and validate a run configuration file."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        tree = tomllib.loads(raw.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc

    overrides = list(overrides or [])
    apply_overrides(tree, overrides)
    _validate_tree(tree)

    scenario = tree.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    seed = tree.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    if seed_env is not None:
        try:
            seed = int(seed_env)
        except ValueError as exc:
            raise ConfigError(f"SEO_SYNC_SEED={seed_env!r} is not an integer") from exc

    out = Path(output_dir) if output_dir else Path(tree.get("output_dir", "out"))
    sections = {k: dict(v) for k, v in tree.items() if isinstance(v, dict)}
    return RunConfig(
        scenario=scenario,
        seed=seed,
        output_dir=out,
        sections=sections,
        overrides=tuple(overrides),
    )


def angular(section: dict[str, Any], omega_key: str, hz_key: str, section_name: str,
            required: bool = True) -> float | None:
    """Fetch an angular frequency given either as rad/s or as Hz (x 2 pi)."""
    has_w, has_hz = omega_key in section, hz_key in section
    if has_w and has_hz:
        raise ConfigError(f"give only one of {section_name}.{omega_key} / {section_name}.{hz_key}")
    if has_w:
        return float(section.pop(omega_key))
    if has_hz:
        return TWO_PI * float(section.pop(hz_key))
    if required:
        raise ConfigError(f"{section_name} needs {omega_key} or {hz_key}")
    return None
