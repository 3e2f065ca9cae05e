"""Uniformly sampled time series with seed provenance and CSV round-tripping.

CSV layout (one file per series)::

    # dt=<s> seed=<u64> t0=<s> kind=<real|complex>
    <sample>            (real kind: one float per line)
    <re>,<im>           (complex kind)

Floats are written with ``%.17g`` so rereading reproduces the array bit for
bit; the decimal separator is always '.' regardless of locale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class TimeSeries:
    """Uniform samples ``values[k]`` at times ``t0 + k*dt``.

    ``values`` is 1-D (real or complex) for signal series, or shape (n, m) for
    multi-component state trajectories. ``meta`` records provenance (integrator,
    frame, PRNG algorithm); it is not serialized to CSV.
    """

    dt: float
    values: np.ndarray
    seed: int = 0
    t0: float = 0.0
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "values", np.asarray(self.values))
        if len(self.values) < 1:
            raise ParameterError("a time series needs at least one sample")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def duration(self) -> float:
        """Total time span covered, ``n * dt``."""
        return len(self.values) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def kind(self) -> str:
        if self.values.ndim != 1:
            return "state"
        return "complex" if np.iscomplexobj(self.values) else "real"

    def with_values(self, values: np.ndarray, **meta) -> "TimeSeries":
        merged = dict(self.meta)
        merged.update(meta)
        return TimeSeries(self.dt, values, self.seed, self.t0, merged)

    def to_csv(self, path) -> None:
        kind = self.kind
        if kind == "state":
            raise ParameterError("CSV serialization is defined for 1-D real/complex series only")
        lines = [f"# dt={float(self.dt)!r} seed={int(self.seed)} t0={float(self.t0)!r} kind={kind}\n"]
        if kind == "complex":
            lines += [f"{float(v.real)!r},{float(v.imag)!r}\n" for v in self.values]
        else:
            lines += [f"{float(v)!r}\n" for v in self.values]
        Path(path).write_text("".join(lines))

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("# "):
                raise ParameterError(f"{path}: missing '# dt=... seed=... t0=... kind=...' header")
            fields = dict(tok.split("=", 1) for tok in header[2:].split())
            try:
                dt = float(fields["dt"])
                seed = int(fields["seed"])
                t0 = float(fields["t0"])
                kind = fields["kind"]
            except (KeyError, ValueError) as exc:
                raise ParameterError(f"{path}: malformed header: {exc}") from exc
            body = fh.read().split()
        if kind == "complex":
            pairs = [line.split(",") for line in body]
            values = np.array([complex(float(re), float(im)) for re, im in pairs])
        elif kind == "real":
            values = np.array([float(line) for line in body])
        else:
            raise ParameterError(f"{path}: unknown kind {kind!r}")
        return cls(dt=dt, values=values, seed=seed, t0=t0)
