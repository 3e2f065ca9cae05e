"""Spectrogram sweeps driven by the envelope and full-dynamics simulators.

These are the slower companions to the Adler-source sweep in
:mod:`seo_sync.spectral`: one trajectory per detuning row, with per-row seeds
derived from the sweep seed so rows are independent of grid placement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .cavity import CavityParams, ThermoMechParams
from .envelope import EnvelopeCoefficients, integrate_envelope
from .errors import ParameterError
from .fulldyn import DriveProgram, FullState, equilibrium_state, integrate_full
from .rng import derive_seed
from .timeseries import TimeSeries


@dataclass(frozen=True)
class EnvelopeSweepConfig:
    """Envelope-source rows: PSD of the rotating-frame amplitude A(t).

    The drive for a row at normalized detuning ``delta`` sits at
    ``omega_d = omega_h (1 + delta)``; the frequency axis is the
    rotating-frame frequency in Hz (shared by all rows).
    """

    coeffs: EnvelopeCoefficients
    xi0: float
    dt: float
    segment_len: int = 1 << 12
    n_segments: int = 8
    overlap: float = 0.5
    window: str = "hann"
    db_floor: float = -60.0
    discard_fraction: float = 0.25
    a0: complex = 0j


def sweep_envelope_spectrogram(detunings, config: EnvelopeSweepConfig, seed: int = 0) -> spectral.Spectrogram:
    cfg = config
    if cfg.coeffs.omega_h is None:
        raise ParameterError("envelope sweep requires above-threshold coefficients")
    detunings = np.asarray(detunings, dtype=float)
    noverlap = int(cfg.overlap * cfg.segment_len)
    n_needed = cfg.segment_len + (cfg.n_segments - 1) * (cfg.segment_len - noverlap)
    duration = n_needed * cfg.dt / (1.0 - cfg.discard_fraction)
    a0 = cfg.a0 if cfg.a0 else complex(cfg.coeffs.r0 or 1e-6, 0.0)

    rows, freqs = [], None
    for j, delta in enumerate(detunings):
        omega_d = cfg.coeffs.omega_h * (1.0 + delta)
        ts = integrate_envelope(
            cfg.coeffs,
            duration,
            cfg.dt,
            seed=derive_seed(seed, j),
            drive=(omega_d, cfg.xi0),
            a0=a0,
        )
        tail = ts.values[int(cfg.discard_fraction * len(ts.values)) :][:n_needed]
        psd = spectral.welch_psd(
            TimeSeries(dt=cfg.dt, values=tail, seed=ts.seed), cfg.segment_len, cfg.overlap, cfg.window
        )
        rows.append(psd.power)
        freqs = psd.freqs
    power = np.vstack(rows)
    ref = power.max()
    db = 10.0 * np.log10(np.maximum(power / ref, 10.0 ** (cfg.db_floor / 10.0)))
    meta = {
        "source": "envelope",
        "window": cfg.window,
        "segments": cfg.n_segments,
        "segment_len": cfg.segment_len,
        "overlap": cfg.overlap,
        "seed": int(seed),
        "frequency_axis": "rotating-frame frequency, Hz",
    }
    return spectral.Spectrogram(detunings=detunings, freqs=freqs, db=db, db_floor=cfg.db_floor, meta=meta)


@dataclass(frozen=True)
class FullSweepConfig:
    """Full-dynamics rows: one-sided PSD of x(t) on an absolute Hz axis."""

    cav: CavityParams
    tm: ThermoMechParams
    p0: float
    eps: float
    omega_center: float
    dt: float
    segment_len: int = 1 << 13
    n_segments: int = 8
    overlap: float = 0.5
    window: str = "hann"
    db_floor: float = -60.0
    discard_fraction: float = 0.25
    noise_on: bool = False
    x_kick: float = 0.0


def sweep_full_spectrogram(detunings, config: FullSweepConfig, seed: int = 0) -> spectral.Spectrogram:
    cfg = config
    detunings = np.asarray(detunings, dtype=float)
    noverlap = int(cfg.overlap * cfg.segment_len)
    n_needed = cfg.segment_len + (cfg.n_segments - 1) * (cfg.segment_len - noverlap)
    duration = n_needed * cfg.dt / (1.0 - cfg.discard_fraction)
    eq = equilibrium_state(cfg.cav, cfg.tm, cfg.p0)
    init = FullState(x=eq.x + cfg.x_kick, v=0.0, t_rel=eq.t_rel)

    rows, freqs = [], None
    for j, delta in enumerate(detunings):
        omega_d = cfg.omega_center * (1.0 + delta)
        ts = integrate_full(
            cfg.cav,
            cfg.tm,
            DriveProgram(p0=cfg.p0, eps=cfg.eps, omega_d=omega_d),
            init,
            duration,
            cfg.dt,
            seed=derive_seed(seed, j),
            noise_on=cfg.noise_on,
        )
        x = ts.values[int(cfg.discard_fraction * len(ts.values)) :, 0][:n_needed]
        x = x - x.mean()
        psd = spectral.welch_psd(
            TimeSeries(dt=cfg.dt, values=x, seed=ts.seed), cfg.segment_len, cfg.overlap, cfg.window
        )
        rows.append(psd.power)
        freqs = psd.freqs
    power = np.vstack(rows)
    ref = power.max()
    db = 10.0 * np.log10(np.maximum(power / ref, 10.0 ** (cfg.db_floor / 10.0)))
    meta = {
        "source": "full",
        "window": cfg.window,
        "segments": cfg.n_segments,
        "segment_len": cfg.segment_len,
        "overlap": cfg.overlap,
        "seed": int(seed),
        "frequency_axis": "absolute frequency, Hz",
    }
    return spectral.Spectrogram(detunings=detunings, freqs=freqs, db=db, db_floor=cfg.db_floor, meta=meta)
