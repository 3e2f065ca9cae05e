"""Spectrum-analyzer emulation: Welch PSDs, detuning-sweep spectrograms, peaks.

Power spectral densities use the averaged modified periodogram with density
scaling, so a white noise of variance sigma^2 integrates to sigma^2 and a
unit sinusoid at a bin center integrates to 0.5 over its main lobe (real,
one-sided case). Detrending is disabled so DC lines survive. Spectrogram rows
are expressed in dB relative to the per-spectrogram maximum and clipped at a
floor, matching spectrum-analyzer practice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import signal as sps

from . import adler
from .errors import ParameterError, TooShortSeriesError
from .rng import derive_seed
from .timeseries import TimeSeries


@dataclass(frozen=True)
class PsdEstimate:
    """One power spectral density: strictly increasing bins, density scaling."""

    freqs: np.ndarray
    power: np.ndarray
    window: str
    segments: int
    enbw: float

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def integrated_power(self, f_center: float, halfwidth_bins: int) -> float:
        """Integral of the PSD over f_center +/- halfwidth_bins bins."""
        i = int(np.argmin(np.abs(self.freqs - f_center)))
        lo = max(0, i - halfwidth_bins)
        hi = min(len(self.freqs), i + halfwidth_bins + 1)
        return float(np.sum(self.power[lo:hi]) * self.df)

    def total_power(self) -> float:
        return float(np.sum(self.power) * self.df)


def welch_psd(
    ts: TimeSeries,
    segment_len: int,
    overlap_fraction: float = 0.5,
    window: str = "hann",
) -> PsdEstimate:
    """Averaged modified periodogram of a series.

    One-sided for real input, two-sided (shifted to increasing frequency) for
    complex input. ``segment_len`` must be a power of two no longer than the
    series; overlap_fraction in [0, 0.9].
    """
    n = len(ts.values)
    if segment_len > n:
        raise TooShortSeriesError(f"segment_len {segment_len} exceeds series length {n}")
    if segment_len < 2 or segment_len & (segment_len - 1):
        raise ParameterError(f"segment_len must be a power of two, got {segment_len}")
    if not 0.0 <= overlap_fraction <= 0.9:
        raise ParameterError("overlap_fraction must lie in [0, 0.9]")
    noverlap = int(overlap_fraction * segment_len)
    fs = 1.0 / ts.dt
    is_complex = np.iscomplexobj(ts.values)
    freqs, power = sps.welch(
        ts.values,
        fs=fs,
        window=window,
        nperseg=segment_len,
        noverlap=noverlap,
        detrend=False,
        return_onesided=not is_complex,
        scaling="density",
    )
    if is_complex:
        freqs = np.fft.fftshift(freqs)
        power = np.fft.fftshift(power)
    w = sps.get_window(window, segment_len)
    enbw = segment_len * float(np.sum(w**2)) / float(np.sum(w)) ** 2
    segments = 1 + (n - segment_len) // (segment_len - noverlap)
    return PsdEstimate(freqs=freqs, power=power, window=window, segments=segments, enbw=enbw)


@dataclass(frozen=True)
class Peak:
    freq: float
    power: float
    prominence_db: float


def extract_sidebands(
    psd: PsdEstimate,
    max_peaks: int = 32,
    min_prominence_db: float = 6.0,
) -> list[Peak]:
    """Local PSD maxima above a prominence threshold, sorted by frequency.

    Peak positions are refined by three-point parabolic interpolation in log
    power, which removes most of the bin-quantization bias.
    """
    floor = np.max(psd.power) * 1e-30
    db = 10.0 * np.log10(np.maximum(psd.power, floor))
    idx, props = sps.find_peaks(db, prominence=min_prominence_db)
    if idx.size == 0:
        return []
    order = np.argsort(props["prominences"])[::-1][:max_peaks]
    keep = np.sort(idx[order])
    peaks = []
    for i in keep:
        left, mid, right = db[i - 1], db[i], db[i + 1]
        denom = left - 2.0 * mid + right
        delta = 0.5 * (left - right) / denom if denom != 0.0 else 0.0
        freq = psd.freqs[i] + delta * psd.df
        p_db = mid - 0.25 * (left - right) * delta
        prom = float(props["prominences"][np.flatnonzero(idx == i)[0]])
        peaks.append(Peak(freq=float(freq), power=float(10.0 ** (p_db / 10.0)), prominence_db=prom))
    return peaks


@dataclass(frozen=True)
class Spectrogram:
    """PSD rows (in dB re the global maximum) indexed by normalized detuning."""

    detunings: np.ndarray
    freqs: np.ndarray
    db: np.ndarray
    db_floor: float
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.db.shape != (len(self.detunings), len(self.freqs)):
            raise ParameterError("db matrix shape must be (detunings, freqs)")

    def to_csv(self, path) -> None:
        """Matrix CSV: first row the frequency axis, first column the detunings.

        The corner cell is empty; cells are dB with '%.17g'. A JSON sidecar
        ``<path>.json`` records the analysis configuration.
        """
        path = Path(path)
        with open(path, "w") as fh:
            fh.write("," + ",".join(repr(float(f)) for f in self.freqs) + "\n")
            for d, row in zip(self.detunings, self.db):
                fh.write(f"{float(d)!r}," + ",".join(repr(float(v)) for v in row) + "\n")
        sidecar = dict(self.meta)
        sidecar["db_floor"] = self.db_floor
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))

    @classmethod
    def from_csv(cls, path) -> "Spectrogram":
        path = Path(path)
        with open(path) as fh:
            header = fh.readline().rstrip("\n").split(",")
            freqs = np.array([float(v) for v in header[1:]])
            detunings, rows = [], []
            for line in fh:
                cells = line.rstrip("\n").split(",")
                detunings.append(float(cells[0]))
                rows.append([float(v) for v in cells[1:]])
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        floor = sidecar.pop("db_floor")
        return cls(
            detunings=np.array(detunings),
            freqs=freqs,
            db=np.array(rows),
            db_floor=floor,
            meta=sidecar,
        )

    def single_line_mask(self, cluster_bins: int = 9, rel_floor_db: float | None = None) -> np.ndarray:
        """True for rows whose above-floor bins form one cluster around one line.

        Bins above the (relative) floor are grouped; gaps wider than
        ``cluster_bins`` separate lines. Window sidelobes of a single strong
        line stay inside one cluster.
        """
        floor = self.db_floor if rel_floor_db is None else rel_floor_db
        out = np.empty(len(self.detunings), dtype=bool)
        for i, row in enumerate(self.db):
            above = np.flatnonzero(row > floor + 1e-9)
            if above.size == 0:
                out[i] = False
                continue
            out[i] = bool(np.all(np.diff(above) <= cluster_bins))
        return out


@dataclass(frozen=True)
class AdlerSweepConfig:
    """Per-point recipe for an Adler-source spectrogram sweep.

    Rows are PSDs of the demodulated oscillation signal exp(i gamma), so the
    frequency axis is the offset from the drive, reported in Hz
    (dimensionless Welch frequency times omega_a). Sidebands of row with
    normalized detuning delta = (omega_d - Omega_eff)/Omega_eff appear at
    multiples of the sideband spacing; inside the tongue the row is a single
    clipped line at zero offset.
    """

    omega_a: float
    omega_eff: float
    d_noise: float = 0.0
    d_tau: float = 0.01
    segment_len: int = 1 << 15
    n_segments: int = 12
    overlap: float = 0.5
    window: str = "hann"
    db_floor: float = -60.0
    band_hz: float | None = None
    block: int = 32


def _adler_initial_phase(i_b: float) -> float:
    if abs(i_b) <= 1.0:
        return math.asin(i_b)
    return 2.0 * math.atan(1.0 / i_b)


def adler_power_rows(
    detunings: Sequence[float],
    config: AdlerSweepConfig,
    seed: int = 0,
    seed_offset: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw PSD rows for an Adler-source sweep chunk (before dB normalization).

    Each detuning row simulates the phase gamma and takes the two-sided Welch
    PSD of the demodulated signal exp(i gamma). ``seed_offset`` is the global
    grid index of the first row, so chunked execution reproduces the
    single-process sweep point for point.
    """
    detunings = np.asarray(detunings, dtype=float)
    cfg = config
    noverlap = int(cfg.overlap * cfg.segment_len)
    n_samples = cfg.segment_len + (cfg.n_segments - 1) * (cfg.segment_len - noverlap)
    duration = n_samples * cfg.d_tau
    i_bs = detunings * cfg.omega_eff / cfg.omega_a

    psd_rows = []
    freqs = None
    if cfg.d_noise > 0.0:
        for j, i_b in enumerate(i_bs):
            p = adler.AdlerParams(i_b=float(i_b), d_noise=cfg.d_noise, omega_a=cfg.omega_a)
            ts = adler.integrate_adler(
                p,
                _adler_initial_phase(float(i_b)),
                duration,
                cfg.d_tau,
                seed=derive_seed(seed, seed_offset + j),
            )
            z = ts.with_values(np.exp(1j * ts.values))
            psd = welch_psd(z, cfg.segment_len, cfg.overlap, cfg.window)
            psd_rows.append(psd.power)
            freqs = psd.freqs
    else:
        for lo in range(0, i_bs.size, cfg.block):
            chunk = i_bs[lo : lo + cfg.block]
            g0 = np.array([_adler_initial_phase(float(v)) for v in chunk])
            gammas = adler.integrate_adler_batch(chunk, g0, duration, cfg.d_tau)
            for col in range(chunk.size):
                z = TimeSeries(dt=cfg.d_tau, values=np.exp(1j * gammas[:, col]), seed=seed)
                psd = welch_psd(z, cfg.segment_len, cfg.overlap, cfg.window)
                psd_rows.append(psd.power)
                freqs = psd.freqs
    return freqs, np.vstack(psd_rows)


def assemble_adler_spectrogram(
    detunings: np.ndarray,
    freqs: np.ndarray,
    power: np.ndarray,
    config: AdlerSweepConfig,
    seed: int,
) -> Spectrogram:
    """Convert raw power rows into the dB spectrogram (global-max reference)."""
    cfg = config
    freqs_hz = freqs * cfg.omega_a  # dimensionless tau-frequency -> Hz offset from drive
    if cfg.band_hz is not None:
        keep = np.abs(freqs_hz) <= cfg.band_hz
        freqs_hz = freqs_hz[keep]
        power = power[:, keep]
    ref = power.max()
    db = 10.0 * np.log10(np.maximum(power / ref, 10.0 ** (cfg.db_floor / 10.0)))
    meta = {
        "source": "adler",
        "window": cfg.window,
        "segments": cfg.n_segments,
        "segment_len": cfg.segment_len,
        "overlap": cfg.overlap,
        "seed": int(seed),
        "omega_a": cfg.omega_a,
        "omega_eff": cfg.omega_eff,
        "d_noise": cfg.d_noise,
        "d_tau": cfg.d_tau,
        "frequency_axis": "offset from drive, Hz",
    }
    return Spectrogram(detunings=detunings, freqs=freqs_hz, db=db, db_floor=cfg.db_floor, meta=meta)


def sweep_adler_spectrogram(
    detunings: Sequence[float],
    config: AdlerSweepConfig,
    seed: int = 0,
) -> Spectrogram:
    """Spectrogram of the phase-model oscillation versus normalized detuning."""
    detunings = np.asarray(detunings, dtype=float)
    if detunings.size == 0 or np.any(np.diff(detunings) < 0):
        raise ParameterError("detuning grid must be non-empty and sorted")
    freqs, power = adler_power_rows(detunings, config, seed)
    return assemble_adler_spectrogram(detunings, freqs, power, config, seed)


def sweep_spectrogram(source: str, detunings, config, seed: int = 0) -> Spectrogram:
    """Dispatch a detuning sweep to the chosen simulation recipe.

    ``source`` is "adler", "envelope" or "full"; ``config`` the matching
    per-point configuration (AdlerSweepConfig for the phase model; see
    fulldyn.sweep_full_spectrogram and envelope_sweep for the others).
    """
    if source == "adler":
        return sweep_adler_spectrogram(detunings, config, seed)
    if source == "envelope":
        from .sweeps import sweep_envelope_spectrogram

        return sweep_envelope_spectrogram(detunings, config, seed)
    if source == "full":
        from .sweeps import sweep_full_spectrogram

        return sweep_full_spectrogram(detunings, config, seed)
    raise ParameterError(f"unknown spectrogram source {source!r}")
