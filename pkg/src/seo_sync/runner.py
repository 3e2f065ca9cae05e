"""Scenario execution: build domain objects from a RunConfig, simulate, persist.

Every run writes its artifacts plus a ``manifest.json`` echoing the
configuration, the effective seed, the library version, wall time, and a
SHA-256 hash of every artifact file. Sweep points are dispatched to a process
pool when ``jobs > 1``; each worker integrates a contiguous chunk of the grid
(vectorized where the scenario allows) and results are assembled by index, so
the output is independent of the worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, adler, circlemap, envelope, fulldyn, spectral
from .cavity import CavityParams, ThermoMechParams, envelope_coefficients
from .config import RunConfig, SweepSpec, angular
from .errors import ConfigError
from .rng import PRNG_ALGORITHM
from .timeseries import TimeSeries

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# section -> domain object builders
# ---------------------------------------------------------------------------

def build_cavity(cfg: RunConfig) -> CavityParams:
    sec = cfg.require("cavity")
    try:
        return CavityParams(**sec)
    except TypeError as exc:
        raise ConfigError(f"bad [cavity] section: {exc}") from exc


def build_thermo(cfg: RunConfig) -> ThermoMechParams:
    sec = cfg.require("thermo")
    omega0 = angular(sec, "omega0", "freq_hz", "thermo")
    try:
        return ThermoMechParams(omega0=omega0, **sec)
    except TypeError as exc:
        raise ConfigError(f"bad [thermo] section: {exc}") from exc


def build_drive(cfg: RunConfig) -> fulldyn.DriveProgram:
    sec = cfg.require("drive")
    omega_d = angular(sec, "omega_d", "freq_hz", "drive", required=False) or 0.0
    try:
        return fulldyn.DriveProgram(omega_d=omega_d, **sec)
    except TypeError as exc:
        raise ConfigError(f"bad [drive] section: {exc}") from exc


def build_envelope_coeffs(cfg: RunConfig) -> tuple[envelope.EnvelopeCoefficients, float]:
    """From [envelope] directly, or derived from [cavity]+[thermo]+[drive]."""
    if "envelope" in cfg.sections:
        sec = cfg.section("envelope")
        xi0 = float(sec.pop("xi0", 0.0))
        frequency = angular(sec, "frequency", "freq_hz", "envelope")
        omega_a = angular(sec, "omega_a", "omega_a_hz", "envelope", required=False)
        try:
            coeffs = envelope.EnvelopeCoefficients.from_dynamics(
                frequency=frequency, omega_a=omega_a, **sec
            )
        except TypeError as exc:
            raise ConfigError(f"bad [envelope] section: {exc}") from exc
        if xi0 == 0.0 and coeffs.omega_a and coeffs.r0:
            xi0 = coeffs.omega_a * coeffs.r0
        return coeffs, xi0
    cav, tm, drive = build_cavity(cfg), build_thermo(cfg), build_drive(cfg)
    coeffs = envelope_coefficients(cav, tm, drive.p0, drive.eps * drive.p0)
    xi0 = (coeffs.omega_a or 0.0) * (coeffs.r0 or 0.0)
    return coeffs, xi0


def build_adler(cfg: RunConfig) -> adler.AdlerParams:
    sec = cfg.require("adler")
    omega_a = angular(sec, "omega_a", "omega_a_hz", "adler", required=False) or 1.0
    omega_d = angular(sec, "omega_d", "omega_d_hz", "adler", required=False)
    try:
        return adler.AdlerParams(omega_a=omega_a, omega_d=omega_d, **sec)
    except TypeError as exc:
        raise ConfigError(f"bad [adler] section: {exc}") from exc


def build_map(cfg: RunConfig, alpha: float | None = None) -> circlemap.MapSpec:
    sec = cfg.require("map")
    kind = sec.get("kind", "sine")
    a = float(sec.get("alpha", 0.0)) if alpha is None else alpha
    if kind == "sine":
        return circlemap.sine_map(a, float(sec.get("w_a", 1.0)))
    if kind == "quadratic":
        return circlemap.quadratic_cap_map(
            a,
            alpha_c=float(sec.get("alpha_c", 0.1)),
            theta_c=float(sec.get("theta_c", 0.0)),
            z=float(sec.get("z", 1.0)),
            w_a=float(sec.get("w_a", 1.0)),
        )
    raise ConfigError(f"map.kind must be sine or quadratic, got {kind!r}")


def _sim(cfg: RunConfig) -> dict:
    return cfg.require("sim")


# ---------------------------------------------------------------------------
# pool workers (top-level, picklable)
# ---------------------------------------------------------------------------

def _adler_rows_worker(args):
    detunings, config, seed, offset = args
    return spectral.adler_power_rows(detunings, config, seed, seed_offset=offset)


def _staircase_worker(args):
    cav, tm, p0, eps, omega_chunk, duration, dt, discard, x_kick = args
    return fulldyn.winding_staircase(
        cav, tm, p0, eps, omega_chunk, duration, dt, discard_fraction=discard, x_kick=x_kick
    )


def _chunks(n: int, jobs: int) -> list[slice]:
    jobs = max(1, min(jobs, n))
    bounds = np.linspace(0, n, jobs + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _pool_map(worker, arglist, jobs: int):
    if jobs <= 1 or len(arglist) <= 1:
        return [worker(a) for a in arglist]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, arglist))


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    artifacts: list[Path]
    summary: dict


def _run_envelope(cfg: RunConfig, out: Path, jobs: int) -> RunResult:
    if cfg.sweep() is not None:
        raise ConfigError("scenario envelope does not support [sweep]")
    coeffs, xi0 = build_envelope_coeffs(cfg)
    sim = _sim(cfg)
    a0 = complex(float(sim.get("a0_re", 0.0)), float(sim.get("a0_im", 0.0)))
    drive = None
    if xi0 and coeffs.omega_h is not None:
        drive = (coeffs.omega_h, xi0)
    ts = envelope.integrate_envelope(
        coeffs,
        duration=float(sim["duration"]),
        dt=float(sim["dt"]),
        seed=cfg.seed,
        drive=drive,
        a0=a0 if a0 else complex(coeffs.r0 or 0.0, 0.0),
    )
    path = out / "envelope_a.csv"
    ts.to_csv(path)
    return RunResult([path], {"r0": coeffs.r0, "omega_h": coeffs.omega_h, "samples": len(ts)})


def _run_adler(cfg: RunConfig, out: Path, jobs: int) -> RunResult:
    params = build_adler(cfg)
    sim = _sim(cfg)
    sweep = cfg.sweep()
    if sweep is None:
        g0 = float(sim.get("gamma0_init", 0.0))
        ts = adler.integrate_adler(
            params, g0, float(sim["duration"]), float(sim["dt"]), seed=cfg.seed
        )
        path = out / "gamma.csv"
        ts.to_csv(path)
        return RunResult([path], {"i_b": params.i_b, "samples": len(ts)})
    if sweep.axis != "i_b":
        raise ConfigError("scenario adler sweeps over axis 'i_b' only")
    grid = sweep.grid()
    g0 = np.array([math.asin(v) if abs(v) <= 1 else 2.0 * math.atan(1.0 / v) for v in grid])
    gam = adler.integrate_adler_batch(
        grid, g0, float(sim["duration"]), float(sim["dt"]), d_noise=params.d_noise, seed=cfg.seed
    )
    rate = (gam[-1] - gam[0]) / (float(sim["dt"]) * (gam.shape[0] - 1))
    path = out / "adler_winding.csv"
    with open(path, "w") as fh:
        fh.write("i_b,winding_rate\n")
        for v, r in zip(grid, rate):
            fh.write(f"{float(v)!r},{float(r)!r}\n")
    return RunResult([path], {"points": int(grid.size)})


def _run_full(cfg: RunConfig, out: Path, jobs: int) -> RunResult:
    cav, tm, drive = build_cavity(cfg), build_thermo(cfg), build_drive(cfg)
    sim = _sim(cfg)
    lock = cfg.section("lock")
    p, q = int(lock.get("p", 1)), int(lock.get("q", 1))
    duration, dt = float(sim["duration"]), float(sim["dt"])
    discard = float(sim.get("discard_fraction", 0.25))
    sweep = cfg.sweep()
    if sweep is None:
        eq = fulldyn.equilibrium_state(cav, tm, drive.p0)
        init = fulldyn.FullState(eq.x + float(sim.get("x_kick", 0.0)), 0.0, eq.t_rel)
        ts = fulldyn.integrate_full(
            cav, tm, drive, init, duration, dt,
            seed=cfg.seed, noise_on=bool(sim.get("noise_on", False)),
        )
        x_path = out / "full_x.csv"
        TimeSeries(dt=ts.dt, values=ts.values[:, 0], seed=ts.seed).to_csv(x_path)
        artifacts = [x_path]
        summary: dict = {"samples": len(ts)}
        if drive.eps > 0 and drive.omega_d > 0:
            report = fulldyn.detect_lock(
                ts, drive.omega_d, p, q, discard_fraction=discard, eps=drive.eps,
                winding_tol=float(lock.get("winding_tol", 1e-4)),
                phase_var_tol=float(lock.get("phase_var_tol", (math.pi / 8) ** 2)),
            )
            rpt_path = out / "lock_report.csv"
            fulldyn.lock_reports_to_csv(rpt_path, [report])
            artifacts.append(rpt_path)
            summary.update({"winding": report.winding, "locked": report.locked})
        return RunResult(artifacts, summary)
    if sweep.axis != "omega_d":
        raise ConfigError("scenario full sweeps over axis 'omega_d' only")
    grid = sweep.grid()
    x_kick = float(sim.get("x_kick", 0.0)) or None
    args = [
        (cav, tm, drive.p0, drive.eps, grid[sl], duration, dt, discard, x_kick)
        for sl in _chunks(grid.size, jobs)
    ]
    windings = np.concatenate(_pool_map(_staircase_worker, args, jobs))
    reports = []
    for wd, w in zip(grid, windings):
        target = p / q
        reports.append(
            fulldyn.LockReport(
                omega_d=float(wd), p=p, q=q, winding=float(w),
                locked=abs(w - target) < float(lock.get("winding_tol", 1e-4)),
                mean_freq=float(w * wd), phase_var=math.nan,
                eps=drive.eps, seed=cfg.seed,
            )
        )
    path = out / "lock_report.csv"
    fulldyn.lock_reports_to_csv(path, reports)
    return RunResult([path], {"points": int(grid.size)})


def _run_circle_map(cfg: RunConfig, out: Path, jobs: int) -> RunResult:
    sec = cfg.require("map")
    theta0 = float(sec.get("theta0", 0.0))
    n_tr = int(sec.get("n_transient", 1000))
    n_ms = int(sec.get("n_measure", 10000))
    sweep = cfg.sweep()
    alphas = sweep.grid() if sweep is not None else np.array([float(sec.get("alpha", 0.0))])
    if sweep is not None and sweep.axis != "alpha":
        raise ConfigError("scenario circle-map sweeps over axis 'alpha' only")
    rows = []
    for a in alphas:
        spec = build_map(cfg, alpha=float(a))
        res = circlemap.winding_number(spec, theta0, n_tr, n_ms)
        rows.append((float(a), spec.w_a, res))
    path = out / "staircase.csv"
    circlemap.staircase_csv(path, rows)
    return RunResult([path], {"points": len(rows)})


def _run_spectrogram(cfg: RunConfig, out: Path, jobs: int) -> RunResult:
    sec = cfg.require("spectrogram")
    source = sec.pop("source", "adler")
    sweep = cfg.sweep()
    if sweep is None or sweep.axis != "detuning":
        raise ConfigError("scenario spectrogram needs a [sweep] with axis = 'detuning'")
    grid = sweep.grid()
    if source != "adler":
        raise ConfigError("the CLI drives the adler spectrogram source; envelope/full sweeps "
                          "are library calls (seo_sync.sweeps)")
    omega_a = angular(sec, "omega_a", "omega_a_hz", "spectrogram")
    omega_eff = angular(sec, "omega_eff", "omega_eff_hz", "spectrogram")
    try:
        spcfg = spectral.AdlerSweepConfig(omega_a=omega_a, omega_eff=omega_eff, **sec)
    except TypeError as exc:
        raise ConfigError(f"bad [spectrogram] section: {exc}") from exc
    slices = _chunks(grid.size, jobs)
    args = [(grid[sl], spcfg, cfg.seed, sl.start) for sl in slices]
    parts = _pool_map(_adler_rows_worker, args, jobs)
    freqs = parts[0][0]
    power = np.vstack([p for _, p in parts])
    gram = spectral.assemble_adler_spectrogram(grid, freqs, power, spcfg, cfg.seed)
    path = out / "spectrogram.csv"
    gram.to_csv(path)
    return RunResult(
        [path, path.with_suffix(path.suffix + ".json")],
        {"rows": int(grid.size), "bins": int(gram.freqs.size)},
    )


def _run_sensitivity(cfg: RunConfig, out: Path, jobs: int) -> RunResult:
    sec = cfg.require("sensitivity")
    omega0 = angular(sec, "omega0", "freq_hz", "sensitivity")
    gamma0 = float(sec["gamma0"])
    t_eff = float(sec["t_eff"])
    t_a = float(sec["t_a"])
    if "u0" in sec:
        u0 = float(sec["u0"])
    else:
        u0 = envelope.stored_energy(float(sec["mass"]), omega0, float(sec["r0"]))
    fo = envelope.sigma_fo(gamma0, t_eff, u0, omega0, t_a)
    rows = [
        ("sigma_fo", fo.value),
        ("classical_limit_ok", float(fo.classical_limit_ok)),
        ("u0", u0),
    ]
    if "zeta0" in sec:
        seo = envelope.sigma_seo(
            fo.value, float(sec["zeta0"]),
            float(sec["linear_damping"]), float(sec["quadratic_damping"]),
        )
        rows += [("sigma_seo", seo.value), ("degradation", seo.degradation)]
    if "i_b" in sec:
        omega_a = angular(sec, "omega_a", "omega_a_hz", "sensitivity", required=False) or 1.0
        params = adler.AdlerParams(
            i_b=float(sec["i_b"]), d_noise=float(sec.get("d_noise", 0.0)), omega_a=omega_a
        )
        tau_a = float(sec.get("tau_a", omega_a * t_a))
        sens = adler.sync_sensitivity(params, tau_a, omega_h=omega0)
        rows += [
            ("delta_gamma", sens.delta_gamma),
            ("responsivity", sens.responsivity),
            ("delta_omega", sens.delta_omega),
            ("sigma_sync", sens.sigma_relative if sens.sigma_relative is not None else math.nan),
        ]
    path = out / "sensitivity.csv"
    with open(path, "w") as fh:
        fh.write("quantity,value\n")
        for name, val in rows:
            fh.write(f"{name},{float(val)!r}\n")
    return RunResult([path], dict(rows))


_SCENARIOS = {
    "envelope": _run_envelope,
    "adler": _run_adler,
    "full": _run_full,
    "circle-map": _run_circle_map,
    "spectrogram": _run_spectrogram,
    "sensitivity": _run_sensitivity,
}


def run(cfg: RunConfig, jobs: int | None = None) -> Path:
    """Execute the configured scenario; returns the manifest path."""
    jobs = jobs or os.cpu_count() or 1
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    result = _SCENARIOS[cfg.scenario](cfg, out, jobs)
    wall = time.time() - started

    manifest = {
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "library_version": __version__,
        "prng": PRNG_ALGORITHM,
        "wall_time_s": round(wall, 3),
        "config": cfg.sections,
        "overrides": list(cfg.overrides),
        "summary": _jsonable(result.summary),
        "artifacts": [
            {"path": p.name, "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}
            for p in result.artifacts
        ],
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj
