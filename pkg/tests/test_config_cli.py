import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from seo_sync.cli import main
from seo_sync.config import load_config
from seo_sync.errors import ConfigError

ADLER_CFG = """
scenario = "adler"
seed = 11
output_dir = "{out}"

[adler]
i_b = 1.5
d_noise = 0.01
omega_a = 1.0

[sim]
duration = 50.0
dt = 0.01
gamma0_init = 0.0
"""

MAP_CFG = """
scenario = "circle-map"
seed = 3
output_dir = "{out}"

[map]
kind = "sine"
w_a = 0.9
n_transient = 500
n_measure = 2000

[sweep]
axis = "alpha"
min = -1.2
max = 1.2
steps = 9
"""


def write_cfg(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text.format(out=tmp_path / "out"))
    return path


class TestConfigParsing:
    def test_unknown_top_level_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG + "\nbogus = 1\n")
        with pytest.raises(ConfigError, match="bogus"):
            load_config(path)

    def test_unknown_section_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG.replace("d_noise = 0.01", "d_nois = 0.01"))
        with pytest.raises(ConfigError, match="d_nois"):
            load_config(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG + "\n[mystery]\nx = 1\n")
        with pytest.raises(ConfigError, match="mystery"):
            load_config(path)

    def test_scenario_required(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG.replace('scenario = "adler"', ""))
        with pytest.raises(ConfigError, match="scenario"):
            load_config(path)

    def test_override_applied_and_recorded(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG)
        cfg = load_config(path, overrides=["adler.i_b=0.5", "sim.duration=10.0"])
        assert cfg.sections["adler"]["i_b"] == 0.5
        assert cfg.sections["sim"]["duration"] == 10.0
        assert cfg.overrides == ("adler.i_b=0.5", "sim.duration=10.0")

    def test_override_with_unknown_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG)
        with pytest.raises(ConfigError, match="typo"):
            load_config(path, overrides=["adler.typo=1"])

    def test_env_seed_wins(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG)
        cfg = load_config(path, seed_env="4242")
        assert cfg.seed == 4242

    def test_hz_conversion(self, tmp_path):
        text = ADLER_CFG.replace("omega_a = 1.0", "omega_a_hz = 2.0")
        cfg = load_config(write_cfg(tmp_path, text))
        from seo_sync.runner import build_adler

        params = build_adler(cfg)
        assert params.omega_a == pytest.approx(2.0 * 2 * math.pi, rel=1e-14)

    def test_both_frequency_forms_rejected(self, tmp_path):
        text = ADLER_CFG.replace("omega_a = 1.0", "omega_a = 1.0\nomega_a_hz = 2.0")
        cfg = load_config(write_cfg(tmp_path, text))
        from seo_sync.runner import build_adler

        with pytest.raises(ConfigError, match="only one of"):
            build_adler(cfg)


class TestCliRuns:
    def test_adler_run_writes_artifacts_and_manifest(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG)
        assert main(["run", "--config", str(path)]) == 0
        out = tmp_path / "out"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["scenario"] == "adler"
        assert manifest["seed"] == 11
        names = {a["path"] for a in manifest["artifacts"]}
        assert names == {"gamma.csv"}
        import hashlib

        digest = hashlib.sha256((out / "gamma.csv").read_bytes()).hexdigest()
        assert manifest["artifacts"][0]["sha256"] == digest

    def test_rerun_is_byte_identical(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG)
        main(["run", "--config", str(path)])
        first = (tmp_path / "out" / "gamma.csv").read_bytes()
        main(["run", "--config", str(path)])
        assert (tmp_path / "out" / "gamma.csv").read_bytes() == first

    def test_single_point_override_recorded(self, tmp_path):
        path = write_cfg(tmp_path, MAP_CFG)
        code = main(["run", "--config", str(path), "--override", "sweep.steps=1"])
        assert code == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["overrides"] == ["sweep.steps=1"]
        staircase = (tmp_path / "out" / "staircase.csv").read_text().splitlines()
        assert len(staircase) == 2  # header + one point

    def test_circle_map_staircase(self, tmp_path):
        path = write_cfg(tmp_path, MAP_CFG)
        assert main(["run", "--config", str(path)]) == 0
        lines = (tmp_path / "out" / "staircase.csv").read_text().splitlines()
        assert lines[0] == "alpha,w_a,winding,locked_p,locked_q"
        assert len(lines) == 10

    def test_config_error_exit_code(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG + "\nbogus = 1\n")
        assert main(["run", "--config", str(path)]) == 2

    def test_precondition_error_exit_code(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG.replace("dt = 0.01", "dt = 0.5"))
        assert main(["run", "--config", str(path)]) == 3

    def test_env_seed_recorded_in_manifest(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SEO_SYNC_SEED", "777")
        path = write_cfg(tmp_path, ADLER_CFG)
        assert main(["run", "--config", str(path)]) == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["seed"] == 777

    def test_out_flag_overrides_config(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG)
        other = tmp_path / "elsewhere"
        assert main(["run", "--config", str(path), "--out", str(other)]) == 0
        assert (other / "gamma.csv").exists()

    def test_spectrogram_scenario_with_jobs(self, tmp_path):
        cfg = f"""
scenario = "spectrogram"
seed = 5
output_dir = "{tmp_path / 'out'}"

[spectrogram]
source = "adler"
omega_a = 1.0
omega_eff = 100.0
d_tau = 0.01
segment_len = 4096
n_segments = 4
band_hz = 2.0

[sweep]
axis = "detuning"
min = -0.02
max = 0.02
steps = 5
"""
        path = tmp_path / "spec.toml"
        path.write_text(cfg)
        assert main(["run", "--config", str(path), "--jobs", "1"]) == 0
        single = (tmp_path / "out" / "spectrogram.csv").read_bytes()
        assert main(["run", "--config", str(path), "--jobs", "2"]) == 0
        assert (tmp_path / "out" / "spectrogram.csv").read_bytes() == single

    def test_installed_entry_point(self, tmp_path):
        path = write_cfg(tmp_path, ADLER_CFG)
        proc = subprocess.run(
            [sys.executable, "-m", "seo_sync.cli", "run", "--config", str(path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr


class TestFullScenario:
    CFG = """
scenario = "full"
seed = 2
output_dir = "{out}"

[cavity]
t_b = 0.2
t_a = 0.05
t_r = 0.05
finesse = 2.1
wavelength = 1.0
x_r = -0.0105

[thermo]
mass = 1.0
omega0 = 6.283185307179586
gamma0 = 0.01
gamma2 = 2.0e5
beta = 0.005
theta = 1.0
eta = 1.0
kappa = 0.25
t_eff = 77.0

[drive]
p0 = 0.0874
eps = 0.0

[sim]
duration = 30.0
dt = 0.01
x_kick = 1e-4
"""

    def test_single_run_writes_displacement_series(self, tmp_path):
        path = tmp_path / "full.toml"
        path.write_text(self.CFG.format(out=tmp_path / "out"))
        assert main(["run", "--config", str(path)]) == 0
        from seo_sync.timeseries import TimeSeries

        ts = TimeSeries.from_csv(tmp_path / "out" / "full_x.csv")
        assert len(ts) == 3000 and ts.kind == "real"

    def test_sweep_writes_lock_report(self, tmp_path):
        cfg = self.CFG + """
[sweep]
axis = "omega_d"
min = 6.25
max = 6.31
steps = 3
"""
        cfg = cfg.replace("eps = 0.0", "eps = 0.02").replace("duration = 30.0", "duration = 400.0")
        path = tmp_path / "full.toml"
        path.write_text(cfg.format(out=tmp_path / "out"))
        assert main(["run", "--config", str(path), "--jobs", "2"]) == 0
        lines = (tmp_path / "out" / "lock_report.csv").read_text().splitlines()
        assert lines[0] == "omega_d,eps,winding,locked,mean_freq,phase_var,seed"
        assert len(lines) == 4


class TestEnvelopeScenario:
    def test_envelope_run(self, tmp_path):
        cfg = f"""
scenario = "envelope"
seed = 1
output_dir = "{tmp_path / 'out'}"

[envelope]
linear_damping = -1.0
quadratic_damping = 1.0
frequency = 50.0
noise_intensity = 1e-4

[sim]
duration = 20.0
dt = 0.005
a0_re = 1.0
"""
        path = tmp_path / "env.toml"
        path.write_text(cfg)
        assert main(["run", "--config", str(path)]) == 0
        from seo_sync.timeseries import TimeSeries

        ts = TimeSeries.from_csv(tmp_path / "out" / "envelope_a.csv")
        assert ts.kind == "complex"


class TestSensitivityScenario:
    def test_table_written(self, tmp_path):
        cfg = f"""
scenario = "sensitivity"
output_dir = "{tmp_path / 'out'}"

[sensitivity]
gamma0 = 195.4
t_eff = 77.0
mass = 1.1e-12
r0 = 1e-9
freq_hz = 236.4e3
t_a = 1.0
zeta0 = 100.0
linear_damping = -1.0
quadratic_damping = 1.0
i_b = 0.5
omega_a = 1.0
tau_a = 10.0
"""
        path = tmp_path / "sens.toml"
        path.write_text(cfg)
        assert main(["run", "--config", str(path)]) == 0
        rows = dict(
            line.split(",") for line in
            (tmp_path / "out" / "sensitivity.csv").read_text().splitlines()[1:]
        )
        assert {"sigma_fo", "sigma_seo", "degradation", "delta_omega"} <= set(rows)
        assert float(rows["sigma_fo"]) > 0
