"""Configuration parsing and CLI pipeline tests."""

import math

import numpy as np
import pytest

from fwm_readout.cli import main
from fwm_readout.config import RunConfig
from fwm_readout.errors import ConfigError

CONFIG_TEXT = """\
[model]
delta_r = 0.3
scale = 0.8
horizon = 0.5
time_points = 50
sweep_deltas = 0.2, 0.5, 0.8

[geometry]
pixels_x = 24
pixels_y = 36
pitch_mrad = 0.1
read_center_x = 12
read_center_y = 27
region_radius_mrad = 0.65

[write]
mean_nb = 6.0
eta_w = 0.9
eta_r = 0.8
modes_kb_percm = 45.8 0; -45.8 0

[detection]
kappa = 0.05

[run]
shots = 400
seed = 777
threads = 2
chunk_shots = 64

[gate]
gate_start = 0.0
gate_width = 0.02
n_gates = 20
spacing = 0.025
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(CONFIG_TEXT)
    return path


class TestRunConfig:
    def test_defaults_build_valid_objects(self):
        cfg = RunConfig()
        spec = cfg.sim_spec()
        assert spec.detection.t_ws == 0.12
        assert spec.detection.qe == 0.20
        assert spec.geometry.theta == pytest.approx(2e-3)
        assert spec.geometry.wavelength == pytest.approx(795e-9)
        assert len(spec.modes) == 2
        np.testing.assert_allclose(spec.modes[0].kx, 45.8e2)

    def test_round_trip_is_identity(self, config_path):
        cfg = RunConfig.from_file(config_path)
        again = RunConfig.from_text(cfg.to_text())
        assert again == cfg
        assert again.to_text() == cfg.to_text()

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_text("[nonsense]\nx = 1\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_text("[model]\nwarp_factor = 9\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_text("[model]\nhorizon = quick\n")

    def test_delta_and_couplings_conflict(self):
        with pytest.raises(ConfigError):
            RunConfig.from_text("[model]\ndelta_r = 0.4\nchi = 1.0\nxi = 0.5\n")

    def test_explicit_couplings(self):
        cfg = RunConfig.from_text("[model]\nchi = 1.5\nxi = 0.5\n")
        pair = cfg.coupling_pair()
        assert pair.chi == 1.5
        assert pair.xi == 0.5

    def test_detuning_couplings(self, config_path):
        pair = RunConfig.from_file(config_path).coupling_pair()
        np.testing.assert_allclose(pair.chi, 0.8 / 0.3)
        np.testing.assert_allclose(pair.xi, 0.8 / 0.7)

    def test_seed_and_thread_overrides(self, config_path):
        cfg = RunConfig.from_file(config_path).with_overrides(seed=1, threads=5)
        assert cfg.run.seed == 1
        assert cfg.run.threads == 5
        assert cfg.run.shots == 400


class TestCliCommands:
    def test_evolve_writes_table(self, config_path, tmp_path):
        out = tmp_path / "out"
        assert main(["evolve", "--config", str(config_path), "--out", str(out)]) == 0
        lines = (out / "evolve.csv").read_text().splitlines()
        assert lines[0] == "t,g_ra,s_ra,g_rs,s_rs,rate_ra,rate_rs,rate_total"
        assert len(lines) == 51
        # delta_r = 0.3: anti-Stokes dominates, so g_ra decays over the trace
        first = float(lines[1].split(",")[1])
        last = float(lines[-1].split(",")[1])
        assert last < first

    def test_evolve_flat_at_symmetric_detuning(self, tmp_path):
        cfg = tmp_path / "sym.cfg"
        cfg.write_text("[model]\ndelta_r = 0.5\ntime_points = 20\n")
        out = tmp_path / "out"
        assert main(["evolve", "--config", str(cfg), "--out", str(out)]) == 0
        rows = (out / "evolve.csv").read_text().splitlines()[1:]
        g_ra = [float(r.split(",")[1]) for r in rows]
        np.testing.assert_allclose(g_ra, g_ra[0], rtol=1e-12)

    def test_invalid_detuning_exits_with_domain_code(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[model]\ndelta_r = 1.2\n")
        assert main(["evolve", "--config", str(cfg), "--out", str(tmp_path)]) == 3

    def test_sweep_single_point_and_empty_grid(self, tmp_path):
        cfg = tmp_path / "one.cfg"
        cfg.write_text("[model]\nsweep_deltas = 0.5\nhorizon = 0.5\n")
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "delta_r,g_ra_bar,s_ra_bar,g_rs_bar,s_rs_bar"
        assert len(lines) == 2
        row = [float(v) for v in lines[1].split(",")]
        np.testing.assert_allclose(row[1], row[3], rtol=1e-14)
        cfg2 = tmp_path / "none.cfg"
        cfg2.write_text("[model]\ndelta_r = 0.5\n")
        assert main(["sweep", "--config", str(cfg2), "--out", str(out)]) == 2

    def test_simulate_analyze_pipeline(self, config_path, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(config_path), "--out", str(out)]) == 0
        stack = out / "stack.fwmstack"
        assert stack.exists()
        assert main(["analyze", str(stack), "--config", str(config_path), "--out", str(out)]) == 0
        gains = dict(
            line.split("=", 1) for line in (out / "gains.txt").read_text().splitlines()
        )
        assert float(gains["c_ws_ra"]) > 0.0
        assert float(gains["g_eff_rs"]) > 0.0
        corr_lines = (out / "corr_map.csv").read_text().splitlines()
        assert len(corr_lines) == 36
        assert "nan" in corr_lines[0]

    def test_missing_stack_exits_with_io_code(self, tmp_path):
        assert main(["analyze", str(tmp_path / "nope.fwmstack"), "--out", str(tmp_path)]) == 4

    def test_rerun_is_byte_identical(self, config_path, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        for out in (out_a, out_b):
            assert main(["simulate", "--config", str(config_path), "--out", str(out)]) == 0
            assert main(["evolve", "--config", str(config_path), "--out", str(out)]) == 0
        assert (out_a / "stack.fwmstack").read_bytes() == (out_b / "stack.fwmstack").read_bytes()
        assert (out_a / "evolve.csv").read_bytes() == (out_b / "evolve.csv").read_bytes()

    def test_seed_override_changes_stack(self, config_path, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["simulate", "--config", str(config_path), "--out", str(out_a)]) == 0
        assert main(
            ["simulate", "--config", str(config_path), "--seed", "31337", "--out", str(out_b)]
        ) == 0
        assert (out_a / "stack.fwmstack").read_bytes() != (out_b / "stack.fwmstack").read_bytes()

    def test_fit_from_model_and_from_trace(self, config_path, tmp_path):
        out = tmp_path / "out"
        assert main(["fit", "--config", str(config_path), "--out", str(out)]) == 0
        fit = dict(line.split("=", 1) for line in (out / "fit.txt").read_text().splitlines())
        # delta_r = 0.3 decays: the auto window picks the leading gates
        assert fit["window_kind"] == "first"
        assert float(fit["rate"]) < 0.0
        # explicit synthetic trace: rate -1 recovered exactly
        trace = tmp_path / "trace.csv"
        t = np.linspace(0.0, 3.0, 12)
        trace.write_text(
            "t,counts\n" + "\n".join(f"{ti},{2.0 * math.exp(-ti)}" for ti in t) + "\n"
        )
        assert main(["fit", str(trace), "--window", "first:12", "--out", str(out)]) == 0
        fit2 = dict(line.split("=", 1) for line in (out / "fit.txt").read_text().splitlines())
        np.testing.assert_allclose(float(fit2["rate"]), -1.0, atol=1e-9)

    def test_flat_trace_fit(self, tmp_path):
        trace = tmp_path / "flat.csv"
        trace.write_text("t,counts\n" + "\n".join(f"{t},4.5" for t in range(6)) + "\n")
        out = tmp_path / "out"
        assert main(["fit", str(trace), "--window", "first:6", "--out", str(out)]) == 0
        fit = dict(line.split("=", 1) for line in (out / "fit.txt").read_text().splitlines())
        np.testing.assert_allclose(float(fit["rate"]), 0.0, atol=1e-12)
        np.testing.assert_allclose(float(fit["amplitude"]), 4.5, rtol=1e-12)

    def test_bad_window_flag_is_config_error(self, tmp_path):
        trace = tmp_path / "t.csv"
        trace.write_text("0,1\n1,2\n2,4\n")
        assert main(["fit", str(trace), "--window", "middle-4", "--out", str(tmp_path)]) == 2
