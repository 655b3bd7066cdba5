"""Scenario configuration and the command-line front end."""

import os
import subprocess
import sys

import numpy as np
import pytest

from wqed.config import ScenarioConfig
from wqed.errors import ConfigError
from wqed.cli import main, run_scenario, sweep_scenario, _parse_values
from wqed.figures import FIGURES

BASE = """
system.n_emitters = 2
system.scheme = lambda
system.beta = 0.99
drive.omega0 = 0.05 Gp
drive.omega1 = auto
drive.delta0 = 0.05 Gp
drive.delta1 = -0.05 Gp
solver.task = steady
solver.method = full
solver.seed = 7
output.path = {path}
"""


class TestConfigParsing:
    def test_round_trip(self):
        cfg = ScenarioConfig.parse(BASE.format(path="out.csv"), apply_env=False)
        text = cfg.serialize()
        cfg2 = ScenarioConfig.parse(text, apply_env=False)
        assert cfg == cfg2
        assert cfg2.serialize() == text

    def test_unknown_key_rejected_with_line(self):
        bad = "system.n_emitters = 2\nsystem.beta = 0.9\nbogus.key = 1\n"
        with pytest.raises(ConfigError, match="line 3"):
            ScenarioConfig.parse(bad, apply_env=False)

    def test_missing_unit_rejected(self):
        bad = "system.beta = 0.9\ndrive.omega0 = 0.05\n"
        with pytest.raises(ConfigError, match="unit"):
            ScenarioConfig.parse(bad, apply_env=False)

    def test_unknown_unit_rejected(self):
        bad = "system.beta = 0.9\ndrive.omega0 = 0.05 THz\n"
        with pytest.raises(ConfigError, match="unit"):
            ScenarioConfig.parse(bad, apply_env=False)

    def test_mhz_conversion(self):
        text = ("system.beta = 0.9\nsystem.gamma_prime_mhz = 5.234\n"
                "motion.omega_z = 1.0 MHz\nsolver.t_max = 1.0 us\n")
        cfg = ScenarioConfig.parse(text, apply_env=False)
        assert cfg.get("motion.omega_z") == pytest.approx(1.0 / 5.234)
        assert cfg.get("solver.t_max") == pytest.approx(2 * np.pi * 5.234)

    def test_beta_or_gamma_required(self):
        with pytest.raises(ConfigError, match="beta"):
            ScenarioConfig.parse("drive.omega0 = 0.05 Gp\n", apply_env=False)

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("WQED_SOLVER_SEED", "99")
        cfg = ScenarioConfig.parse(BASE.format(path="o.csv"))
        assert cfg.get("solver.seed") == 99

    def test_auto_omega1_resolves_to_optimum(self):
        cfg = ScenarioConfig.parse(BASE.format(path="o.csv"), apply_env=False)
        spec = cfg.system_spec()
        assert spec.drives.omega[1] == pytest.approx(0.05 * 3**0.25)
        assert spec.gamma_1d == pytest.approx(99.0)

    def test_comment_and_blank_lines(self):
        text = "# comment\n\nsystem.beta = 0.9  # inline\n"
        cfg = ScenarioConfig.parse(text, apply_env=False)
        assert cfg.get("system.beta") == 0.9


class TestRunScenario:
    def test_steady_run_writes_csv(self, tmp_path):
        path = tmp_path / "steady.csv"
        cfg = ScenarioConfig.parse(BASE.format(path=path), apply_env=False)
        summary = run_scenario(cfg)
        lines = path.read_text().splitlines()
        assert lines[0] == "fidelity,infidelity"
        assert summary["fidelity"] == pytest.approx(0.9604, abs=2e-3)

    def test_transient_header(self, tmp_path):
        path = tmp_path / "tr.csv"
        text = BASE.format(path=path).replace("solver.task = steady",
                                              "solver.task = transient")
        text += "solver.t_max = 500 invGp\nsolver.grid_points = 12\n"
        cfg = ScenarioConfig.parse(text, apply_env=False)
        run_scenario(cfg)
        header = path.read_text().splitlines()[0]
        assert header.startswith("time,fidelity,")

    def test_effective_method(self, tmp_path):
        path = tmp_path / "eff.csv"
        text = BASE.format(path=path).replace("solver.method = full",
                                              "solver.method = effective")
        cfg = ScenarioConfig.parse(text, apply_env=False)
        summary = run_scenario(cfg)
        assert summary["fidelity"] == pytest.approx(0.9604, abs=5e-3)

    def test_determinism_byte_identical(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        text = BASE.format(path=p1).replace("solver.task = steady",
                                            "solver.task = transient")
        text += ("solver.method = trajectories\nsolver.n_traj = 25\n"
                 "solver.t_max = 300 invGp\nsolver.grid_points = 10\n")
        cfg = ScenarioConfig.parse(text, apply_env=False)
        run_scenario(cfg)
        cfg2 = ScenarioConfig.parse(text.replace(str(p1), str(p2)), apply_env=False)
        run_scenario(cfg2)
        assert p1.read_bytes() == p2.read_bytes()


class TestSweep:
    def test_value_parsing(self):
        assert _parse_values("1,2,3") == [1.0, 2.0, 3.0]
        vals = _parse_values("0.001:1:4:log")
        assert vals[0] == pytest.approx(0.001)
        assert vals[-1] == pytest.approx(1.0)
        assert len(vals) == 4
        with pytest.raises(ConfigError):
            _parse_values("0.1:1")

    def test_sweep_rows_ordered(self, tmp_path):
        path = tmp_path / "sweep.csv"
        cfg = ScenarioConfig.parse(BASE.format(path=path), apply_env=False)
        values = [-0.1, -0.05, -0.02]
        rows = sweep_scenario(cfg, "drive.delta1", values)
        assert [r[0] for r in rows] == values
        lines = path.read_text().splitlines()
        assert lines[0] == "drive.delta1,fidelity"
        assert len(lines) == 4

    def test_unknown_axis_rejected(self):
        cfg = ScenarioConfig.parse(BASE.format(path="x.csv"), apply_env=False)
        with pytest.raises(ConfigError, match="axis"):
            sweep_scenario(cfg, "system.scheme", [1.0])
        with pytest.raises(ConfigError):
            sweep_scenario(cfg, "no.such.key", [1.0])


class TestCliEntry:
    def write_cfg(self, tmp_path, text):
        p = tmp_path / "scenario.cfg"
        p.write_text(text)
        return str(p)

    def test_run_exit_zero(self, tmp_path):
        out = tmp_path / "o.csv"
        cfg = self.write_cfg(tmp_path, BASE.format(path=out))
        assert main(["run", "--config", cfg]) == 0
        assert out.exists()

    def test_config_error_exit_two(self, tmp_path):
        cfg = self.write_cfg(tmp_path, "bogus.key = 1\n")
        assert main(["run", "--config", cfg]) == 2
        assert main(["run"]) == 2

    def test_solver_error_exit_three(self, tmp_path):
        # no drives: the stationary manifold is degenerate
        text = BASE.format(path=tmp_path / "o.csv").replace(
            "drive.omega0 = 0.05 Gp", "drive.omega0 = 0.0 Gp").replace(
            "drive.omega1 = auto", "drive.omega1 = 0.0 Gp")
        cfg = self.write_cfg(tmp_path, text)
        assert main(["run", "--config", cfg]) == 3

    def test_seed_and_out_flags(self, tmp_path):
        out = tmp_path / "flagged.csv"
        cfg = self.write_cfg(tmp_path, BASE.format(path=tmp_path / "ignored.csv"))
        assert main(["run", "--config", cfg, "--out", str(out), "--seed", "3"]) == 0
        assert out.exists()

    def test_sweep_command(self, tmp_path):
        out = tmp_path / "s.csv"
        cfg = self.write_cfg(tmp_path, BASE.format(path=tmp_path / "o.csv"))
        code = main(["sweep", "--config", cfg, "--axis", "drive.delta1",
                     "--values=-0.08,-0.04", "--out", str(out)])
        assert code == 0
        assert len(out.read_text().splitlines()) == 3


class TestReproduce:
    def test_all_figures_registered(self):
        assert set(FIGURES) == {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7",
                                "fig8", "figA1"}

    def test_dry_run_every_figure(self):
        for name in FIGURES:
            assert main(["reproduce", name, "--dry-run"]) == 0

    def test_unknown_figure_rejected(self):
        assert main(["reproduce", "fig99", "--dry-run"]) == 2

    def test_fig2_fast_outputs(self, tmp_path):
        assert main(["reproduce", "fig2", "--fast", "--out", str(tmp_path)]) == 0
        a = (tmp_path / "fig2a.csv").read_text().splitlines()
        b = (tmp_path / "fig2b.csv").read_text().splitlines()
        assert a[0].startswith("time,p00_full")
        assert b[0] == "C,infidelity_full,infidelity_analytic"
        c_values = [float(r.split(",")[0]) for r in b[1:]]
        assert c_values[0] == pytest.approx(10.0)
        assert c_values[-1] == pytest.approx(1e4)


def test_console_script_installed():
    result = subprocess.run([sys.executable, "-m", "wqed.cli", "reproduce", "list"],
                            capture_output=True, text=True)
    assert result.returncode == 0
    assert "fig8" in result.stdout
