import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from eosim import dynamics as dyn, fitting, params
from eosim.cli import main

TWO_PI = 2.0 * np.pi

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def write_cfg(tmp_path, doc, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def strip_timestamp(path):
    return "\n".join(l for l in Path(path).read_text().splitlines()
                     if "timestamp" not in l)


def simulate_config():
    return {
        "system": {"preset": "high_coop", "suppression": 0.22},
        "run": {
            "kind": "simulate",
            "direction": "mw_to_opt",
            "t_max": 0.6e-6,
            "dt": 1.0e-9,
            "pump": {"kind": "square", "cooperativity": 0.49,
                     "t_on": 0.2e-6, "t_off": 0.5e-6, "rise_time": 15e-9},
            "signal": {"kind": "cw", "amplitude": 1.0},
        },
    }


class TestSimulate:
    def test_runs_and_writes(self, tmp_path):
        cfg = write_cfg(tmp_path, simulate_config())
        out = str(tmp_path / "sim")
        assert main(["simulate", "--config", cfg, "--out", out]) == 0
        traj = Path(out + "_trajectory.csv")
        assert traj.exists()
        summary = json.loads(Path(out + "_summary.json").read_text())
        assert summary["peak_efficiency"] > summary["plateau_efficiency"] > 0.0
        header = next(l for l in traj.read_text().splitlines()
                      if not l.startswith("#"))
        assert header.startswith("t,a_p_re")

    def test_deterministic_modulo_timestamp(self, tmp_path):
        cfg = write_cfg(tmp_path, simulate_config())
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["simulate", "--config", cfg, "--out", out1]) == 0
        assert main(["simulate", "--config", cfg, "--out", out2]) == 0
        for suffix in ("_trajectory.csv", "_summary.json", "_efficiency.csv"):
            assert strip_timestamp(out1 + suffix) == strip_timestamp(out2 + suffix)

    def test_empty_config_names_missing_field(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {})
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
        err = capsys.readouterr().err
        assert "system" in err

    def test_missing_required_run_field_named(self, tmp_path, capsys):
        doc = simulate_config()
        del doc["run"]["t_max"]
        cfg = write_cfg(tmp_path, doc)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
        assert "run.t_max" in capsys.readouterr().err

    def test_kind_mismatch_rejected(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, simulate_config())
        assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
        assert "run.kind" in capsys.readouterr().err

    def test_set_override(self, tmp_path):
        cfg = write_cfg(tmp_path, simulate_config())
        out = str(tmp_path / "ovr")
        assert main(["simulate", "--config", cfg, "--out", out,
                     "--set", "run.pump.cooperativity=0.1",
                     "--set", "run.t_max=0.4e-6"]) == 0
        meta_line = next(l for l in Path(out + "_summary.json").read_text()
                         .splitlines() if '"cooperativity"' in l)
        assert "0.1" in meta_line


class TestSpectrum:
    def test_sweep_csv(self, tmp_path):
        doc = {
            "system": {"preset": "high_coop", "suppression": 0.22},
            "run": {"kind": "spectrum", "cooperativity": 0.38,
                    "omega": {"start/2pi": -4e7, "stop/2pi": 4e7, "num": 101},
                    "pairs": ["oe", "ee"]},
        }
        cfg = write_cfg(tmp_path, doc)
        out = str(tmp_path / "spec")
        assert main(["spectrum", "--config", cfg, "--out", out]) == 0
        text = Path(out + "_spectrum.csv").read_text()
        header = next(l for l in text.splitlines() if not l.startswith("#"))
        assert header == "omega,s_oe_mag2,s_oe_arg,s_ee_mag2,s_ee_arg"
        rows = [l for l in text.splitlines() if not l.startswith("#")][1:]
        assert len(rows) == 101
        mid = rows[50].split(",")
        # on resonance the conversion matches the configured closed form
        assert float(mid[1]) == pytest.approx(0.130209570166, rel=1e-6)

    def test_bad_pair_named(self, tmp_path, capsys):
        doc = {"system": {"preset": "high_coop"},
               "run": {"cooperativity": 0.1,
                       "omega": {"start": 0.0, "stop": 1.0, "num": 3},
                       "pairs": ["qq"]}}
        cfg = write_cfg(tmp_path, doc)
        assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
        assert "run.pairs" in capsys.readouterr().err


class TestNoise:
    def test_spectrum_and_report(self, tmp_path):
        doc = {
            "system": {"preset": "high_coop", "suppression": 0.22,
                       "microwave": {"n_bath": 0.1}},
            "run": {"kind": "noise", "cooperativity": 0.38, "channel": "e",
                    "eta_tot": 0.114},
        }
        cfg = write_cfg(tmp_path, doc)
        out = str(tmp_path / "noise")
        assert main(["noise", "--config", cfg, "--out", out]) == 0
        report = json.loads(Path(out + "_noise.json").read_text())
        assert report["n_out"] > 0.0
        assert report["n_in"] == pytest.approx(report["n_out"] / 0.114)
        assert Path(out + "_noise_spectrum.csv").exists()


class TestLandscape:
    def test_small_grid(self, tmp_path):
        doc = {
            "system": {"preset": "high_coop"},
            "run": {"kind": "landscape", "channel": "e", "suppression": 0.22,
                    "c": {"start": 0.1, "stop": 0.4, "num": 2},
                    "n_e": {"start": 0.01, "stop": 0.1, "num": 2, "scale": "log"}},
        }
        cfg = write_cfg(tmp_path, doc)
        out = str(tmp_path / "scape")
        assert main(["landscape", "--config", cfg, "--out", out,
                     "--threads", "2"]) == 0
        rows = [l for l in Path(out + "_landscape.csv").read_text().splitlines()
                if not l.startswith("#")]
        assert len(rows) == 5
        sidecar = json.loads(Path(out + "_landscape.csv.meta.json").read_text())
        assert sidecar["failures"] == []


class TestFit:
    def make_dip_trace(self, tmp_path):
        kappa_o = TWO_PI * 25.8e6
        u = 0.78**2 * 0.58 * kappa_o
        x = np.linspace(-4 * kappa_o, 4 * kappa_o, 401)
        y = fitting.optical_dip_model(x, 0.0, kappa_o, u)
        path = tmp_path / "dip.csv"
        lines = ["# x: rad/s", "# y: normalized reflection", "x,y"]
        lines += [f"{a:.17g},{b:.17g}" for a, b in zip(x, y)]
        path.write_text("\n".join(lines))
        return str(path), kappa_o

    def test_optical_dip_fit(self, tmp_path):
        trace, kappa_o = self.make_dip_trace(tmp_path)
        doc = {"run": {"kind": "fit", "fit": "optical_dip", "trace": trace,
                       "lambda_mm": 0.78}}
        cfg = write_cfg(tmp_path, doc)
        out = str(tmp_path / "fit")
        assert main(["fit", "--config", cfg, "--out", out]) == 0
        result = json.loads(Path(out + "_fit.json").read_text())
        assert result["converged"]
        assert result["parameters"]["kappa_o"] == pytest.approx(kappa_o, rel=1e-6)

    def test_nonconvergence_exit_code(self, tmp_path, capsys):
        trace, _ = self.make_dip_trace(tmp_path)
        doc = {"run": {"kind": "fit", "fit": "optical_dip", "trace": trace,
                       "max_nfev": 1}}
        cfg = write_cfg(tmp_path, doc)
        out = str(tmp_path / "fitx")
        assert main(["fit", "--config", cfg, "--out", out]) == 4
        result = json.loads(Path(out + "_fit.json").read_text())
        assert not result["converged"]

    def test_unknown_fit_kind(self, tmp_path, capsys):
        doc = {"run": {"kind": "fit", "fit": "mystery", "trace": "none.csv"}}
        cfg = write_cfg(tmp_path, doc)
        assert main(["fit", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


class TestCalibrate:
    def test_report(self, tmp_path):
        eta_db = float(10 * np.log10(0.114))
        doc = {"run": {"kind": "calibrate",
                       "s_eo_db": -6.33 + eta_db + 81.75,
                       "s_oe_db": -74.92 + eta_db + 18.63,
                       "s_oo_db": -6.33 + 18.63,
                       "s_ee_db": -74.92 + 81.75,
                       "beta4_db": 81.75}}
        cfg = write_cfg(tmp_path, doc)
        out = str(tmp_path / "cal")
        assert main(["calibrate", "--config", cfg, "--out", out]) == 0
        rep = json.loads(Path(out + "_calibration.json").read_text())
        assert rep["eta_tot"] == pytest.approx(0.114, rel=1e-9)
        assert rep["beta1_db"] == pytest.approx(-6.33, abs=0.01)
        assert rep["chain_equations"]


class TestScenarios:
    def test_fig1_shrunk(self, tmp_path):
        out = str(tmp_path / "fig1")
        assert main(["simulate", "--config", str(SCENARIOS / "fig1.yaml"),
                     "--out", out, "--set", "run.t_max=1.2e-6",
                     "--set", "run.signal.t_off=0.9e-6"]) == 0
        summary = json.loads(Path(out + "_summary.json").read_text())
        # converted-pulse rise limited by the cavity linewidths
        assert summary["rise_time_10_90"] == pytest.approx(85e-9, rel=0.15)

    def test_fig4c_tiny_grid(self, tmp_path):
        out = str(tmp_path / "fig4c")
        assert main(["landscape", "--config", str(SCENARIOS / "fig4c.yaml"),
                     "--out", out,
                     "--set", "run.c={start: 0.2, stop: 0.38, num: 2}",
                     "--set", "run.n_e={start: 0.01, stop: 0.02, num: 2, scale: log}"]) == 0
        rows = [l.split(",") for l in Path(out + "_landscape.csv").read_text()
                .splitlines() if not l.startswith("#")][1:]
        values = {(float(r[0]), float(r[1])): float(r[2]) for r in rows}
        # the grid contains a cell at the published added-noise level
        assert 0.16 - 0.05 < values[(0.2, 0.02)] < 0.16 + 0.05

    def test_all_shipped_scenarios_parse(self):
        for path in SCENARIOS.glob("*.yaml"):
            doc = yaml.safe_load(path.read_text())
            assert "system" in doc and "run" in doc, path.name
            assert doc["run"]["kind"] in ("simulate", "landscape")
