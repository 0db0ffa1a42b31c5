import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.constants import hbar

from eosim import params
from eosim.errors import ConfigError

TWO_PI = 2.0 * np.pi


class TestModeParams:
    def test_total_and_eta(self):
        m = params.ModeParams(omega=TWO_PI * 8.795e9, kappa_in=3.0, kappa_ex=1.0)
        assert m.kappa == 4.0
        assert m.eta == 0.25

    @pytest.mark.parametrize("bad", [
        dict(kappa_in=-1.0, kappa_ex=1.0),
        dict(kappa_in=1.0, kappa_ex=-1.0),
        dict(kappa_in=0.0, kappa_ex=0.0),
        dict(kappa_in=1.0, kappa_ex=1.0, n_bath=-0.1),
        dict(kappa_in=1.0, kappa_ex=1.0, n_waveguide=-0.1),
    ])
    def test_invariants_rejected(self, bad):
        with pytest.raises(ValueError):
            params.ModeParams(omega=1.0, **bad)

    def test_immutable(self, high_coop):
        with pytest.raises(Exception):
            high_coop.microwave.kappa_in = 0.0

    def test_eta_in_unit_interval_for_presets(self, high_coop, low_coop):
        for system in (high_coop, low_coop):
            for name in ("pump", "signal", "stokes", "tm", "microwave"):
                assert 0.0 <= getattr(system, name).eta <= 1.0


class TestPresets:
    def test_high_coop_table_values(self, high_coop):
        assert high_coop.microwave.kappa == pytest.approx(TWO_PI * 13.706e6)
        assert high_coop.microwave.eta == pytest.approx(0.408)
        assert high_coop.signal.kappa == pytest.approx(TWO_PI * 25.8e6)
        assert high_coop.signal.eta == pytest.approx(0.58)
        assert high_coop.lambda_mm == 0.78
        assert high_coop.g0 == pytest.approx(TWO_PI * 37.0)
        assert high_coop.j == pytest.approx(TWO_PI * 26.21e6)
        assert high_coop.tm.kappa == pytest.approx(TWO_PI * 9.96e6)
        assert high_coop.stokes.delta == pytest.approx(TWO_PI * 15.5e6)
        assert high_coop.tm.delta == pytest.approx(TWO_PI * 19.5e6)

    def test_low_coop_table_values(self, low_coop):
        assert low_coop.signal.kappa == pytest.approx(TWO_PI * 15.55e6)
        assert low_coop.signal.eta == pytest.approx(0.55)
        assert low_coop.microwave.kappa == pytest.approx(TWO_PI * 12.12e6)
        assert low_coop.microwave.eta == pytest.approx(0.369)
        assert low_coop.lambda_mm == 0.838
        assert low_coop.j == 0.0


class TestCooperativity:
    def test_zero_pump(self):
        assert params.cooperativity(0.0, 10.0, 1e6, 1e6) == 0.0

    def test_formula(self):
        assert params.cooperativity(2.0, 3.0, 4.0, 6.0) == pytest.approx(
            4.0 * 2.0 * 9.0 / 24.0)

    @given(st.floats(1.0, 1e12), st.floats(1e-2, 1e4))
    def test_linear_in_n_pump(self, n, scale):
        base = params.cooperativity(n, 5.0, 1e6, 2e6)
        assert params.cooperativity(scale * n, 5.0, 1e6, 2e6) == pytest.approx(
            scale * base, rel=1e-12)

    def test_quadratic_in_g0(self):
        base = params.cooperativity(3.0, 5.0, 1e6, 2e6)
        assert params.cooperativity(3.0, 10.0, 1e6, 2e6) == pytest.approx(4.0 * base)

    def test_nonpositive_linewidth_rejected(self):
        with pytest.raises(ValueError):
            params.cooperativity(1.0, 1.0, 0.0, 1e6)
        with pytest.raises(ValueError):
            params.cooperativity(1.0, 1.0, 1e6, -1.0)

    def test_table_high_photon_number_solves_c(self, high_coop):
        # solving for the pump photons that give C = 0.38 is forced by the
        # formula; feeding them back must reproduce C exactly
        n = params.n_pump_for_cooperativity(high_coop, 0.38)
        expected = 0.38 * high_coop.signal.kappa * high_coop.microwave.kappa / (
            4.0 * high_coop.g0**2)
        assert n == pytest.approx(expected, rel=1e-14)
        assert high_coop.cooperativity(n) == pytest.approx(0.38, rel=1e-12)


class TestPumpPhotons:
    def test_zero_power(self, high_coop):
        assert params.pump_photons(0.0, high_coop.pump, 0.78,
                                   high_coop.pump.omega) == 0.0

    def test_critical_coupling_algebra(self):
        kappa = TWO_PI * 20e6
        omega = TWO_PI * 193e12
        mode = params.ModeParams(omega=omega, kappa_in=kappa / 2, kappa_ex=kappa / 2)
        p = 1e-4
        n = params.pump_photons(p, mode, 1.0, omega)
        assert n == pytest.approx(2.0 * p / (hbar * omega * kappa), rel=1e-12)

    def test_power_route_matches_direct_formulas(self, high_coop):
        # direct evaluation of drive flux and steady-state response
        p = 5e-3
        flux = p / (hbar * high_coop.pump.omega)
        pump = high_coop.pump
        expected = (high_coop.lambda_mm**2 * pump.kappa_ex * flux /
                    (pump.delta**2 + (pump.kappa / 2.0) ** 2))
        got = params.pump_photons(p, pump, high_coop.lambda_mm, pump.omega)
        assert got == pytest.approx(expected, rel=1e-12)
        # and the round trip through the drive amplitude helper
        f = params.pump_drive_for_photons(high_coop, got)
        assert f**2 * hbar * pump.omega == pytest.approx(p, rel=1e-12)

    def test_negative_power_rejected(self, high_coop):
        with pytest.raises(ValueError):
            params.pump_photons(-1.0, high_coop.pump, 1.0, high_coop.pump.omega)


class TestSuppression:
    def test_no_splitting(self):
        assert params.suppression_ratio(0.0) == 1.0

    def test_perfect_suppression_limit(self):
        assert params.suppression_ratio(1e12) < 1e-11

    def test_invert_measured_value(self):
        c_j = params.c_j_for_suppression(0.22)
        assert c_j == pytest.approx(1.0 / 0.22 - 1.0)
        assert c_j == pytest.approx(3.5454545454545454)
        assert params.suppression_ratio(c_j) == pytest.approx(0.22, rel=1e-12)

    @given(st.floats(0.0, 1e6), st.floats(1e-9, 1e6))
    def test_strictly_decreasing(self, c_j, step):
        assert params.suppression_ratio(c_j + step) < params.suppression_ratio(c_j)

    def test_effective_equals_on_resonance_without_detunings(self, sys22):
        c_j = sys22.mode_coupling_cooperativity()
        assert params.effective_suppression(sys22) == pytest.approx(
            params.suppression_ratio(c_j), rel=1e-12)

    def test_effective_differs_with_measured_detunings(self, high_coop):
        # the Table S-high detunings move the effective ratio well away
        # from the zero-detuning value 1/(1 + C_J) ~ 0.086
        s_eff = params.effective_suppression(high_coop)
        s_res = params.suppression_ratio(high_coop.mode_coupling_cooperativity())
        assert s_res == pytest.approx(0.0855, abs=0.002)
        assert s_eff > 2.0 * s_res

    def test_with_suppression_round_trip(self, high_coop):
        system = params.with_suppression(high_coop, 0.22)
        assert system.cooperativities(0.0).suppression == pytest.approx(0.22, rel=1e-12)
        assert system.stokes.delta == 0.0
        assert system.tm.delta == 0.0


class TestOccupancy:
    def test_equal_baths(self):
        m = params.ModeParams(omega=1.0, kappa_in=2.0, kappa_ex=3.0,
                              n_bath=0.7, n_waveguide=0.7)
        assert params.occupancy_of(m) == pytest.approx(0.7)

    def test_cold_waveguide(self, high_coop):
        m = high_coop.microwave.replace(n_bath=0.05, n_waveguide=0.0)
        assert params.occupancy_of(m) == pytest.approx(0.05 * (1.0 - 0.408))
        assert params.occupancy_of(m) == pytest.approx(0.0296)


class TestConfig:
    def base_config(self):
        return {
            "preset": "high_coop",
            "microwave": {"n_bath": 0.1},
            "lambda_mm": 0.80,
        }

    def test_preset_with_overrides(self):
        system = params.system_from_dict(self.base_config())
        assert system.microwave.n_bath == 0.1
        assert system.lambda_mm == 0.80
        assert system.signal.kappa == pytest.approx(TWO_PI * 25.8e6)

    def test_two_pi_suffix(self):
        cfg = {"preset": "low_coop", "microwave": {"kappa_in/2pi": 8.0e6}}
        system = params.system_from_dict(cfg)
        assert system.microwave.kappa_in == pytest.approx(TWO_PI * 8.0e6)

    def test_full_explicit_system(self):
        mode = {"omega/2pi": 193e12, "kappa_in/2pi": 10e6, "kappa_ex/2pi": 15e6}
        cfg = {"g0/2pi": 37.0,
               "pump": dict(mode), "signal": dict(mode), "stokes": dict(mode),
               "tm": {"omega/2pi": 193e12, "kappa_in/2pi": 10e6, "kappa_ex": 0.0},
               "microwave": {"omega/2pi": 8.8e9, "kappa": TWO_PI * 12e6, "eta": 0.4}}
        system = params.system_from_dict(cfg)
        assert system.g0 == pytest.approx(TWO_PI * 37.0)
        assert system.microwave.eta == pytest.approx(0.4)

    def test_missing_section_named(self):
        with pytest.raises(ConfigError) as err:
            params.system_from_dict({"g0": 1.0})
        assert "system.pump" in str(err.value)

    def test_violated_invariant_names_field(self):
        cfg = self.base_config()
        cfg["microwave"] = {"kappa_in/2pi": -5e6}
        with pytest.raises(ConfigError) as err:
            params.system_from_dict(cfg)
        assert "system.microwave" in str(err.value)

    def test_duplicate_rate_key_rejected(self):
        cfg = {"preset": "high_coop",
               "microwave": {"kappa_in": 1.0, "kappa_in/2pi": 1.0}}
        with pytest.raises(ConfigError) as err:
            params.system_from_dict(cfg)
        assert "kappa_in" in str(err.value)

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError) as err:
            params.system_from_dict({"preset": "high_coop", "typo_field": 1.0})
        assert "typo_field" in str(err.value)

    def test_suppression_key(self):
        cfg = {"preset": "high_coop", "suppression": 0.22}
        system = params.system_from_dict(cfg)
        assert params.suppression_ratio(
            system.mode_coupling_cooperativity()) == pytest.approx(0.22, rel=1e-12)

    def test_system_to_dict_round_trip(self, high_coop):
        d = params.system_to_dict(high_coop)
        rebuilt = params.system_from_dict(
            {k: v for k, v in d.items()})
        assert rebuilt == high_coop


class TestCooperativities:
    def test_quantum_cooperativity(self, sys22):
        mw = sys22.microwave.replace(n_bath=0.038 / (1 - 0.408))
        system = sys22.replace(microwave=mw)
        n = params.n_pump_for_cooperativity(system, 0.38)
        coop = system.cooperativities(n)
        assert coop.c == pytest.approx(0.38, rel=1e-12)
        assert coop.c_q == pytest.approx(0.38 / params.occupancy_of(mw), rel=1e-12)
        assert coop.suppression == pytest.approx(0.22, rel=1e-12)

    def test_cold_mode_gives_infinite_c_q(self, sys22):
        assert math.isinf(sys22.cooperativities(1.0).c_q)
