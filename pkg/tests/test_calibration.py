import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.constants import hbar

from eosim import calibration as cal

TWO_PI = 2.0 * np.pi

# published calibration point: beta4 known, the rest solved
BETA1, BETA2, BETA3, BETA4 = -6.33, 18.63, -74.92, 81.75
ETA_TOT = 0.114
ETA_DB = 10.0 * math.log10(ETA_TOT)


def paper_measurement():
    """Raw transmissions reconstructed through the documented chains."""
    return cal.FourPortMeasurement.from_db(
        s_eo_db=BETA1 + ETA_DB + BETA4,
        s_oe_db=BETA3 + ETA_DB + BETA2,
        s_oo_db=BETA1 + BETA2,
        s_ee_db=BETA3 + BETA4,
        beta4_db=BETA4,
    )


class TestDb:
    @given(st.floats(-120.0, 120.0))
    def test_round_trip(self, db):
        assert cal.linear_to_db(cal.db_to_linear(db)) == pytest.approx(db, abs=1e-12)

    def test_nonpositive_ratio(self):
        with pytest.raises(ValueError):
            cal.linear_to_db(0.0)


class TestTotalEfficiency:
    def test_symmetric_case(self):
        # s_eo = s_oe = eta * sqrt(s_oo * s_ee) gives back eta
        eta = 0.15
        s_oo, s_ee = 17.0, 4.8
        m = cal.FourPortMeasurement(
            s_eo_sq=eta * math.sqrt(s_oo * s_ee), s_oe_sq=eta * math.sqrt(s_oo * s_ee),
            s_oo_sq=s_oo, s_ee_sq=s_ee, beta4_db=0.0)
        assert cal.total_efficiency(m) == pytest.approx(eta, rel=1e-12)

    def test_paper_scale_value(self):
        assert cal.total_efficiency(paper_measurement()) == pytest.approx(
            ETA_TOT, rel=1e-9)

    @given(st.floats(-20, 20), st.floats(-20, 20), st.floats(-20, 20),
           st.floats(-20, 20))
    def test_invariant_under_port_gains(self, g1, g2, g3, g4):
        m = paper_measurement()
        scaled = cal.FourPortMeasurement(
            s_eo_sq=m.s_eo_sq * cal.db_to_linear(g1 + g4),
            s_oe_sq=m.s_oe_sq * cal.db_to_linear(g3 + g2),
            s_oo_sq=m.s_oo_sq * cal.db_to_linear(g1 + g2),
            s_ee_sq=m.s_ee_sq * cal.db_to_linear(g3 + g4),
            beta4_db=m.beta4_db + g4)
        assert cal.total_efficiency(scaled) == pytest.approx(
            cal.total_efficiency(m), rel=1e-9)

    def test_positive_raw_required(self):
        with pytest.raises(ValueError):
            cal.FourPortMeasurement(s_eo_sq=0.0, s_oe_sq=1.0, s_oo_sq=1.0,
                                    s_ee_sq=1.0, beta4_db=0.0)


class TestSolveBetas:
    def test_reproduces_published_betas(self):
        betas = cal.solve_betas(paper_measurement())
        assert betas["beta1_db"] == pytest.approx(BETA1, abs=0.01)
        assert betas["beta2_db"] == pytest.approx(BETA2, abs=0.01)
        assert betas["beta3_db"] == pytest.approx(BETA3, abs=0.01)

    def test_unity_chain(self):
        m = cal.FourPortMeasurement(s_eo_sq=1.0, s_oe_sq=1.0, s_oo_sq=1.0,
                                    s_ee_sq=1.0, beta4_db=0.0)
        betas = cal.solve_betas(m, eta_tot=1.0)
        for value in betas.values():
            assert value == pytest.approx(0.0, abs=1e-12)

    def test_beta4_shift_propagates_through_chains(self):
        # with the raw transmissions fixed, claiming a beta4 higher by X
        # pushes beta3 down by X; the conversion chain then forces beta2
        # up and beta1 down by the same amount (eta_tot is beta-free, so
        # the sums beta1+beta2 and beta3+beta4 are pinned by the raws)
        m = paper_measurement()
        shifted = cal.FourPortMeasurement(
            s_eo_sq=m.s_eo_sq, s_oe_sq=m.s_oe_sq, s_oo_sq=m.s_oo_sq,
            s_ee_sq=m.s_ee_sq, beta4_db=m.beta4_db + 10.0)
        a, b = cal.solve_betas(m), cal.solve_betas(shifted)
        assert b["beta3_db"] == pytest.approx(a["beta3_db"] - 10.0, abs=1e-9)
        assert b["beta2_db"] == pytest.approx(a["beta2_db"] + 10.0, abs=1e-9)
        assert b["beta1_db"] == pytest.approx(a["beta1_db"] - 10.0, abs=1e-9)

    def test_implausible_sign_warns(self):
        m = cal.FourPortMeasurement(s_eo_sq=1.0, s_oe_sq=1.0, s_oo_sq=100.0,
                                    s_ee_sq=100.0, beta4_db=0.0)
        with pytest.warns(UserWarning):
            betas = cal.solve_betas(m, eta_tot=0.1)
        assert "beta3_db" in betas


class TestHeterodyneBaseline:
    OMEGA_O = TWO_PI * 193e12
    BW = 200e6

    def test_unit_case(self):
        assert cal.heterodyne_baseline(hbar * self.OMEGA_O, 0.0, 1.0,
                                       self.OMEGA_O) == pytest.approx(1.0)

    def test_half_bandwidth_doubles(self):
        p = 1e-8
        full = cal.heterodyne_baseline(p, BETA2, self.BW, self.OMEGA_O)
        half = cal.heterodyne_baseline(p, BETA2, self.BW / 2, self.OMEGA_O)
        assert half == pytest.approx(2.0 * full, rel=1e-12)

    def test_paper_value_round_trip(self):
        # baseline power reconstructed from the published numbers
        p = 34.3 * hbar * self.OMEGA_O * cal.db_to_linear(BETA2) * self.BW
        n_add = cal.heterodyne_baseline(p, BETA2, self.BW, self.OMEGA_O)
        assert n_add == pytest.approx(34.3, abs=0.1)

    def test_domain(self):
        with pytest.raises(ValueError):
            cal.heterodyne_baseline(1.0, 0.0, 0.0, self.OMEGA_O)


class TestReport:
    def test_report_contents(self):
        p = 34.3 * hbar * TWO_PI * 193e12 * cal.db_to_linear(BETA2) * 200e6
        rep = cal.report(paper_measurement(),
                         heterodyne={"p_baseline": p, "bandwidth": 200e6,
                                     "omega_o": TWO_PI * 193e12})
        assert rep["eta_tot"] == pytest.approx(ETA_TOT, rel=1e-9)
        assert rep["beta4_db"] == BETA4
        assert rep["n_add"] == pytest.approx(34.3, abs=0.1)
        assert rep["raw"]["s_oo_sq"] > 0
        assert any("beta1" in eq for eq in rep["chain_equations"])
