"""Four-port loss/gain bookkeeping and heterodyne baseline conversion.

The converter is treated as a four-port device: optical input/output at
the prism surface, microwave input/output at the coaxial coupler, with
setup transmissions beta1 (optical in), beta2 (optical out), beta3
(microwave in) and beta4 (microwave out).  With S_xy denoting the raw
transmission from port y in to port x out, the chains are (in dB)

    s_oo = beta1 + beta2            (off-resonant optical through)
    s_ee = beta3 + beta4            (off-resonant microwave through)
    s_oe = beta3 + eta_tot + beta2  (microwave -> optics, on resonance)
    s_eo = beta1 + eta_tot + beta4  (optics -> microwave, on resonance)

so eta_tot = sqrt(s_eo * s_oe / (s_oo * s_ee)) is independent of every
beta, and any single known beta determines the rest.  All arithmetic runs
in dB internally; the spans involved (~80 dB) would otherwise eat double
precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.constants import hbar

CHAIN_EQUATIONS = (
    "s_oo_db = beta1_db + beta2_db",
    "s_ee_db = beta3_db + beta4_db",
    "s_oe_db = beta3_db + eta_tot_db + beta2_db",
    "s_eo_db = beta1_db + eta_tot_db + beta4_db",
)


def db_to_linear(db: float) -> float:
    """Power ratio from dB."""
    return 10.0 ** (db / 10.0)


def linear_to_db(ratio: float) -> float:
    """dB from a power ratio."""
    if ratio <= 0.0:
        raise ValueError(f"power ratio must be > 0, got {ratio}")
    return 10.0 * math.log10(ratio)


@dataclass(frozen=True)
class FourPortMeasurement:
    """Raw transmissions (linear power ratios) plus the known beta4 (dB).

    ``s_eo_sq`` / ``s_oe_sq`` are the on-resonance conversion
    transmissions, ``s_oo_sq`` / ``s_ee_sq`` the off-resonance through
    transmissions; all include the setup betas.
    """

    s_eo_sq: float
    s_oe_sq: float
    s_oo_sq: float
    s_ee_sq: float
    beta4_db: float

    def __post_init__(self):
        for name in ("s_eo_sq", "s_oe_sq", "s_oo_sq", "s_ee_sq"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def from_db(cls, s_eo_db, s_oe_db, s_oo_db, s_ee_db, beta4_db):
        return cls(s_eo_sq=db_to_linear(s_eo_db), s_oe_sq=db_to_linear(s_oe_db),
                   s_oo_sq=db_to_linear(s_oo_db), s_ee_sq=db_to_linear(s_ee_db),
                   beta4_db=beta4_db)


def total_efficiency(m: FourPortMeasurement) -> float:
    """Beta-independent total conversion efficiency.

    sqrt(s_eo * s_oe / (s_oo * s_ee)); every port gain cancels between
    the conversion and through chains.
    """
    denom = m.s_oo_sq * m.s_ee_sq
    if denom <= 0.0:
        raise ValueError("through transmissions must be > 0")
    return math.sqrt(m.s_eo_sq * m.s_oe_sq / denom)


def solve_betas(m: FourPortMeasurement, eta_tot: float | None = None) -> dict:
    """Solve the chain equations for beta1..beta3 given beta4 (dB).

    Returns {"beta1_db", "beta2_db", "beta3_db"}.  Implausible signs
    (input losses coming out as gain, output gains as loss) produce a
    warning but are still returned.
    """
    if eta_tot is None:
        eta_tot = total_efficiency(m)
    eta_db = linear_to_db(eta_tot)
    s_ee_db = linear_to_db(m.s_ee_sq)
    s_oo_db = linear_to_db(m.s_oo_sq)
    s_oe_db = linear_to_db(m.s_oe_sq)

    beta3 = s_ee_db - m.beta4_db
    beta2 = s_oe_db - eta_db - beta3
    beta1 = s_oo_db - beta2
    if beta1 > 0.0 or beta3 > 0.0:
        warnings.warn("input transmission solved to a gain "
                      f"(beta1 = {beta1:.2f} dB, beta3 = {beta3:.2f} dB); "
                      "check the raw transmissions", stacklevel=2)
    if beta2 < 0.0:
        warnings.warn(f"output gain solved to a loss (beta2 = {beta2:.2f} dB); "
                      "check the raw transmissions", stacklevel=2)
    return {"beta1_db": beta1, "beta2_db": beta2, "beta3_db": beta3}


def heterodyne_baseline(p_baseline: float, beta2_db: float, bandwidth: float,
                        omega_o: float) -> float:
    """Equivalent noise quanta of the optical heterodyne baseline.

    n_add = P / (hbar omega_o * beta2_linear * BW), with the measurement
    bandwidth in Hz.
    """
    if p_baseline < 0.0 or bandwidth <= 0.0 or omega_o <= 0.0:
        raise ValueError("p_baseline must be >= 0; bandwidth and omega_o > 0")
    return p_baseline / (hbar * omega_o * db_to_linear(beta2_db) * bandwidth)


def report(m: FourPortMeasurement, heterodyne: dict | None = None) -> dict:
    """Full calibration report with the raw inputs echoed.

    ``heterodyne`` may carry {"p_baseline", "bandwidth", "omega_o"} to
    include the baseline quanta computed with the solved beta2.
    """
    eta_tot = total_efficiency(m)
    betas = solve_betas(m, eta_tot)
    out = {
        "eta_tot": eta_tot,
        "eta_tot_db": linear_to_db(eta_tot),
        **betas,
        "beta4_db": m.beta4_db,
        "chain_equations": list(CHAIN_EQUATIONS),
        "raw": {
            "s_eo_sq": m.s_eo_sq,
            "s_oe_sq": m.s_oe_sq,
            "s_oo_sq": m.s_oo_sq,
            "s_ee_sq": m.s_ee_sq,
        },
    }
    if heterodyne is not None:
        out["n_add"] = heterodyne_baseline(
            heterodyne["p_baseline"], betas["beta2_db"],
            heterodyne["bandwidth"], heterodyne["omega_o"])
    return out
