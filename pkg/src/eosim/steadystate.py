"""Linearized fluctuation dynamics in the frequency domain.

The fluctuation vector is ordered [da_o, da_o+, da_e, da_e+, da_s, da_s+,
da_r, da_r+].  The drift matrix is built with the pump held at a fixed
classical amplitude (enhanced coupling g = g0 * a_p); inverting
(-M - i*omega) and applying input-output on the external ports yields the
full input-to-output transfer coefficients for every fluctuation channel.

Spatial mode mismatch of the free-space optical coupling is handled by
splitting each optical external bath into a detected "beam" channel with
amplitude lambda_mm and an orthogonal "lost" vacuum channel with amplitude
sqrt(1 - lambda_mm^2).  The cavity still sees the full external rate, so
commutators are preserved, while coherent signals and the detected output
carry lambda_mm * sqrt(kappa_ex) exactly as in the measured response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError
from .params import SystemParams

#: input channels as (mode, bath) pairs; each carries an annihilation and a
#: creation column, so the input matrix has 18 columns.
CHANNELS = (
    ("o", "in"), ("o", "beam"), ("o", "lost"),
    ("e", "in"), ("e", "ex"),
    ("s", "in"), ("s", "beam"), ("s", "lost"),
    ("r", "in"),
)

#: output ports (detected channels): optical signal beam, microwave
#: waveguide, stokes beam.
PORTS = ("o", "e", "s")

_MODE_ROW = {"o": 0, "e": 2, "s": 4, "r": 6}
_PORT_CHANNEL = {"o": ("o", "beam"), "e": ("e", "ex"), "s": ("s", "beam")}


def channel_index(mode: str, bath: str) -> int:
    return CHANNELS.index((mode, bath))


@dataclass(frozen=True, eq=False)
class DriftMatrix:
    """8x8 drift matrix and the enhanced coupling it was built with."""

    m: np.ndarray
    g: complex


def build_drift(system: SystemParams, n_pump: float | None = None, *,
                pump_amplitude: complex | None = None) -> DriftMatrix:
    """Drift matrix for a fixed intracavity pump.

    Give either ``n_pump`` (photon number, g = g0*sqrt(n_pump) real) or a
    complex ``pump_amplitude`` (g = g0*pump_amplitude keeps the pump
    phase, e.g. taken from the tail of a time-domain run).
    """
    if (n_pump is None) == (pump_amplitude is None):
        raise ValueError("give exactly one of n_pump or pump_amplitude")
    if pump_amplitude is not None:
        g = complex(system.g0 * pump_amplitude)
    else:
        if n_pump < 0.0:
            raise ValueError(f"n_pump must be >= 0, got {n_pump}")
        g = complex(system.g0 * math.sqrt(n_pump))

    o, e, s, r = system.signal, system.microwave, system.stokes, system.tm
    jc = 1j * system.j
    gc = g.conjugate()
    m = np.zeros((8, 8), dtype=complex)

    m[0, 0] = -1j * o.delta - o.kappa / 2.0
    m[1, 1] = +1j * o.delta - o.kappa / 2.0
    m[2, 2] = -1j * e.delta - e.kappa / 2.0
    m[3, 3] = +1j * e.delta - e.kappa / 2.0
    m[4, 4] = -1j * s.delta - s.kappa / 2.0
    m[5, 5] = +1j * s.delta - s.kappa / 2.0
    m[6, 6] = -1j * r.delta - r.kappa / 2.0
    m[7, 7] = +1j * r.delta - r.kappa / 2.0

    # beam-splitter block (o <-> e) and two-mode-squeezing block (e <-> s+)
    m[0, 2] = -1j * g
    m[1, 3] = +1j * gc
    m[2, 0] = -1j * gc
    m[2, 5] = -1j * g
    m[3, 1] = +1j * g
    m[3, 4] = +1j * gc
    m[4, 3] = -1j * g
    m[5, 2] = +1j * gc

    # cross-polarization coupling (s <-> r)
    m[4, 6] = -jc
    m[5, 7] = +jc
    m[6, 4] = -jc
    m[7, 5] = +jc

    return DriftMatrix(m=m, g=g)


def input_matrix(system: SystemParams) -> np.ndarray:
    """8x18 coupling matrix from the fluctuation channels into the modes."""
    lam = system.lambda_mm
    lost = math.sqrt(max(0.0, 1.0 - lam * lam))
    amp = {
        ("o", "in"): math.sqrt(system.signal.kappa_in),
        ("o", "beam"): lam * math.sqrt(system.signal.kappa_ex),
        ("o", "lost"): lost * math.sqrt(system.signal.kappa_ex),
        ("e", "in"): math.sqrt(system.microwave.kappa_in),
        ("e", "ex"): math.sqrt(system.microwave.kappa_ex),
        ("s", "in"): math.sqrt(system.stokes.kappa_in),
        ("s", "beam"): lam * math.sqrt(system.stokes.kappa_ex),
        ("s", "lost"): lost * math.sqrt(system.stokes.kappa_ex),
        # the tm mode is treated as purely intrinsically damped (single
        # channel at the full rate)
        ("r", "in"): math.sqrt(system.tm.kappa),
    }
    k = np.zeros((8, 2 * len(CHANNELS)))
    for idx, (mode, bath) in enumerate(CHANNELS):
        row = _MODE_ROW[mode]
        k[row, 2 * idx] = amp[(mode, bath)]
        k[row + 1, 2 * idx + 1] = amp[(mode, bath)]
    return k


def _output_couplings(system: SystemParams) -> dict:
    lam = system.lambda_mm
    return {
        "o": lam * math.sqrt(system.signal.kappa_ex),
        "e": math.sqrt(system.microwave.kappa_ex),
        "s": lam * math.sqrt(system.stokes.kappa_ex),
    }


@dataclass(frozen=True, eq=False)
class ScatteringSolution:
    """Frequency-resolved transfer coefficients, input channel -> output port.

    ``d`` has shape (n_omega, 3, 18): rows are the annihilation operators
    of the detected output ports in :data:`PORTS` order, columns alternate
    annihilation / creation of the channels in :data:`CHANNELS` order.
    """

    omega: np.ndarray
    d: np.ndarray

    def coefficient(self, out_port: str, mode: str, bath: str,
                    conjugate: bool = False) -> np.ndarray:
        """Transfer coefficient from one input channel into an output port."""
        col = 2 * channel_index(mode, bath) + (1 if conjugate else 0)
        return self.d[:, PORTS.index(out_port), col]

    def transfer(self, out_port: str, in_port: str) -> np.ndarray:
        """Coherent-signal transfer between detected ports (e.g. "o" <- "e")."""
        mode, bath = _PORT_CHANNEL[in_port]
        return self.coefficient(out_port, mode, bath)

    def efficiency(self, out_port: str, in_port: str) -> np.ndarray:
        return np.abs(self.transfer(out_port, in_port)) ** 2

    def a_coefficients(self, out_port: str) -> np.ndarray:
        """(n_omega, 9) coefficients from annihilation inputs."""
        return self.d[:, PORTS.index(out_port), 0::2]

    def b_coefficients(self, out_port: str) -> np.ndarray:
        """(n_omega, 9) coefficients from creation inputs (gain channels)."""
        return self.d[:, PORTS.index(out_port), 1::2]


def scattering(drift: DriftMatrix, system: SystemParams, omega) -> ScatteringSolution:
    """Solve the fluctuation scattering problem at analysis offsets ``omega``.

    ``omega`` may be a scalar or an array (rad/s, offset from the rotating
    frame carriers).  Raises :class:`SingularMatrixError` naming the first
    offending frequency if (-M - i*omega) is not invertible.
    """
    omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
    k = input_matrix(system)
    eye = np.eye(8, dtype=complex)
    a = -drift.m[None, :, :] - 1j * omega_arr[:, None, None] * eye[None, :, :]
    try:
        x = np.linalg.solve(a, np.broadcast_to(k, (omega_arr.size, 8, k.shape[1])))
    except np.linalg.LinAlgError:
        for i, w in enumerate(omega_arr):
            try:
                np.linalg.solve(a[i], k)
            except np.linalg.LinAlgError:
                raise SingularMatrixError(float(w)) from None
        raise

    out = _output_couplings(system)
    d = np.empty((omega_arr.size, len(PORTS), k.shape[1]), dtype=complex)
    for p, port in enumerate(PORTS):
        d[:, p, :] = out[port] * x[:, _MODE_ROW[port], :]
        # direct reflection of the incoming field on the detected channel
        d[:, p, 2 * channel_index(*_PORT_CHANNEL[port])] -= 1.0
    return ScatteringSolution(omega=omega_arr, d=d)


def efficiency_closed_form(c: float, c_j: float, eta_e: float, eta_o: float,
                           lambda_mm: float) -> float:
    """On-resonance total conversion efficiency including the gain.

    4 lambda^2 eta_o eta_e C (1 + 1/C_J)^2 / (1 + C + 1/C_J)^2, written in
    the form 4C(1+C_J)^2/(1+C_J+C*C_J)^2 which handles C_J = 0 (maximum
    gain, reduces to 4 lambda^2 eta_o eta_e C) without a singularity.
    C_J = inf is the fully split two-mode limit.
    """
    if c < 0.0 or c_j < 0.0:
        raise ValueError("c and c_j must be >= 0")
    pref = 4.0 * lambda_mm**2 * eta_e * eta_o * c
    if math.isinf(c_j):
        return pref / (1.0 + c) ** 2
    return pref * (1.0 + c_j) ** 2 / (1.0 + c_j + c * c_j) ** 2


def efficiency_two_mode(c: float, eta_e: float, eta_o: float,
                        lambda_mm: float) -> float:
    """Fully sideband-suppressed limit: 4 lambda^2 eta_e eta_o C / (1+C)^2."""
    if c < 0.0:
        raise ValueError("c must be >= 0")
    return 4.0 * lambda_mm**2 * eta_e * eta_o * c / (1.0 + c) ** 2


def sweep_to_csv(path, solution: ScatteringSolution, pairs, meta=None):
    """Export |S_ij|^2 and arg S_ij over the sweep for (out, in) port pairs."""
    from .io import write_csv

    cols = {"omega": solution.omega}
    for out_port, in_port in pairs:
        s = solution.transfer(out_port, in_port)
        cols[f"s_{out_port}{in_port}_mag2"] = np.abs(s) ** 2
        cols[f"s_{out_port}{in_port}_arg"] = np.angle(s)
    write_csv(path, cols, meta=meta)
