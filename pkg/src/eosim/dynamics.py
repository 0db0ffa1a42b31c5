"""Time-domain integration of the five coupled coherent mode equations.

Everything runs in the rotating frames of the drive carriers; carrier
offsets appear only as the per-mode detunings, so MHz linewidths can be
resolved with nanosecond steps.  The pump mode is integrated dynamically
(its own equation, including back-action from the sidebands); the
frequency-domain linearization in :mod:`eosim.steadystate` instead holds
the pump at a fixed amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import IntegrationError
from .params import SystemParams

DEFAULT_DT = 0.5e-9
STABILITY_BOUND = 0.1
DIVERGENCE_LIMIT = 1e12

# fraction of a raised-cosine ramp spanned between 10% and 90% amplitude
_RC_RISE_FRACTION = 0.5903344955371301


def _uniform_step(t: np.ndarray) -> float:
    if t.ndim != 1 or t.size < 2:
        raise ValueError("time grid needs at least two samples")
    dt = np.diff(t)
    if not np.all(dt > 0.0):
        raise ValueError("time grid must be strictly increasing")
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise ValueError("time grid must be uniform")
    return float(dt[0])


@dataclass(frozen=True, eq=False)
class DriveSet:
    """Complex drive envelopes on a shared uniform time grid.

    t : time grid (s)
    f_pump, f_mw, f_opt : envelopes of the optical pump, microwave signal
        and optical signal drives (sqrt(photons/s))
    """

    t: np.ndarray
    f_pump: np.ndarray
    f_mw: np.ndarray
    f_opt: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "t", t)
        dt = _uniform_step(t)
        for name in ("f_pump", "f_mw", "f_opt"):
            env = np.asarray(getattr(self, name), dtype=complex)
            if env.shape != t.shape:
                raise ValueError(f"{name} must match the time grid shape")
            object.__setattr__(self, name, env)
        object.__setattr__(self, "dt", dt)

    dt: float = field(init=False, repr=False, default=0.0)

    @classmethod
    def cw(cls, t, f_pump=0.0, f_mw=0.0, f_opt=0.0) -> "DriveSet":
        """Constant (or per-sample) drives broadcast onto the grid."""
        t = np.asarray(t, dtype=float)
        full = lambda v: np.broadcast_to(np.asarray(v, dtype=complex), t.shape).copy()
        return cls(t=t, f_pump=full(f_pump), f_mw=full(f_mw), f_opt=full(f_opt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Integrated intracavity amplitudes and output fields.

    Amplitudes are in sqrt(photons); outputs in sqrt(photons/s).
    """

    t: np.ndarray
    a_p: np.ndarray
    a_o: np.ndarray
    a_s: np.ndarray
    a_e: np.ndarray
    a_r: np.ndarray
    out_mw: np.ndarray
    out_opt: np.ndarray

    FIELDS = ("a_p", "a_o", "a_s", "a_e", "a_r", "out_mw", "out_opt")

    def to_csv(self, path, meta=None):
        from .io import write_csv

        cols = {"t": self.t}
        for name in self.FIELDS:
            arr = getattr(self, name)
            cols[f"{name}_re"] = arr.real
            cols[f"{name}_im"] = arr.imag
        write_csv(path, cols, meta=meta)


def square_pulse(t, t_on, t_off, rise_time, amplitude=1.0,
                 carrier_detuning=0.0) -> np.ndarray:
    """Smooth square envelope with raised-cosine edges.

    ``rise_time`` is the 10-90 time of each edge (0 gives an ideal step).
    A nonzero ``carrier_detuning`` (rad/s) rotates the envelope phase as
    exp(-i*detuning*t).
    """
    if not t_on < t_off:
        raise ValueError("t_on must be < t_off")
    if rise_time < 0.0:
        raise ValueError("rise_time must be >= 0")
    t = np.asarray(t, dtype=float)
    if rise_time == 0.0:
        env = ((t >= t_on) & (t < t_off)).astype(float)
    else:
        ramp = rise_time / _RC_RISE_FRACTION
        x_up = np.clip((t - t_on) / ramp, 0.0, 1.0)
        x_down = np.clip((t - t_off) / ramp, 0.0, 1.0)
        env = 0.5 * (1.0 - np.cos(np.pi * x_up)) - 0.5 * (1.0 - np.cos(np.pi * x_down))
    out = amplitude * env.astype(complex)
    if carrier_detuning != 0.0:
        out *= np.exp(-1j * carrier_detuning * t)
    return out


def iq_modulated_pulse(t, base, mod_freq) -> np.ndarray:
    """Imprint a linear phase ramp: base * exp(i 2 pi f t).

    The modulus is untouched; the I and Q quadratures become cosine and
    sine at ``mod_freq`` (Hz).
    """
    t = np.asarray(t, dtype=float)
    return np.asarray(base, dtype=complex) * np.exp(2j * np.pi * mod_freq * t)


def _linear_coefficients(system: SystemParams) -> np.ndarray:
    modes = (system.pump, system.signal, system.stokes, system.microwave, system.tm)
    return np.array([-1j * m.delta - 0.5 * m.kappa for m in modes], dtype=complex)


def integrate(system: SystemParams, drives: DriveSet, initial=None,
              method: str = "rk4") -> Trajectory:
    """Integrate the coherent equations of motion over the drive grid.

    ``method`` is "rk4" (default) or "euler"; the Euler mode reproduces
    first-order reference solutions at matched steps.  Integration aborts
    with :class:`IntegrationError` if any amplitude exceeds 1e12 or turns
    NaN, reporting the step and mode.

    Raises ValueError if the step size violates the stability guard
    dt * (kappa_max/2 + |delta|_max) > 0.1.
    """
    if method not in ("rk4", "euler"):
        raise ValueError(f"method must be 'rk4' or 'euler', got {method!r}")
    order = 4 if method == "rk4" else 1

    lin = _linear_coefficients(system)
    rate_scale = np.abs(lin.real).max() + np.abs(lin.imag).max()
    if drives.dt * rate_scale > STABILITY_BOUND:
        raise ValueError(
            f"dt = {drives.dt:.3e} s too coarse: dt*(kappa_max/2 + |delta|_max) = "
            f"{drives.dt * rate_scale:.3f} exceeds {STABILITY_BOUND}")

    if initial is None:
        y0 = np.zeros(5, dtype=complex)
    else:
        y0 = np.asarray(initial, dtype=complex)
        if y0.shape != (5,):
            raise ValueError("initial state must have five amplitudes (p, o, s, e, r)")

    cpl_o = system.lambda_mm * math.sqrt(system.signal.kappa_ex)
    cpl_e = math.sqrt(system.microwave.kappa_ex)

    f_p = np.ascontiguousarray(drives.f_pump)
    f_o = np.ascontiguousarray(drives.f_opt)
    f_e = np.ascontiguousarray(drives.f_mw)
    if order == 4:
        fm_p = _kernels.drive_midpoints(f_p)
        fm_o = _kernels.drive_midpoints(f_o)
        fm_e = _kernels.drive_midpoints(f_e)
    else:
        fm_p, fm_o, fm_e = f_p[:-1], f_o[:-1], f_e[:-1]

    traj, status, step, mode, mag = _kernels.integrate_loop(
        y0, f_p, f_o, f_e, fm_p, fm_o, fm_e, drives.dt, lin,
        cpl_o, cpl_e, system.g0, system.j, order, DIVERGENCE_LIMIT)
    if status != _kernels.STATUS_OK:
        raise IntegrationError(step, mode, mag)

    out_mw = cpl_e * traj[:, 3] - drives.f_mw
    out_opt = cpl_o * traj[:, 1] - drives.f_opt
    return Trajectory(t=drives.t, a_p=traj[:, 0], a_o=traj[:, 1], a_s=traj[:, 2],
                      a_e=traj[:, 3], a_r=traj[:, 4], out_mw=out_mw, out_opt=out_opt)


@dataclass(frozen=True, eq=False)
class ConversionResult:
    """Trajectory plus the instantaneous conversion-efficiency trace."""

    trajectory: Trajectory
    efficiency: np.ndarray
    direction: str
    input_flux: float
    plateau: float
    peak: float


def conversion_run(system: SystemParams, t, pump_envelope, signal_envelope,
                   direction: str, initial=None, method: str = "rk4") -> ConversionResult:
    """Drive a signal on one port and measure the converted output flux.

    ``direction`` is "mw_to_opt" (signal on the microwave port, converted
    output on the optical port) or "opt_to_mw".  The efficiency trace is
    |converted output|^2 normalized by the plateau input flux; a CW signal
    that preloads the cavity before the pump pulse reproduces the leading
    overshoot of the converted pulse.
    """
    if direction == "mw_to_opt":
        drives = DriveSet(t=np.asarray(t, float), f_pump=pump_envelope,
                          f_mw=signal_envelope,
                          f_opt=np.zeros_like(np.asarray(t, float), dtype=complex))
    elif direction == "opt_to_mw":
        drives = DriveSet(t=np.asarray(t, float), f_pump=pump_envelope,
                          f_mw=np.zeros_like(np.asarray(t, float), dtype=complex),
                          f_opt=signal_envelope)
    else:
        raise ValueError(f"direction must be 'mw_to_opt' or 'opt_to_mw', got {direction!r}")

    traj = integrate(system, drives, initial=initial, method=method)
    converted = traj.out_opt if direction == "mw_to_opt" else traj.out_mw

    input_flux = float(np.max(np.abs(signal_envelope)) ** 2)
    if input_flux == 0.0:
        eff = np.zeros_like(drives.t)
        return ConversionResult(traj, eff, direction, 0.0, 0.0, 0.0)
    eff = np.abs(converted) ** 2 / input_flux

    pump_power = np.abs(drives.f_pump) ** 2
    signal_power = np.abs(np.asarray(signal_envelope)) ** 2
    on = np.zeros_like(pump_power, dtype=bool)
    if pump_power.max() > 0.0:
        on = (pump_power > 0.5 * pump_power.max()) & (
            signal_power > 0.5 * signal_power.max())
    if on.any():
        idx = np.flatnonzero(on)
        peak = float(eff[idx].max())
        tail = idx[int(0.6 * idx.size):]
        plateau = float(np.median(eff[tail])) if tail.size else peak
    else:
        peak = plateau = 0.0
    return ConversionResult(traj, eff, direction, input_flux, plateau, peak)


def rise_time_10_90(t, y, y_ref=None) -> float:
    """10-90 rise time of a power trace against its settled level.

    ``y_ref`` defaults to the median of the last quarter of the trace;
    crossings are located by linear interpolation.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if y_ref is None:
        y_ref = float(np.median(y[int(0.75 * y.size):]))
    if y_ref <= 0.0:
        raise ValueError("reference level must be positive")

    def first_crossing(level):
        above = y >= level
        idx = np.flatnonzero(above)
        if idx.size == 0 or idx[0] == 0:
            raise ValueError("trace does not cross the requested level cleanly")
        i = idx[0]
        frac = (level - y[i - 1]) / (y[i] - y[i - 1])
        return t[i - 1] + frac * (t[i] - t[i - 1])

    return first_crossing(0.9 * y_ref) - first_crossing(0.1 * y_ref)
