"""Parameter estimation from characterization traces.

Spectra are fit in normalized form (reflection divided by the off-resonant
baseline), so the dip and split-mode models have no free normalization and
are normalization-sensitive; the time-domain reflection fit carries an
explicit ``scale`` parameter and is invariant under uniform rescaling of
the trace.

A single coupling distance cannot separate the mode-match amplitude
``lambda_mm`` from ``kappa_ex``: the response depends on them only through
u = lambda_mm^2 * kappa_ex.  Single-trace fits therefore report ``u``
(plus the split when ``lambda_mm`` is supplied), and
:func:`fit_optical_dip_multi` breaks the degeneracy with piezo-stepped
traces that share kappa_in and lambda_mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import _kernels

_EPS = 1e-300


@dataclass(frozen=True, eq=False)
class TraceData:
    """A measured magnitude trace on a frequency (rad/s) or time (s) axis."""

    x: np.ndarray
    y: np.ndarray
    weight: np.ndarray | None = None
    units: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("trace needs at least two samples")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("x axis must be strictly increasing")
        if y.shape != x.shape or not np.all(np.isfinite(y)):
            raise ValueError("y must be finite and match x")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.weight is not None:
            w = np.asarray(self.weight, dtype=float)
            if w.shape != x.shape:
                raise ValueError("weight must match x")
            object.__setattr__(self, "weight", w)


@dataclass(frozen=True)
class FitResult:
    """Named estimates with quality indicators.

    ``covariance_proxy`` holds one-sigma sensitivity estimates per
    parameter from the Jacobian at the solution (inf where the data does
    not constrain a parameter).  ``flags`` collects degeneracy and domain
    annotations.
    """

    parameters: dict
    residual_norm: float
    covariance_proxy: dict
    converged: bool
    flags: tuple = ()
    message: str = ""

    def __post_init__(self):
        if self.residual_norm < 0.0:
            raise ValueError("residual_norm must be >= 0")

    def to_json_dict(self) -> dict:
        return {
            "parameters": {k: float(v) for k, v in self.parameters.items()},
            "residual_norm": float(self.residual_norm),
            "covariance_proxy": {k: float(v) for k, v in self.covariance_proxy.items()},
            "converged": bool(self.converged),
            "flags": list(self.flags),
            "message": self.message,
        }


def _jacobian_fd(residuals, x, scale=1e-6):
    r0 = np.asarray(residuals(x), dtype=float)
    jac = np.empty((r0.size, x.size))
    for i in range(x.size):
        h = scale * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        jac[:, i] = (np.asarray(residuals(xp), dtype=float) - r0) / h
    return r0, jac


def _sensitivities(residuals, x, names, jac=None):
    if jac is None:
        r0, jac = _jacobian_fd(residuals, x)
    else:
        r0 = np.asarray(residuals(x), dtype=float)
    dof = max(r0.size - x.size, 1)
    s2 = float(r0 @ r0) / dof
    jtj = jac.T @ jac
    try:
        cov = s2 * np.linalg.pinv(jtj)
        sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        # a vanishing curvature direction means the parameter is unconstrained
        sig[np.diag(jtj) <= _EPS] = np.inf
    except np.linalg.LinAlgError:
        sig = np.full(x.size, np.inf)
    return dict(zip(names, sig))


def least_squares(residuals, initial, bounds=None, method: str = "simplex",
                  names=None, max_nfev: int | None = None) -> FitResult:
    """Minimize the sum of squared residuals.

    ``method`` is "simplex" (derivative-free Nelder-Mead, the default) or
    "gauss-newton" (damped, via a trust-region reflective step).  Both are
    deterministic.  ``bounds`` is a sequence of (lo, hi) pairs (None for
    unbounded); bound-active solutions are returned clamped at the bound.
    """
    x0 = np.asarray(initial, dtype=float)
    if names is None:
        names = [f"p{i}" for i in range(x0.size)]
    r0 = np.asarray(residuals(x0), dtype=float)
    if not np.all(np.isfinite(r0)):
        raise ValueError("residuals are not finite at the initial point")

    if method == "simplex":
        cost = lambda p: float(np.sum(np.asarray(residuals(p), dtype=float) ** 2))
        opts = {"xatol": 1e-10, "fatol": 1e-14, "maxiter": max_nfev or 4000,
                "maxfev": max_nfev or 4000}
        res = scipy.optimize.minimize(cost, x0, method="Nelder-Mead",
                                      bounds=bounds, options=opts)
        x, converged, message = res.x, bool(res.success), res.message
        jac = None
    elif method == "gauss-newton":
        if bounds is None:
            lo, hi = -np.inf, np.inf
        else:
            lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
            hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
        res = scipy.optimize.least_squares(
            residuals, x0, bounds=(lo, hi), method="trf",
            xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=max_nfev)
        x, converged, message = res.x, res.status > 0, res.message
        jac = np.asarray(res.jac)
    else:
        raise ValueError(f"unknown method {method!r}")

    r_final = np.asarray(residuals(x), dtype=float)
    return FitResult(
        parameters=dict(zip(names, x)),
        residual_norm=float(np.linalg.norm(r_final)),
        covariance_proxy=_sensitivities(residuals, x, names, jac=jac),
        converged=converged,
        message=str(message),
    )


# --- frequency-domain models --------------------------------------------------

def optical_dip_model(x, x0, kappa_o, u):
    """Normalized reflection dip; u = lambda_mm^2 * kappa_ex."""
    return 1.0 - 4.0 * u * (kappa_o - u) / (kappa_o**2 + 4.0 * (x - x0) ** 2)


def split_mode_model(x, j, kappa_r, delta_s, delta_r, kappa_s, u):
    """Normalized reflection of the hybridized stokes / tm mode pair.

    The probe at offset ``x`` sees detunings (delta - x); ``u`` is the
    effective external coupling lambda_mm^2 * kappa_ex of the TE mode.
    """
    chi_r = 1j * (delta_r - x) + kappa_r / 2.0
    chi_eff = 1.0 / (1j * (delta_s - x) + kappa_s / 2.0 + j * j / chi_r)
    return np.abs(u * chi_eff - 1.0) ** 2


def _dip_guess(x, y, overcoupled):
    i0 = int(np.argmin(y))
    x0 = x[i0]
    depth = float(np.clip(1.0 - y[i0], 1e-6, 0.999999))
    half = 1.0 - depth / 2.0
    below = y <= half
    idx = np.flatnonzero(below)
    if idx.size >= 2:
        fwhm = x[idx[-1]] - x[idx[0]]
    else:
        fwhm = (x[-1] - x[0]) / 10.0
    kappa = max(fwhm, (x[1] - x[0]) * 4.0)
    root = math.sqrt(max(0.0, 1.0 - depth))
    u = kappa * (1.0 + root) / 2.0 if overcoupled else kappa * (1.0 - root) / 2.0
    return x0, kappa, max(u, kappa * 1e-4)


def fit_optical_dip(data: TraceData, lambda_mm: float | None = None,
                    overcoupled: bool = False,
                    max_nfev: int | None = None) -> FitResult:
    """Fit the normalized optical reflection dip.

    Estimates the total linewidth ``kappa_o``, the dip center ``x0`` and
    the effective coupling ``u`` = lambda_mm^2 kappa_ex.  If ``lambda_mm``
    is given the split into kappa_ex is reported as well; otherwise the
    result is flagged ``lambda_unresolved``.  An essentially flat trace is
    flagged ``non_identifiable`` (u -> 0 and lambda_mm -> 0 fit equally).
    """
    x, y = data.x, data.y
    x0g, kg, ug = _dip_guess(x, y, overcoupled)

    def residuals(p):
        return optical_dip_model(x, p[0], p[1], p[2]) - y

    span = x[-1] - x[0]
    result = least_squares(
        residuals, [x0g, kg, ug],
        bounds=[(x[0] - span, x[-1] + span), (span * 1e-6, None), (0.0, None)],
        method="gauss-newton", names=["x0", "kappa_o", "u"], max_nfev=max_nfev)

    params = dict(result.parameters)
    kappa_o, u = params["kappa_o"], params["u"]
    flags = list(result.flags)
    depth = 4.0 * u * (kappa_o - u) / kappa_o**2
    if depth < 1e-3:
        flags.append("non_identifiable")
    if lambda_mm is None:
        flags.append("lambda_unresolved")
    else:
        params["lambda_mm"] = lambda_mm
        params["kappa_ex"] = u / lambda_mm**2
        if params["kappa_ex"] > kappa_o:
            flags.append("unphysical_coupling")
    return FitResult(parameters=params, residual_norm=result.residual_norm,
                     covariance_proxy=result.covariance_proxy,
                     converged=result.converged, flags=tuple(flags),
                     message=result.message)


def fit_optical_dip_multi(traces, overcoupled: bool = False) -> FitResult:
    """Joint dip fit over piezo-stepped coupling distances.

    All traces share ``kappa_in`` and ``lambda_mm`` while each has its own
    external rate, which breaks the single-trace lambda/kappa_ex
    degeneracy (u_i = lambda^2 (kappa_o_i - kappa_in) is a line in the
    (kappa_o, u) plane).
    """
    traces = list(traces)
    if len(traces) < 2:
        raise ValueError("need at least two coupling distances to resolve lambda_mm")
    singles = [fit_optical_dip(t, overcoupled=overcoupled) for t in traces]
    kappa_os = np.array([s.parameters["kappa_o"] for s in singles])
    us = np.array([s.parameters["u"] for s in singles])
    x0s = [s.parameters["x0"] for s in singles]
    slope, intercept = np.polyfit(kappa_os, us, 1)
    lam0 = math.sqrt(min(max(slope, 1e-4), 1.0))
    kin0 = max(-intercept / max(slope, 1e-12), 0.1 * kappa_os.min())

    # parameter vector: [kappa_in, lambda_mm, kappa_ex_0.., x0_0..]
    n = len(traces)

    def residuals(p):
        kin, lam = p[0], p[1]
        out = []
        for i, t in enumerate(traces):
            kex = p[2 + i]
            x0 = p[2 + n + i]
            out.append(optical_dip_model(t.x, x0, kin + kex, lam**2 * kex) - t.y)
        return np.concatenate(out)

    kex0 = np.clip(kappa_os - kin0, 1e-3 * kappa_os, None)
    p0 = np.concatenate([[kin0, lam0], kex0, x0s])
    bounds = ([(0.0, None), (1e-3, 1.0)] + [(0.0, None)] * n
              + [(None, None)] * n)
    names = (["kappa_in", "lambda_mm"] + [f"kappa_ex_{i}" for i in range(n)]
             + [f"x0_{i}" for i in range(n)])
    result = least_squares(residuals, p0, bounds=bounds, method="gauss-newton",
                           names=names)
    params = dict(result.parameters)
    for i in range(n):
        params[f"kappa_o_{i}"] = params["kappa_in"] + params[f"kappa_ex_{i}"]
    return FitResult(parameters=params, residual_norm=result.residual_norm,
                     covariance_proxy=result.covariance_proxy,
                     converged=result.converged, flags=result.flags,
                     message=result.message)


def fit_avoided_crossing(data: TraceData, *, kappa_s: float,
                         kappa_ex_eff: float,
                         max_nfev: int | None = None) -> FitResult:
    """Fit the split-mode reflection for {j, kappa_r, delta_s, delta_r}.

    ``kappa_s`` (TE total linewidth) and ``kappa_ex_eff`` (lambda_mm^2 *
    kappa_ex, from the dip characterization) are held fixed.
    """
    x, y = data.x, data.y
    i0 = int(np.argmin(y))
    x1 = x[i0]
    # mask a linewidth around the first dip and look for the second branch
    mask = np.abs(x - x1) > kappa_s
    if mask.any():
        x2 = x[mask][int(np.argmin(y[mask]))]
    else:
        x2 = x1
    mid = 0.5 * (x1 + x2)
    half = 0.5 * abs(x2 - x1)
    j0 = max(0.8 * half, kappa_s / 10.0)

    def residuals(p):
        return split_mode_model(x, p[0], p[1], p[2], p[3], kappa_s, kappa_ex_eff) - y

    span = x[-1] - x[0]
    result = least_squares(
        residuals, [j0, kappa_s / 3.0, mid, mid],
        bounds=[(0.0, None), (span * 1e-6, None), (None, None), (None, None)],
        method="gauss-newton", names=["j", "kappa_r", "delta_s", "delta_r"],
        max_nfev=max_nfev)
    return result


# --- time-domain reflection fit -----------------------------------------------

def _reflection_model(t, env, kappa, u, scale, order=4):
    dt = float(t[1] - t[0])
    lin = complex(-kappa / 2.0)
    cpl = math.sqrt(max(u, 0.0))
    fm = _kernels.drive_midpoints(env) if order == 4 else env[:-1]
    a, status, *_ = _kernels.mode_loop(0.0 + 0.0j, env, fm, dt, lin, cpl,
                                       order, 1e12)
    if status != _kernels.STATUS_OK:
        return np.full(t.size, 1e6)
    return scale * np.abs(cpl * a - env) ** 2


def fit_time_reflection(data: TraceData, input_pulse: TraceData,
                        lambda_mm: float = 1.0,
                        overcoupled: bool = False,
                        max_nfev: int | None = None) -> FitResult:
    """Fit {kappa, kappa_ex} from an on-resonance square-pulse reflection.

    ``input_pulse`` is the off-resonance reflection of the same pulse; it
    reflects unmodified and serves as the drive envelope.  Both traces are
    normalized to the off-resonance plateau, and a free ``scale`` keeps
    the result invariant under uniform rescaling of the data.  For the
    free-space optical port pass the known ``lambda_mm``; the fit itself
    constrains only u = lambda_mm^2 * kappa_ex.
    """
    t = data.x
    if input_pulse.x.shape == t.shape and np.allclose(input_pulse.x, t):
        y_off = input_pulse.y
    else:
        y_off = np.interp(t, input_pulse.x, input_pulse.y)
    ref = float(np.median(y_off[y_off > 0.5 * y_off.max()]))
    if ref <= 0.0:
        raise ValueError("input pulse trace has no usable plateau")
    env = np.sqrt(np.clip(y_off / ref, 0.0, None)).astype(complex)
    y = data.y / ref

    dt = float(t[1] - t[0])
    kappa_max = 2.0 * 0.1 / dt  # stability guard of the stepper

    # decay rate guess from the post-pulse emission tail
    on = np.abs(env) > 1e-3
    kappa0 = 10.0 / (t[-1] - t[0])
    if on.any() and not on[-1]:
        i_end = int(np.flatnonzero(on)[-1])
        tail = slice(i_end + max(3, int(0.01 * t.size)), None)
        yt = y[tail]
        tt = t[tail]
        good = yt > 1e-12
        if good.sum() > 10:
            slope = np.polyfit(tt[good], np.log(yt[good]), 1)[0]
            if slope < 0.0:
                kappa0 = min(-slope, 0.5 * kappa_max)
    r_ss = float(np.clip(np.median(y[on]) if on.any() else 1.0, 0.0, 1.0))
    root = math.sqrt(r_ss)
    u0 = kappa0 * (1.0 + root) / 2.0 if overcoupled else kappa0 * (1.0 - root) / 2.0
    u0 = max(u0, 1e-3 * kappa0)

    def residuals(p):
        return _reflection_model(t, env, p[0], p[1], p[2]) - y

    result = least_squares(
        residuals, [kappa0, u0, 1.0],
        bounds=[(1.0 / (t[-1] - t[0]), kappa_max), (0.0, None), (1e-6, None)],
        method="gauss-newton", names=["kappa", "u", "scale"], max_nfev=max_nfev)

    params = dict(result.parameters)
    params["lambda_mm"] = lambda_mm
    params["kappa_ex"] = params["u"] / lambda_mm**2
    flags = list(result.flags)
    if params["kappa_ex"] > params["kappa"]:
        flags.append("unphysical_coupling")
    return FitResult(parameters=params, residual_norm=result.residual_norm,
                     covariance_proxy=result.covariance_proxy,
                     converged=result.converged, flags=tuple(flags),
                     message=result.message)
