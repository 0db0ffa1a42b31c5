"""Hot inner loops of the time-domain integrator.

The loops are compiled with numba when it is importable, unless the
environment variable ``EOSIM_NO_NUMBA`` is set to a truthy value, in which
case the identical pure-Python/numpy code path runs instead.  Both paths
are importable side by side (``integrate_loop`` is the selected one,
``integrate_loop_python`` always the interpreted one) so they can be
compared; see ``benchmarks/bench_integrate.py``.

State ordering is (a_p, a_o, a_s, a_e, a_r).  Drive arrays are envelope
samples on the uniform time grid; the RK4 stages use half-step drive
values that the caller precomputes with :func:`drive_midpoints` (cubic
interpolation, so the scheme keeps fourth order for smooth drives).
"""

import os

import numpy as np

STATUS_OK = 0
STATUS_DIVERGED = 1


def _env_disabled() -> bool:
    return os.environ.get("EOSIM_NO_NUMBA", "").strip().lower() not in ("", "0", "false")


try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap


USING_NUMBA = NUMBA_AVAILABLE and not _env_disabled()


def drive_midpoints(f: np.ndarray) -> np.ndarray:
    """Half-step drive values f(t_i + dt/2) for i = 0 .. n-2.

    Cubic interpolation through four neighbouring samples; one-sided
    stencils at the ends keep the local error O(dt^4) everywhere.
    """
    f = np.asarray(f)
    n = f.shape[0]
    if n < 4:
        return 0.5 * (f[:-1] + f[1:])
    mid = np.empty(n - 1, dtype=f.dtype)
    mid[1:-1] = (-f[:-3] + 9.0 * f[1:-2] + 9.0 * f[2:-1] - f[3:]) / 16.0
    mid[0] = (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0
    mid[-1] = (f[-4] - 5.0 * f[-3] + 15.0 * f[-2] + 5.0 * f[-1]) / 16.0
    return mid


def _integrate_loop(y0, f_p, f_o, f_e, fm_p, fm_o, fm_e, dt, lin,
                    cpl_o, cpl_e, g0, j, order, limit):
    """March the five coupled mode equations over the drive grid.

    lin : complex[5], per-mode linear coefficients (-i*delta - kappa/2)
    cpl_o, cpl_e : drive couplings lambda*sqrt(kappa_o_ex), sqrt(kappa_e_ex)
    order : 1 for Euler, 4 for RK4
    limit : abort threshold on any |amplitude|

    Returns (traj, status, bad_step, bad_mode, bad_mag).
    """
    n = f_p.shape[0]
    traj = np.empty((n, 5), np.complex128)

    lp = lin[0]
    lo = lin[1]
    ls = lin[2]
    le = lin[3]
    lr = lin[4]

    def rhs(ap, ao, as_, ae, ar, fp, fo, fe):
        dp = lp * ap - 1j * g0 * (as_ * ae + ae.conjugate() * ao) + cpl_o * fp
        do = lo * ao - 1j * g0 * ap * ae + cpl_o * fo
        ds = ls * as_ - 1j * g0 * ap * ae.conjugate() - 1j * j * ar
        de = le * ae - 1j * g0 * (ap * as_.conjugate() + ap.conjugate() * ao) + cpl_e * fe
        dr = lr * ar - 1j * j * as_
        return dp, do, ds, de, dr

    ap = y0[0]
    ao = y0[1]
    as_ = y0[2]
    ae = y0[3]
    ar = y0[4]
    traj[0, 0] = ap
    traj[0, 1] = ao
    traj[0, 2] = as_
    traj[0, 3] = ae
    traj[0, 4] = ar

    for i in range(n - 1):
        if order == 1:
            dp, do, ds, de, dr = rhs(ap, ao, as_, ae, ar, f_p[i], f_o[i], f_e[i])
            ap += dt * dp
            ao += dt * do
            as_ += dt * ds
            ae += dt * de
            ar += dt * dr
        else:
            k1p, k1o, k1s, k1e, k1r = rhs(ap, ao, as_, ae, ar,
                                          f_p[i], f_o[i], f_e[i])
            h = 0.5 * dt
            k2p, k2o, k2s, k2e, k2r = rhs(ap + h * k1p, ao + h * k1o, as_ + h * k1s,
                                          ae + h * k1e, ar + h * k1r,
                                          fm_p[i], fm_o[i], fm_e[i])
            k3p, k3o, k3s, k3e, k3r = rhs(ap + h * k2p, ao + h * k2o, as_ + h * k2s,
                                          ae + h * k2e, ar + h * k2r,
                                          fm_p[i], fm_o[i], fm_e[i])
            k4p, k4o, k4s, k4e, k4r = rhs(ap + dt * k3p, ao + dt * k3o, as_ + dt * k3s,
                                          ae + dt * k3e, ar + dt * k3r,
                                          f_p[i + 1], f_o[i + 1], f_e[i + 1])
            sixth = dt / 6.0
            ap += sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            ao += sixth * (k1o + 2.0 * k2o + 2.0 * k3o + k4o)
            as_ += sixth * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
            ae += sixth * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
            ar += sixth * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)

        traj[i + 1, 0] = ap
        traj[i + 1, 1] = ao
        traj[i + 1, 2] = as_
        traj[i + 1, 3] = ae
        traj[i + 1, 4] = ar

        for m in range(5):
            mag = abs(traj[i + 1, m])
            if mag > limit or mag != mag:
                return traj, STATUS_DIVERGED, i + 1, m, mag

    return traj, STATUS_OK, -1, -1, 0.0


def _mode_loop(a0, f, fm, dt, lin, cpl, order, limit):
    """Single driven mode: da/dt = lin*a + cpl*f(t).

    Same stepping rules as the five-mode loop; used by the time-domain
    reflection fits where only one mode participates.
    """
    n = f.shape[0]
    traj = np.empty(n, np.complex128)
    a = a0
    traj[0] = a
    for i in range(n - 1):
        if order == 1:
            a += dt * (lin * a + cpl * f[i])
        else:
            k1 = lin * a + cpl * f[i]
            k2 = lin * (a + 0.5 * dt * k1) + cpl * fm[i]
            k3 = lin * (a + 0.5 * dt * k2) + cpl * fm[i]
            k4 = lin * (a + dt * k3) + cpl * f[i + 1]
            a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traj[i + 1] = a
        mag = abs(a)
        if mag > limit or mag != mag:
            return traj, STATUS_DIVERGED, i + 1, 0, mag
    return traj, STATUS_OK, -1, -1, 0.0


# keep the interpreted versions importable regardless of the selection
integrate_loop_python = _integrate_loop
mode_loop_python = _mode_loop

if USING_NUMBA:
    integrate_loop = njit(cache=True)(_integrate_loop)
    mode_loop = njit(cache=True)(_mode_loop)
else:
    integrate_loop = _integrate_loop
    mode_loop = _mode_loop
