"""Benchmark the time-domain integrator: numba kernel vs pure Python path.

Runs the five-mode RK4 loop on a representative high-cooperativity
conversion scenario and reports per-step timings for both backends.
The selected backend at import time follows EOSIM_NO_NUMBA; both are
exercised here explicitly regardless of the flag.

Usage: python benchmarks/bench_integrate.py [n_steps]
"""

import sys
import time

import numpy as np

from eosim import _kernels, dynamics, params


def build_args(n_steps):
    system = params.with_suppression(params.high_coop_system(), 0.22)
    dt = 0.5e-9
    t = np.arange(n_steps) * dt
    n_pump = params.n_pump_for_cooperativity(system, 0.49)
    f_p = np.full(t.shape, params.pump_drive_for_photons(system, n_pump),
                  dtype=complex)
    f_e = dynamics.square_pulse(t, 0.1 * t[-1], 0.8 * t[-1], 15e-9)
    f_o = np.zeros_like(f_p)
    lin = np.array([-1j * m.delta - 0.5 * m.kappa for m in
                    (system.pump, system.signal, system.stokes,
                     system.microwave, system.tm)], dtype=complex)
    mids = tuple(_kernels.drive_midpoints(f) for f in (f_p, f_o, f_e))
    cpl_o = system.lambda_mm * np.sqrt(system.signal.kappa_ex)
    cpl_e = np.sqrt(system.microwave.kappa_ex)
    return (np.zeros(5, complex), f_p, f_o, f_e, *mids, dt, lin,
            cpl_o, cpl_e, system.g0, system.j, 4, 1e12)


def timeit(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        traj, status, *_ = fn(*args)
        best = min(best, time.perf_counter() - t0)
    assert status == _kernels.STATUS_OK
    return best, traj


def main():
    n_steps = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    args = build_args(n_steps)

    t_py, traj_py = timeit(_kernels.integrate_loop_python, args, repeats=1)
    print(f"pure python : {t_py:8.3f} s  ({t_py / n_steps * 1e6:8.3f} us/step)")

    if _kernels.NUMBA_AVAILABLE:
        from numba import njit

        jitted = (njit(cache=True)(_kernels._integrate_loop)
                  if not _kernels.USING_NUMBA else _kernels.integrate_loop)
        timeit(jitted, args, repeats=1)  # compile
        t_nb, traj_nb = timeit(jitted, args, repeats=3)
        print(f"numba       : {t_nb:8.3f} s  ({t_nb / n_steps * 1e6:8.3f} us/step)")
        print(f"speedup     : {t_py / t_nb:8.1f} x")
        print(f"max |diff|  : {np.max(np.abs(traj_nb - traj_py)):.3e}")
    else:
        print("numba not importable; only the pure path was timed")


if __name__ == "__main__":
    main()
