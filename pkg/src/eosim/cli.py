"""Command-line front end.

One scenario per invocation: a YAML config (nested key-value sections,
rates may be given in Hz with a ``/2pi`` key suffix) selects the system
and the run options; the subcommand selects the analysis.  Outputs are
CSV for arrays and JSON for scalar reports, each carrying a resolved
parameter header.

Exit codes: 0 success, 2 configuration error (the message names the
field), 3 numerical failure, 4 fit non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np
import yaml

from . import calibration, dynamics, fitting, noise, params, steadystate
from ._version import __version__
from .errors import ConfigError, NumericalError
from .io import read_trace_csv, write_csv, write_json

TWO_PI = 2.0 * math.pi


def _load_config(path) -> dict:
    if path is None:
        raise ConfigError("config", "a --config file is required")
    try:
        text = open(path).read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    doc = yaml.safe_load(text)
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a mapping")
    return doc


def _apply_overrides(cfg: dict, assignments):
    for item in assignments or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        value = yaml.safe_load(raw)
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(key, "override path crosses a non-mapping value")
        node[parts[-1]] = value
    return cfg


def _get(section: dict, key: str, path: str, default=..., kind=None):
    if key in section:
        value = section[key]
    elif default is not ...:
        value = default
    else:
        raise ConfigError(f"{path}.{key}", "required field missing")
    if kind is not None and value is not None:
        try:
            value = kind(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}.{key}", f"invalid value {value!r}") from exc
    return value


def _rate(section: dict, key: str, path: str, default=...):
    """A rate given either directly (rad/s) or as ``key/2pi`` (Hz)."""
    if key in section and f"{key}/2pi" in section:
        raise ConfigError(f"{path}.{key}", "given both directly and as /2pi")
    if f"{key}/2pi" in section:
        return TWO_PI * float(section[f"{key}/2pi"])
    return _get(section, key, path, default=default, kind=float)


def _system(cfg: dict) -> params.SystemParams:
    section = cfg.get("system")
    if section is None:
        raise ConfigError("system", "required section missing")
    return params.system_from_dict(section)


def _run_section(cfg: dict, kind: str) -> dict:
    run = cfg.get("run", {})
    if not isinstance(run, dict):
        raise ConfigError("run", "expected a mapping")
    declared = run.get("kind")
    if declared is not None and declared != kind:
        raise ConfigError("run.kind", f"config declares {declared!r} but the "
                                      f"{kind!r} subcommand was invoked")
    return run


def _n_pump(section: dict, system: params.SystemParams, path: str) -> float:
    keys = [k for k in ("cooperativity", "n_pump", "power") if k in section]
    if len(keys) > 1:
        raise ConfigError(f"{path}.{keys[1]}",
                          "give only one of cooperativity / n_pump / power")
    if not keys:
        raise ConfigError(f"{path}.cooperativity",
                          "required field missing (or n_pump / power)")
    value = float(section[keys[0]])
    if keys[0] == "cooperativity":
        return params.n_pump_for_cooperativity(system, value)
    if keys[0] == "power":
        return params.pump_photons(value, system.pump, system.lambda_mm,
                                   system.pump.omega)
    return value


def _envelope(section: dict, t: np.ndarray, amplitude: float, path: str) -> np.ndarray:
    kind = _get(section, "kind", path, default="cw")
    detuning = _rate(section, "detuning", path, default=0.0)
    if kind == "cw":
        env = np.full(t.shape, amplitude, dtype=complex)
        if detuning:
            env = env * np.exp(-1j * detuning * t)
    elif kind == "square":
        env = dynamics.square_pulse(
            t,
            _get(section, "t_on", path, kind=float),
            _get(section, "t_off", path, kind=float),
            _get(section, "rise_time", path, default=0.0, kind=float),
            amplitude=amplitude, carrier_detuning=detuning)
    else:
        raise ConfigError(f"{path}.kind", f"unknown envelope kind {kind!r}")
    mod = _get(section, "mod_freq", path, default=0.0, kind=float)
    if mod:
        env = dynamics.iq_modulated_pulse(t, env, mod)
    return env


def _filter(section: dict, path: str) -> noise.MeasurementFilter:
    return noise.MeasurementFilter(
        center=_rate(section, "center", path, default=0.0),
        fwhm=_rate(section, "fwhm", path, default=noise.DEFAULT_FILTER_FWHM))


def _meta(cfg: dict, system: params.SystemParams, kind: str) -> dict:
    return {"command": kind, "system": params.system_to_dict(system),
            "run": cfg.get("run", {})}


def _omega_grid(section: dict, path: str) -> np.ndarray:
    start = _rate(section, "start", path)
    stop = _rate(section, "stop", path)
    num = _get(section, "num", path, default=801, kind=int)
    return np.linspace(start, stop, num)


def _axis_grid(section: dict, path: str) -> np.ndarray:
    start = _get(section, "start", path, kind=float)
    stop = _get(section, "stop", path, kind=float)
    num = _get(section, "num", path, default=21, kind=int)
    scale = _get(section, "scale", path, default="linear")
    if scale in ("log", "logarithmic"):
        if start <= 0.0:
            raise ConfigError(f"{path}.start", "log scale needs start > 0")
        return np.geomspace(start, stop, num)
    if scale in ("linear", "lin"):
        return np.linspace(start, stop, num)
    raise ConfigError(f"{path}.scale", f"unknown scale {scale!r}")


def run_simulate(cfg: dict, out: str, threads: int) -> int:
    system = _system(cfg)
    run = _run_section(cfg, "simulate")
    t_max = _get(run, "t_max", "run", kind=float)
    dt = _get(run, "dt", "run", default=dynamics.DEFAULT_DT, kind=float)
    t = np.arange(0.0, t_max, dt)

    pump_sec = _get(run, "pump", "run")
    if not isinstance(pump_sec, dict):
        raise ConfigError("run.pump", "expected a mapping")
    f_p = params.pump_drive_for_photons(system, _n_pump(pump_sec, system, "run.pump"))
    pump = _envelope(pump_sec, t, f_p, "run.pump")

    signal_sec = _get(run, "signal", "run")
    if not isinstance(signal_sec, dict):
        raise ConfigError("run.signal", "expected a mapping")
    amp = _get(signal_sec, "amplitude", "run.signal", default=1.0, kind=float)
    signal = _envelope(signal_sec, t, amp, "run.signal")

    direction = _get(run, "direction", "run", default="mw_to_opt")
    method = _get(run, "method", "run", default="rk4")
    try:
        result = dynamics.conversion_run(system, t, pump, signal, direction,
                                         method=method)
    except ValueError as exc:
        raise ConfigError("run", str(exc)) from exc

    meta = _meta(cfg, system, "simulate")
    result.trajectory.to_csv(f"{out}_trajectory.csv", meta=meta)
    summary = {"direction": direction, "plateau_efficiency": result.plateau,
               "peak_efficiency": result.peak, "input_flux": result.input_flux}
    try:
        summary["rise_time_10_90"] = dynamics.rise_time_10_90(
            t, result.efficiency, y_ref=result.plateau or None)
    except ValueError:
        pass
    write_csv(f"{out}_efficiency.csv", {"t": t, "efficiency": result.efficiency},
              meta=meta)
    write_json(f"{out}_summary.json", summary, meta=meta)
    return 0


def run_spectrum(cfg: dict, out: str, threads: int) -> int:
    system = _system(cfg)
    run = _run_section(cfg, "spectrum")
    n_pump = _n_pump(run, system, "run")
    omega = _omega_grid(_get(run, "omega", "run"), "run.omega")
    pairs = _get(run, "pairs", "run", default=["oe", "eo", "ee", "oo"])
    for pair in pairs:
        if len(pair) != 2 or any(p not in steadystate.PORTS for p in pair):
            raise ConfigError("run.pairs", f"invalid port pair {pair!r}")
    drift = steadystate.build_drift(system, n_pump)
    sol = steadystate.scattering(drift, system, omega)
    steadystate.sweep_to_csv(f"{out}_spectrum.csv", sol,
                             [(p[0], p[1]) for p in pairs],
                             meta=_meta(cfg, system, "spectrum"))
    return 0


def run_noise(cfg: dict, out: str, threads: int) -> int:
    system = _system(cfg)
    run = _run_section(cfg, "noise")
    n_pump = _n_pump(run, system, "run")
    channel = _get(run, "channel", "run", default="e")
    filt = _filter(_get(run, "filter", "run", default={}), "run.filter")
    omega = _omega_grid(_get(run, "omega", "run", default={
        "start": filt.center - 8 * filt.sigma - system.microwave.kappa,
        "stop": filt.center + 8 * filt.sigma + system.microwave.kappa,
        "num": 2001}), "run.omega")
    spec = noise.output_spectrum(system, n_pump, channel, omega)
    meta = _meta(cfg, system, "noise")
    write_csv(f"{out}_noise_spectrum.csv", {"omega": spec.omega, "s_out": spec.s_out},
              meta=meta)
    n_out = noise.filtered_output_noise(system, n_pump, channel, filt)
    payload = {"channel": channel, "n_out": n_out,
               "filter": {"center": filt.center, "fwhm": filt.fwhm},
               "n_e": noise.occupancy(system.microwave)}
    eta = _get(run, "eta_tot", "run", default=None, kind=float)
    if eta is not None:
        payload["n_in"] = noise.equivalent_input_noise(n_out, eta)
        payload["eta_tot"] = eta
    write_json(f"{out}_noise.json", payload, meta=meta)
    return 0


def run_landscape(cfg: dict, out: str, threads: int) -> int:
    system = _system(cfg)
    run = _run_section(cfg, "landscape")
    result = noise.landscape(
        system,
        _axis_grid(_get(run, "c", "run"), "run.c"),
        _axis_grid(_get(run, "n_e", "run"), "run.n_e"),
        _get(run, "suppression", "run", kind=float),
        _get(run, "channel", "run", default="e"),
        filt=_filter(_get(run, "filter", "run", default={}), "run.filter"),
        n_wg=_get(run, "n_wg", "run", default=0.0, kind=float),
        referred=bool(_get(run, "referred", "run", default=False)),
        threads=threads)
    result.to_csv(f"{out}_landscape.csv", meta=_meta(cfg, system, "landscape"))
    if result.failures:
        print(f"{len(result.failures)} landscape cells failed; see sidecar",
              file=sys.stderr)
    return 0


def run_fit(cfg: dict, out: str, threads: int) -> int:
    run = _run_section(cfg, "fit")
    kind = _get(run, "fit", "run")
    trace_path = _get(run, "trace", "run")
    x, y, w, notes = read_trace_csv(trace_path)
    trace = fitting.TraceData(x=x, y=y, weight=w, units=notes)

    max_nfev = _get(run, "max_nfev", "run", default=None, kind=int)
    if kind == "optical_dip":
        result = fitting.fit_optical_dip(
            trace, lambda_mm=_get(run, "lambda_mm", "run", default=None, kind=float),
            overcoupled=bool(_get(run, "overcoupled", "run", default=False)),
            max_nfev=max_nfev)
    elif kind == "avoided_crossing":
        result = fitting.fit_avoided_crossing(
            trace, kappa_s=_rate(run, "kappa_s", "run"),
            kappa_ex_eff=_rate(run, "kappa_ex_eff", "run"), max_nfev=max_nfev)
    elif kind == "time_reflection":
        xi, yi, _, notes_i = read_trace_csv(_get(run, "input_trace", "run"))
        result = fitting.fit_time_reflection(
            trace, fitting.TraceData(x=xi, y=yi, units=notes_i),
            lambda_mm=_get(run, "lambda_mm", "run", default=1.0, kind=float),
            overcoupled=bool(_get(run, "overcoupled", "run", default=False)),
            max_nfev=max_nfev)
    else:
        raise ConfigError("run.fit", f"unknown fit kind {kind!r}")

    meta = {"command": "fit", "run": run}
    write_json(f"{out}_fit.json", result.to_json_dict(), meta=meta)
    if not result.converged:
        print(f"fit did not converge: {result.message}", file=sys.stderr)
        return 4
    return 0


def run_calibrate(cfg: dict, out: str, threads: int) -> int:
    run = _run_section(cfg, "calibrate")
    db_keys = ("s_eo_db", "s_oe_db", "s_oo_db", "s_ee_db")
    if any(k in run for k in db_keys):
        m = calibration.FourPortMeasurement.from_db(
            *(_get(run, k, "run", kind=float) for k in db_keys),
            beta4_db=_get(run, "beta4_db", "run", kind=float))
    else:
        m = calibration.FourPortMeasurement(
            s_eo_sq=_get(run, "s_eo_sq", "run", kind=float),
            s_oe_sq=_get(run, "s_oe_sq", "run", kind=float),
            s_oo_sq=_get(run, "s_oo_sq", "run", kind=float),
            s_ee_sq=_get(run, "s_ee_sq", "run", kind=float),
            beta4_db=_get(run, "beta4_db", "run", kind=float))
    het = _get(run, "heterodyne", "run", default=None)
    if het is not None:
        het = {"p_baseline": _get(het, "p_baseline", "run.heterodyne", kind=float),
               "bandwidth": _get(het, "bandwidth", "run.heterodyne", kind=float),
               "omega_o": _rate(het, "omega_o", "run.heterodyne")}
    report = calibration.report(m, heterodyne=het)
    write_json(f"{out}_calibration.json", report, meta={"command": "calibrate",
                                                        "run": run})
    return 0


_COMMANDS = {
    "simulate": run_simulate,
    "spectrum": run_spectrum,
    "noise": run_noise,
    "landscape": run_landscape,
    "fit": run_fit,
    "calibrate": run_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eosim",
        description="Cavity electro-optic transduction simulator and analysis toolkit")
    parser.add_argument("--version", action="version", version=f"eosim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run a {name} scenario")
        p.add_argument("--config", help="YAML scenario file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", dest="sets",
                       help="override a config entry (dotted path)")
        p.add_argument("--out", default="eosim_out", help="output path prefix")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for landscape cells")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(_load_config(args.config), args.sets)
        return _COMMANDS[args.command](cfg, args.out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
