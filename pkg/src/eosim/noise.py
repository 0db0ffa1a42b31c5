"""Output noise spectra, filtered photon numbers and noise landscapes.

Spectra are normally ordered photon flux densities (photons s^-1 Hz^-1):
annihilation-channel coefficients enter weighted by the channel occupancy
n, creation-channel (gain) coefficients by n + 1, so a cold passive system
reports zero.  Optical baths are at zero occupancy; the microwave mode
carries its intrinsic bath occupancy N_b and waveguide occupancy N_wg.

Detector-style photon numbers are obtained by integrating the spectrum
against a unit-peak Gaussian filter.  ``filtered_photon_number`` is the
raw integral (a flux, rad/s units on the frequency axis);
``filtered_density`` divides by the filter area and is the per-mode
number the measurement bandwidth reports, which is the quantity the noise
landscapes are expressed in.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import steadystate
from .params import ModeParams, SystemParams, occupancy_of, with_suppression
from .steadystate import CHANNELS, build_drift, scattering

TWO_PI = 2.0 * math.pi

#: FWHM of the default measurement filter (rad/s): 10 MHz.
DEFAULT_FILTER_FWHM = TWO_PI * 10e6

_GAUSS_AREA = math.sqrt(math.pi / math.log(16.0))


@dataclass(frozen=True)
class MeasurementFilter:
    """Unit-peak Gaussian measurement filter.

    center, fwhm : rad/s
    """

    center: float
    fwhm: float

    def __post_init__(self):
        if not self.fwhm > 0.0:
            raise ValueError(f"fwhm must be > 0, got {self.fwhm}")

    @property
    def sigma(self) -> float:
        return self.fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))

    @property
    def area(self) -> float:
        """Integral of the response over omega: fwhm * sqrt(pi / ln 16)."""
        return self.fwhm * _GAUSS_AREA

    def response(self, omega) -> np.ndarray:
        x = (np.asarray(omega, dtype=float) - self.center) / self.fwhm
        return np.exp(-4.0 * math.log(2.0) * x * x)


def default_filter(center: float = 0.0) -> MeasurementFilter:
    return MeasurementFilter(center=center, fwhm=DEFAULT_FILTER_FWHM)


@dataclass(frozen=True, eq=False)
class NoiseSpectrum:
    """Sampled output photon flux spectral density of one port."""

    omega: np.ndarray
    s_out: np.ndarray
    channel: str = ""

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        s = np.asarray(self.s_out, dtype=float)
        if s.shape != omega.shape:
            raise ValueError("s_out must match the omega grid")
        floor = -1e-10 * max(1.0, float(np.max(np.abs(s))))
        if np.any(s < floor):
            raise ValueError("spectral density must be >= 0")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "s_out", np.clip(s, 0.0, None))


def occupancy(microwave: ModeParams) -> float:
    """Equivalent mode occupancy (N_b kappa_in + N_wg kappa_ex) / kappa."""
    return occupancy_of(microwave)


def bath_occupancy_for(microwave: ModeParams, n_e: float, n_wg: float = 0.0) -> float:
    """Invert the occupancy average for N_b at a target N_e."""
    n_b = (n_e * microwave.kappa - n_wg * microwave.kappa_ex) / microwave.kappa_in
    if n_b < 0.0:
        raise ValueError(f"target occupancy {n_e} unreachable with n_wg={n_wg}")
    return n_b


def passive_spectrum(microwave: ModeParams, omega) -> np.ndarray:
    """Microwave output spectrum with the pump off.

    4 k_in k_ex / (k^2 + 4 omega^2) * (N_b - N_wg) + N_wg
    """
    if microwave.kappa <= 0.0:
        raise ValueError("kappa must be > 0")
    omega = np.asarray(omega, dtype=float)
    lor = 4.0 * microwave.kappa_in * microwave.kappa_ex / (
        microwave.kappa**2 + 4.0 * omega**2)
    return lor * (microwave.n_bath - microwave.n_waveguide) + microwave.n_waveguide


def _channel_occupancies(system: SystemParams) -> np.ndarray:
    occ = np.zeros(len(CHANNELS))
    occ[CHANNELS.index(("e", "in"))] = system.microwave.n_bath
    occ[CHANNELS.index(("e", "ex"))] = system.microwave.n_waveguide
    return occ


def spectrum_values(system: SystemParams, drift, channel: str, omega) -> np.ndarray:
    """Evaluate the output noise spectral density on a frequency grid."""
    sol = scattering(drift, system, omega)
    occ = _channel_occupancies(system)
    a2 = np.abs(sol.a_coefficients(channel)) ** 2
    b2 = np.abs(sol.b_coefficients(channel)) ** 2
    return a2 @ occ + b2 @ (occ + 1.0)


def output_spectrum(system: SystemParams, n_pump: float, channel: str,
                    omega, *, pump_amplitude=None) -> NoiseSpectrum:
    """Output noise spectrum of a detected port ("e", "o" or "s")."""
    if channel not in steadystate.PORTS:
        raise ValueError(f"channel must be one of {steadystate.PORTS}, got {channel!r}")
    if pump_amplitude is not None:
        drift = build_drift(system, pump_amplitude=pump_amplitude)
    else:
        drift = build_drift(system, n_pump)
    values = spectrum_values(system, drift, channel, omega)
    return NoiseSpectrum(omega=np.atleast_1d(np.asarray(omega, dtype=float)),
                         s_out=np.atleast_1d(values), channel=channel)


def filtered_photon_number(spectrum, filt: MeasurementFilter,
                           rel_tol: float = 1e-6) -> float:
    """Integral of the spectrum against the filter response (over rad/s).

    ``spectrum`` is either a :class:`NoiseSpectrum` sampled densely enough
    that the quadrature error proxy stays below ``rel_tol`` (the grid must
    cover the filter to at least five sigma), or a callable
    ``s(omega_array)``; callables are integrated on a self-refining grid
    until two successive estimates agree to ``rel_tol``.
    """
    if callable(spectrum):
        lo = filt.center - 8.0 * filt.sigma
        hi = filt.center + 8.0 * filt.sigma
        n = 129
        prev = None
        for _ in range(16):
            omega = np.linspace(lo, hi, n)
            est = float(np.trapezoid(filt.response(omega) * spectrum(omega), omega))
            if prev is not None and abs(est - prev) <= rel_tol * max(abs(est), 1e-300):
                return est
            prev = est
            n = 2 * n - 1
        raise ValueError("filtered integral did not converge to the requested tolerance")

    omega, s = spectrum.omega, spectrum.s_out
    if omega.size < 9:
        raise ValueError("spectrum grid too small for quadrature")
    span = 5.0 * filt.sigma
    if omega[0] > filt.center - span or omega[-1] < filt.center + span:
        raise ValueError("insufficient spectral coverage: grid must span the "
                         "filter center by at least five sigma")
    integrand = filt.response(omega) * s
    full = float(np.trapezoid(integrand, omega))
    coarse = float(np.trapezoid(integrand[::2], omega[::2]))
    # trapezoid halving error ratio ~4: Richardson proxy for the fine-grid error
    err = abs(full - coarse) / 3.0
    if err > rel_tol * max(abs(full), 1e-300):
        raise ValueError("spectral grid too coarse for the requested quadrature tolerance")
    return full


def filtered_density(spectrum, filt: MeasurementFilter) -> float:
    """Filter-weighted mean spectral density (photons s^-1 Hz^-1)."""
    return filtered_photon_number(spectrum, filt) / filt.area


def equivalent_input_noise(n_out: float, eta_tot: float) -> float:
    """Input-referred added noise N_in = N_out / eta_tot."""
    if eta_tot <= 0.0:
        raise ValueError("eta_tot must be > 0 to refer noise to the input")
    return n_out / eta_tot


def filtered_output_noise(system: SystemParams, n_pump: float, channel: str,
                          filt: MeasurementFilter | None = None) -> float:
    """Filtered mean output noise density of one port at fixed pump."""
    filt = filt or default_filter()
    drift = build_drift(system, n_pump)
    fn = lambda w: spectrum_values(system, drift, channel, w)
    return filtered_photon_number(fn, filt) / filt.area


@dataclass(frozen=True, eq=False)
class LandscapeResult:
    """Noise figure on a (C, N_e) grid at fixed suppression."""

    c_grid: np.ndarray
    n_e_grid: np.ndarray
    values: np.ndarray
    channel: str
    s_fixed: float
    referred: bool
    filter: MeasurementFilter
    failures: tuple

    def to_csv(self, path, meta=None):
        from .io import write_csv, write_json

        cc, nn = np.meshgrid(self.c_grid, self.n_e_grid, indexing="ij")
        write_csv(path, {"c": cc.ravel(), "n_e": nn.ravel(),
                         "value": self.values.ravel()}, meta=meta)
        sidecar = {
            "channel": self.channel,
            "s_fixed": self.s_fixed,
            "referred": self.referred,
            "filter": {"center": self.filter.center, "fwhm": self.filter.fwhm},
            "c_grid": list(map(float, self.c_grid)),
            "n_e_grid": list(map(float, self.n_e_grid)),
            "failures": [{"i": i, "j": j, "error": msg} for i, j, msg in self.failures],
        }
        write_json(str(path) + ".meta.json", sidecar, meta=meta)


def landscape(system: SystemParams, c_grid, n_e_grid, s_fixed: float,
              channel: str, *, filt: MeasurementFilter | None = None,
              n_wg: float = 0.0, referred: bool = False,
              threads: int = 1) -> LandscapeResult:
    """Noise figure over a cooperativity / occupancy grid.

    Each cell solves for the bath occupancy that realizes N_e (with the
    waveguide at ``n_wg``), rebuilds the scattering solution at the cell's
    pump strength with the coupling J set for on-resonance suppression
    ``s_fixed``, and integrates the output spectrum of ``channel`` with
    the measurement filter.  ``referred=True`` divides by the numeric
    on-resonance conversion efficiency (input-referred added noise of the
    conversion direction that ends on ``channel``).

    Cell failures are recorded in the result, not raised.
    """
    c_grid = np.asarray(c_grid, dtype=float)
    n_e_grid = np.asarray(n_e_grid, dtype=float)
    if c_grid.size == 0 or n_e_grid.size == 0:
        raise ValueError("grids must be nonempty")
    filt = filt or default_filter()
    base = with_suppression(system, s_fixed)

    def cell(args):
        i, j = args
        c, n_e = c_grid[i], n_e_grid[j]
        n_b = bath_occupancy_for(base.microwave, n_e, n_wg)
        sys_ij = base.replace(microwave=base.microwave.replace(
            n_bath=n_b, n_waveguide=n_wg))
        n_pump = c * sys_ij.signal.kappa * sys_ij.microwave.kappa / (4.0 * sys_ij.g0**2)
        drift = build_drift(sys_ij, n_pump)
        value = filtered_photon_number(
            lambda w: spectrum_values(sys_ij, drift, channel, w), filt) / filt.area
        if referred:
            eta = float(scattering(drift, sys_ij, 0.0).efficiency("o", "e")[0])
            value = equivalent_input_noise(value, eta)
        return value

    values = np.full((c_grid.size, n_e_grid.size), np.nan)
    failures = []
    tasks = [(i, j) for i in range(c_grid.size) for j in range(n_e_grid.size)]

    def run(task):
        try:
            return task, cell(task), None
        except Exception as exc:  # per-cell failures are data, not fatal
            return task, np.nan, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    for (i, j), value, err in results:
        values[i, j] = value
        if err is not None:
            failures.append((i, j, err))
    return LandscapeResult(c_grid=c_grid, n_e_grid=n_e_grid, values=values,
                           channel=channel, s_fixed=s_fixed, referred=referred,
                           filter=filt, failures=tuple(failures))
