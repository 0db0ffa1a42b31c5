"""Physical parameters of the five-mode converter and derived quantities.

All rates and frequencies are angular (rad/s) everywhere in the package.
Configuration files may give values in cyclic units (Hz) by suffixing the
key with ``/2pi``; the loader multiplies those by 2*pi.

Mode naming follows the device layout: ``pump``, ``signal`` and ``stokes``
are the three TE optical resonances (pump carrier, upper and lower
sideband), ``tm`` is the cross-polarized optical mode hybridized with the
stokes mode, and ``microwave`` is the superconducting cavity mode.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from scipy.constants import hbar

from .errors import ConfigError

TWO_PI = 2.0 * math.pi

_RATE_FIELDS = ("omega", "kappa_in", "kappa_ex", "delta")


@dataclass(frozen=True)
class ModeParams:
    """One resonant mode.

    omega : resonance frequency (rad/s)
    kappa_in : intrinsic energy decay rate (rad/s)
    kappa_ex : external (waveguide) decay rate (rad/s)
    delta : detuning of the drive carrier from resonance (rad/s)
    n_bath : thermal occupancy of the intrinsic bath (photons)
    n_waveguide : thermal occupancy of the waveguide (photons)
    """

    omega: float
    kappa_in: float
    kappa_ex: float
    delta: float = 0.0
    n_bath: float = 0.0
    n_waveguide: float = 0.0

    def __post_init__(self):
        if not self.kappa_in >= 0.0:
            raise ValueError(f"kappa_in must be >= 0, got {self.kappa_in}")
        if not self.kappa_ex >= 0.0:
            raise ValueError(f"kappa_ex must be >= 0, got {self.kappa_ex}")
        if not self.kappa_in + self.kappa_ex > 0.0:
            raise ValueError("total linewidth kappa_in + kappa_ex must be > 0")
        if not self.n_bath >= 0.0:
            raise ValueError(f"n_bath must be >= 0, got {self.n_bath}")
        if not self.n_waveguide >= 0.0:
            raise ValueError(f"n_waveguide must be >= 0, got {self.n_waveguide}")

    @property
    def kappa(self) -> float:
        """Total energy decay rate kappa_in + kappa_ex (rad/s)."""
        return self.kappa_in + self.kappa_ex

    @property
    def eta(self) -> float:
        """Coupling efficiency kappa_ex / kappa, in [0, 1]."""
        return self.kappa_ex / self.kappa

    def replace(self, **changes) -> "ModeParams":
        return dataclasses.replace(self, **changes)


def mode_from_linewidth(omega: float, kappa: float, eta: float, **kw) -> ModeParams:
    """Build a mode from total linewidth and coupling efficiency."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    return ModeParams(omega=omega, kappa_in=(1.0 - eta) * kappa, kappa_ex=eta * kappa, **kw)


@dataclass(frozen=True)
class SystemParams:
    """The five-mode device.

    g0 : vacuum electro-optic coupling rate (rad/s)
    j : TE-TM cross-polarization coupling rate (rad/s)
    lambda_mm : spatial mode-match amplitude of the free-space optical
        coupling, in [0, 1]; multiplies sqrt(kappa_o,ex) on every optical
        signal port.
    """

    pump: ModeParams
    signal: ModeParams
    stokes: ModeParams
    tm: ModeParams
    microwave: ModeParams
    g0: float
    j: float = 0.0
    lambda_mm: float = 1.0

    def __post_init__(self):
        # g0 = 0 is allowed: passive analyses and single-mode reflection
        # fits run on the same structures.
        if not self.g0 >= 0.0:
            raise ValueError(f"g0 must be >= 0, got {self.g0}")
        if not self.j >= 0.0:
            raise ValueError(f"j must be >= 0, got {self.j}")
        if not 0.0 <= self.lambda_mm <= 1.0:
            raise ValueError(f"lambda_mm must be in [0, 1], got {self.lambda_mm}")

    @property
    def kappa_o(self) -> float:
        return self.signal.kappa

    @property
    def kappa_e(self) -> float:
        return self.microwave.kappa

    def cooperativity(self, n_pump: float) -> float:
        return cooperativity(n_pump, self.g0, self.signal.kappa, self.microwave.kappa)

    def mode_coupling_cooperativity(self) -> float:
        return mode_coupling_cooperativity(self.j, self.stokes.kappa, self.tm.kappa)

    def cooperativities(self, n_pump: float) -> "Cooperativities":
        c = self.cooperativity(n_pump)
        c_j = self.mode_coupling_cooperativity()
        n_e = occupancy_of(self.microwave)
        c_q = math.inf if n_e == 0.0 else c / n_e
        return Cooperativities(c=c, c_j=c_j, c_q=c_q, suppression=suppression_ratio(c_j))

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Cooperativities:
    """Derived dimensionless figures of merit."""

    c: float
    c_j: float
    c_q: float
    suppression: float


def cooperativity(n_pump: float, g0: float, kappa_o: float, kappa_e: float) -> float:
    """Multiphoton cooperativity 4 n_pump g0^2 / (kappa_o kappa_e).

    Linear in ``n_pump`` and in ``g0**2``; both linewidths must be
    strictly positive.
    """
    if kappa_o <= 0.0 or kappa_e <= 0.0:
        raise ValueError("linewidths must be > 0 in cooperativity()")
    if n_pump < 0.0 or g0 < 0.0:
        raise ValueError("n_pump and g0 must be >= 0")
    return 4.0 * n_pump * g0 * g0 / (kappa_o * kappa_e)


def mode_coupling_cooperativity(j: float, kappa_s: float, kappa_r: float) -> float:
    """Cross-polarization cooperativity 4 j^2 / (kappa_s kappa_r)."""
    if kappa_s <= 0.0 or kappa_r <= 0.0:
        raise ValueError("linewidths must be > 0 in mode_coupling_cooperativity()")
    return 4.0 * j * j / (kappa_s * kappa_r)


def suppression_ratio(c_j: float) -> float:
    """On-resonance sideband suppression 1 / (1 + c_j).

    Strictly decreasing in ``c_j``; 1 with no mode splitting, -> 0 for a
    fully split lower sideband.
    """
    if c_j < 0.0:
        raise ValueError(f"c_j must be >= 0, got {c_j}")
    return 1.0 / (1.0 + c_j)


def c_j_for_suppression(s: float) -> float:
    """Invert the suppression ratio: c_j = 1/s - 1."""
    if not 0.0 < s <= 1.0:
        raise ValueError(f"suppression must be in (0, 1], got {s}")
    return 1.0 / s - 1.0


def effective_suppression(system: SystemParams) -> float:
    """Detuning-aware sideband suppression at the pump-resonant point.

    Ratio of the real parts of the hybridized stokes-mode and the signal-
    mode susceptibilities (the respective sideband scattering densities of
    states).  Reduces to 1/(1 + C_J) when all optical detunings vanish.
    """
    chi_o = 1.0 / (1j * system.signal.delta + system.signal.kappa / 2.0)
    denom_r = 1j * system.tm.delta + system.tm.kappa / 2.0
    chi_s = 1.0 / (1j * system.stokes.delta + system.stokes.kappa / 2.0 + system.j**2 / denom_r)
    return chi_s.real / chi_o.real


def occupancy_of(mode: ModeParams) -> float:
    """Weighted thermal occupancy (n_bath kappa_in + n_wg kappa_ex) / kappa."""
    return (mode.n_bath * mode.kappa_in + mode.n_waveguide * mode.kappa_ex) / mode.kappa


def pump_photons(power: float, pump: ModeParams, lambda_mm: float, omega_p: float) -> float:
    """Steady-state intracavity pump photon number for a CW drive.

    |F_p| = sqrt(P / (hbar omega_p)) and
    n_p = |lambda sqrt(kappa_ex) F_p|^2 / (delta_p^2 + (kappa/2)^2).
    """
    if power < 0.0:
        raise ValueError(f"power must be >= 0, got {power}")
    if omega_p <= 0.0:
        raise ValueError(f"omega_p must be > 0, got {omega_p}")
    flux = power / (hbar * omega_p)
    return (lambda_mm**2 * pump.kappa_ex * flux) / (pump.delta**2 + (pump.kappa / 2.0) ** 2)


def n_pump_for_cooperativity(system: SystemParams, c: float) -> float:
    """Intracavity pump photons needed for cooperativity ``c``."""
    if c < 0.0:
        raise ValueError(f"c must be >= 0, got {c}")
    if system.g0 <= 0.0:
        raise ValueError("g0 must be > 0 to solve for the pump photon number")
    return c * system.signal.kappa * system.microwave.kappa / (4.0 * system.g0**2)


def pump_drive_for_photons(system: SystemParams, n_pump: float) -> float:
    """CW pump drive amplitude |F_p| (sqrt(photons/s)) that sustains n_pump."""
    p = system.pump
    resp = math.hypot(p.delta, p.kappa / 2.0)
    return math.sqrt(n_pump) * resp / (system.lambda_mm * math.sqrt(p.kappa_ex))


def pump_power_for_photons(system: SystemParams, n_pump: float) -> float:
    """CW optical power (W) at the input port that sustains n_pump."""
    f = pump_drive_for_photons(system, n_pump)
    return f * f * hbar * system.pump.omega


def with_suppression(system: SystemParams, s: float) -> SystemParams:
    """Return a copy with j set for on-resonance suppression ``s``.

    The stokes and tm detunings are zeroed so that the configured
    suppression is exact; use the measured detunings and
    :func:`effective_suppression` for the detuning-aware figure.
    """
    c_j = c_j_for_suppression(s)
    j = math.sqrt(c_j * system.stokes.kappa * system.tm.kappa) / 2.0
    return system.replace(
        j=j,
        stokes=system.stokes.replace(delta=0.0),
        tm=system.tm.replace(delta=0.0),
    )


# --- measured device presets -------------------------------------------------

def high_coop_system() -> SystemParams:
    """Device parameters of the high-cooperativity characterization run."""
    omega_o = TWO_PI * 193e12
    kappa_o = TWO_PI * 25.8e6
    optical = dict(omega=omega_o, kappa=kappa_o, eta=0.58)
    return SystemParams(
        pump=mode_from_linewidth(**optical),
        signal=mode_from_linewidth(**optical),
        stokes=mode_from_linewidth(**optical, delta=TWO_PI * 15.5e6),
        tm=ModeParams(omega=omega_o, kappa_in=TWO_PI * 9.96e6, kappa_ex=0.0,
                      delta=TWO_PI * 19.5e6),
        microwave=mode_from_linewidth(omega=TWO_PI * 8.795e9, kappa=TWO_PI * 13.706e6,
                                      eta=0.408),
        g0=TWO_PI * 37.0,
        j=TWO_PI * 26.21e6,
        lambda_mm=0.78,
    )


def low_coop_system() -> SystemParams:
    """Device parameters of the low-cooperativity characterization run.

    The stokes-mode hybridization was not characterized in this run; the
    tm mode is a placeholder with j = 0 (it does not participate).
    """
    omega_o = TWO_PI * 193e12
    kappa_o = TWO_PI * 15.55e6
    optical = dict(omega=omega_o, kappa=kappa_o, eta=0.55)
    return SystemParams(
        pump=mode_from_linewidth(**optical),
        signal=mode_from_linewidth(**optical),
        stokes=mode_from_linewidth(**optical),
        tm=ModeParams(omega=omega_o, kappa_in=kappa_o, kappa_ex=0.0),
        microwave=mode_from_linewidth(omega=TWO_PI * 8.803e9, kappa=TWO_PI * 12.12e6,
                                      eta=0.369),
        g0=TWO_PI * 37.0,
        j=0.0,
        lambda_mm=0.838,
    )


PRESETS = {"high_coop": high_coop_system, "low_coop": low_coop_system}


# --- configuration loading ---------------------------------------------------

def _resolve_rates(section: dict, path: str) -> dict:
    """Convert ``key/2pi`` entries (Hz) to angular keys and check clashes."""
    out = {}
    for key, value in section.items():
        if key.endswith("/2pi"):
            base = key[:-4]
            if base in section:
                raise ConfigError(f"{path}.{base}", "given both directly and as /2pi")
            out[base] = TWO_PI * float(value)
        else:
            out[key] = value
    return out


def mode_from_dict(section: dict, path: str) -> ModeParams:
    section = _resolve_rates(dict(section), path)
    eta = section.pop("eta", None)
    kappa = section.pop("kappa", None)
    if (eta is None) != (kappa is None):
        raise ConfigError(path, "eta and kappa must be given together")
    known = {"omega", "kappa_in", "kappa_ex", "delta", "n_bath", "n_waveguide"}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    try:
        if eta is not None:
            if "kappa_in" in section or "kappa_ex" in section:
                raise ConfigError(path, "give either kappa/eta or kappa_in/kappa_ex")
            return mode_from_linewidth(kappa=float(kappa), eta=float(eta),
                                       **{k: float(v) for k, v in section.items()})
        missing = {"omega", "kappa_in", "kappa_ex"} - set(section)
        if missing:
            raise ConfigError(f"{path}.{sorted(missing)[0]}", "required field missing")
        return ModeParams(**{k: float(v) for k, v in section.items()})
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def system_from_dict(config: dict, path: str = "system") -> SystemParams:
    """Build SystemParams from a nested configuration mapping.

    A ``preset`` key selects a measured device preset; any other keys
    override individual fields of it.  Without a preset all five mode
    sections are required.
    """
    if not isinstance(config, dict):
        raise ConfigError(path, "expected a mapping")
    config = dict(config)
    preset_name = config.pop("preset", None)
    base = None
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"{path}.preset",
                              f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}")
        base = PRESETS[preset_name]()

    modes = {}
    for name in ("pump", "signal", "stokes", "tm", "microwave"):
        sub = config.pop(name, None)
        if sub is not None:
            if base is not None:
                merged = _resolve_rates(dict(sub), f"{path}.{name}")
                try:
                    modes[name] = getattr(base, name).replace(
                        **{k: float(v) for k, v in merged.items()})
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{path}.{name}", str(exc)) from exc
            else:
                modes[name] = mode_from_dict(sub, f"{path}.{name}")
        elif base is not None:
            modes[name] = getattr(base, name)
        else:
            raise ConfigError(f"{path}.{name}", "required section missing")

    scalars = _resolve_rates(config, path)
    unknown = set(scalars) - {"g0", "j", "lambda_mm", "suppression"}
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    suppression = scalars.pop("suppression", None)
    defaults = {"g0": base.g0 if base else None,
                "j": base.j if base else 0.0,
                "lambda_mm": base.lambda_mm if base else 1.0}
    for key, default in defaults.items():
        scalars.setdefault(key, default)
    if scalars["g0"] is None:
        raise ConfigError(f"{path}.g0", "required field missing")
    try:
        system = SystemParams(**modes, **{k: float(v) for k, v in scalars.items()})
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc
    if suppression is not None:
        system = with_suppression(system, float(suppression))
    return system


def system_to_dict(system: SystemParams) -> dict:
    """Flatten to plain floats (angular units) for report metadata."""
    out = {"g0": system.g0, "j": system.j, "lambda_mm": system.lambda_mm}
    for name in ("pump", "signal", "stokes", "tm", "microwave"):
        mode = getattr(system, name)
        out[name] = {f: getattr(mode, f) for f in
                     ("omega", "kappa_in", "kappa_ex", "delta", "n_bath", "n_waveguide")}
    return out
