"""Cavity electro-optic transduction: time-domain simulation,
frequency-domain scattering and noise, parameter fitting, calibration."""

from ._version import __version__
from .params import (
    Cooperativities,
    ModeParams,
    SystemParams,
    cooperativity,
    high_coop_system,
    low_coop_system,
    pump_photons,
    suppression_ratio,
)

__all__ = [
    "__version__",
    "ModeParams",
    "SystemParams",
    "Cooperativities",
    "cooperativity",
    "pump_photons",
    "suppression_ratio",
    "high_coop_system",
    "low_coop_system",
]
