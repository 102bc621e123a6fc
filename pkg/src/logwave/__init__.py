"""Sine-spectral simulation and potential-well analysis of

    u_tt + Δ²u − Δu − ω Δu_t + α(t) u_t = |u|^(p−2) u ln|u|

on intervals and rectangles with u = Δu = 0 on the boundary.
"""
from .spectral import ConfigurationError, Domain, DomainMismatchError, Field, build_domain
from .functionals import Exponents, WellAnalysis, analyze_well, make_exponents
from .dynamics import DampingSchedule, IntegratorControls, PDESystem, TrajectoryRecord, simulate
from .config import PRESETS, ProblemConfig, parse_config, preset_config

__all__ = [
    "ConfigurationError", "Domain", "DomainMismatchError", "Field", "build_domain",
    "Exponents", "WellAnalysis", "analyze_well", "make_exponents",
    "DampingSchedule", "IntegratorControls", "PDESystem", "TrajectoryRecord", "simulate",
    "PRESETS", "ProblemConfig", "parse_config", "preset_config",
]

__version__ = "0.1.0"
