"""Problem configuration: schema, validation, presets and canonical serialization.

Files are flat key/value documents with dotted section names, read with the
TOML parser (``domain.modes = 32`` and ``[domain]`` tables are equivalent).
Every key lives in ``SCHEMA``; docs/config_schema.md lists them with defaults.
"""
from __future__ import annotations

import functools
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import functionals as fn
from .dynamics import DampingSchedule, DetectorThresholds, IntegratorControls, PDESystem
from .spectral import ConfigurationError, Domain, Field, build_domain

PRESETS = ("negative_energy", "subcritical_unstable", "small_data_global", "high_energy_growth")
INITIAL_KINDS = ("preset", "eigenmode", "coefficients")


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "eigenmode"
    preset: str = ""
    level: float | None = None  # preset knob; meaning documented per preset
    theta: float = 0.2  # high_energy_growth only
    mode: tuple[int, ...] = (1,)
    amplitude: float = 1.0
    velocity: float = 0.0
    u0: tuple = ()
    u1: tuple = ()


@dataclass(frozen=True)
class WellControls:
    restarts: int = 2
    mode_budget: int = 16
    seed: int = 0
    embedding_restarts: int = 6
    safety: float = 1.05


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    csv: str = "trajectory.csv"
    summary: str = "summary.txt"
    report: str = "analysis.txt"


@dataclass(frozen=True)
class ProblemConfig:
    name: str = "custom"
    dim: int = 1
    extents: tuple[float, ...] = (math.pi,)
    modes: tuple[int, ...] = (32,)
    grid_points: tuple[int, ...] | None = None
    p: float = 3.0
    sigma: float | None = None
    mu: float | None = None
    omega: float = 1.0
    damping: DampingSchedule = DampingSchedule()
    initial: InitialSpec = InitialSpec()
    integrator: IntegratorControls = IntegratorControls()
    detector: DetectorThresholds = DetectorThresholds()
    well: WellControls = WellControls()
    output: OutputSpec = OutputSpec()
    sweep: tuple[tuple[str, tuple], ...] = ()

    # -- derived objects ------------------------------------------------------

    def domain(self) -> Domain:
        return _domain(self.dim, self.extents, self.modes, self.grid_points)

    @property
    def exponents(self) -> fn.Exponents:
        return fn.make_exponents(self.p, self.dim, self.sigma, self.mu)

    def system(self) -> PDESystem:
        return PDESystem(self.domain(), self.p, self.omega, self.damping)

    def well_analysis(self) -> fn.WellAnalysis:
        w = self.well
        return _well(self.dim, self.extents, self.modes, self.grid_points, self.exponents,
                     w.restarts, w.mode_budget, w.seed, w.embedding_restarts, w.safety)

    def initial_fields(self) -> tuple[Field, Field]:
        return build_initial(self)

    def with_seed(self, seed: int) -> "ProblemConfig":
        return replace(self, well=replace(self.well, seed=int(seed)))

    def digest(self) -> str:
        """sha256 of the canonical form, output paths excluded."""
        text = "".join(line for line in serialize(self).splitlines(keepends=True) if not line.startswith("output."))
        return hashlib.sha256(text.encode()).hexdigest()


@functools.lru_cache(maxsize=32)
def _domain(dim, extents, modes, grid_points) -> Domain:
    return build_domain(dim, extents, modes, grid_points)


@functools.lru_cache(maxsize=32)
def _well(dim, extents, modes, grid_points, ex, restarts, mode_budget, seed, embedding_restarts, safety):
    return fn.analyze_well(_domain(dim, extents, modes, grid_points), ex, restarts, mode_budget, seed,
                           embedding_restarts, safety)


# --- schema ----------------------------------------------------------------------------
# key -> (attribute path, kind); kinds: int, float, str, ints, floats, coeffs, optfloat, optints

SCHEMA: dict[str, tuple[tuple[str, ...], str]] = {
    "name": (("name",), "str"),
    "domain.dim": (("dim",), "int"),
    "domain.extents": (("extents",), "floats"),
    "domain.modes": (("modes",), "ints"),
    "domain.grid_points": (("grid_points",), "optints"),
    "equation.p": (("p",), "float"),
    "equation.sigma": (("sigma",), "optfloat"),
    "equation.mu": (("mu",), "optfloat"),
    "equation.omega": (("omega",), "float"),
    "damping.kind": (("damping", "kind"), "str"),
    "damping.alpha0": (("damping", "alpha0"), "float"),
    "damping.rate": (("damping", "rate"), "float"),
    "initial.kind": (("initial", "kind"), "str"),
    "initial.preset": (("initial", "preset"), "str"),
    "initial.level": (("initial", "level"), "optfloat"),
    "initial.theta": (("initial", "theta"), "float"),
    "initial.mode": (("initial", "mode"), "ints"),
    "initial.amplitude": (("initial", "amplitude"), "float"),
    "initial.velocity": (("initial", "velocity"), "float"),
    "initial.u0": (("initial", "u0"), "coeffs"),
    "initial.u1": (("initial", "u1"), "coeffs"),
    "integrator.tolerance": (("integrator", "tolerance"), "float"),
    "integrator.dt_initial": (("integrator", "dt_initial"), "float"),
    "integrator.dt_max": (("integrator", "dt_max"), "float"),
    "integrator.t_max": (("integrator", "t_max"), "float"),
    "integrator.max_steps": (("integrator", "max_steps"), "int"),
    "detector.divergence": (("detector", "divergence"), "float"),
    "detector.dt_min": (("detector", "dt_min"), "float"),
    "well.restarts": (("well", "restarts"), "int"),
    "well.mode_budget": (("well", "mode_budget"), "int"),
    "well.seed": (("well", "seed"), "int"),
    "well.embedding_restarts": (("well", "embedding_restarts"), "int"),
    "well.safety": (("well", "safety"), "float"),
    "output.dir": (("output", "dir"), "str"),
    "output.csv": (("output", "csv"), "str"),
    "output.summary": (("output", "summary"), "str"),
    "output.report": (("output", "report"), "str"),
}


def _flatten(d: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        # sweep values are lists; everything else nests only through tables
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _coerce(key: str, kind: str, v, errors: list[str]):
    def bad(what):
        errors.append(f"{key}: expected {what}, got {v!r}")

    if kind == "str":
        return v if isinstance(v, str) else bad("a string")
    if kind == "int":
        return v if isinstance(v, int) and not isinstance(v, bool) else bad("an integer")
    if kind in ("float", "optfloat"):
        return float(v) if _is_num(v) else bad("a number")
    if kind in ("ints", "optints"):
        vs = v if isinstance(v, list) else [v]
        if all(isinstance(x, int) and not isinstance(x, bool) for x in vs):
            return tuple(vs)
        return bad("an integer or list of integers")
    if kind == "floats":
        vs = v if isinstance(v, list) else [v]
        if all(_is_num(x) for x in vs):
            return tuple(float(x) for x in vs)
        return bad("a number or list of numbers")
    if kind == "coeffs":
        try:
            a = np.asarray(v, dtype=float)
        except (TypeError, ValueError):
            return bad("a (nested) list of numbers")
        if a.ndim not in (1, 2) or not np.all(np.isfinite(a)):
            return bad("a finite 1D or 2D list of numbers")
        return _to_tuple(a)
    raise AssertionError(kind)


def _to_tuple(a: np.ndarray) -> tuple:
    if a.ndim == 1:
        return tuple(float(x) for x in a)
    return tuple(_to_tuple(r) for r in a)


def _apply(cfg: ProblemConfig, path: tuple[str, ...], value) -> ProblemConfig:
    if len(path) == 1:
        return replace(cfg, **{path[0]: value})
    sub = getattr(cfg, path[0])
    return replace(cfg, **{path[0]: replace(sub, **{path[1]: value})})


def from_flat(flat: dict[str, Any], base: ProblemConfig | None = None, verify_initial: bool = True) -> ProblemConfig:
    """Build and validate a config from dotted keys; raises with every violation."""
    errors: list[str] = []
    cfg = base if base is not None else ProblemConfig()
    sweep = []
    for key in flat:
        if key.startswith("sweep."):
            target, vals = key[len("sweep."):], flat[key]
            if target not in SCHEMA:
                errors.append(f"{key}: unknown sweep axis {target!r}")
            elif not isinstance(vals, list) or not vals:
                errors.append(f"{key}: expected a non-empty list of values")
            else:
                sweep.append((target, tuple(vals)))
            continue
        if key not in SCHEMA:
            errors.append(f"{key}: unknown key")
            continue
        path, kind = SCHEMA[key]
        v = _coerce(key, kind, flat[key], errors)
        if v is not None:
            cfg = _apply(cfg, path, v)
    if sweep:
        cfg = replace(cfg, sweep=tuple(sweep))
    # scalar extents/modes broadcast to dim
    for attr in ("extents", "modes", "grid_points"):
        val = getattr(cfg, attr)
        if val is not None and len(val) == 1 and cfg.dim == 2:
            cfg = replace(cfg, **{attr: val * 2})
    if len(cfg.initial.mode) == 1 and cfg.dim == 2:
        cfg = replace(cfg, initial=replace(cfg.initial, mode=cfg.initial.mode * 2))
    errors += violations(cfg)
    if not errors and verify_initial:
        try:
            build_initial(cfg)
        except ConfigurationError as exc:
            errors.append(str(exc))
    if errors:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(errors))
    return cfg


def violations(cfg: ProblemConfig) -> list[str]:
    out = []
    if cfg.dim not in (1, 2):
        out.append(f"domain.dim = {cfg.dim} must be 1 or 2")
        return out
    for attr in ("extents", "modes") + (("grid_points",) if cfg.grid_points is not None else ()):
        if len(getattr(cfg, attr)) != cfg.dim:
            out.append(f"domain.{attr} has {len(getattr(cfg, attr))} entries for dim = {cfg.dim}")
    if not out:
        try:
            cfg.domain()
        except ConfigurationError as exc:
            out += [f"domain: {m}" for m in str(exc).split("; ")]
    ex = fn.Exponents(cfg.p, cfg.sigma if cfg.sigma is not None else fn.default_sigma(cfg.p, cfg.dim),
                      cfg.mu if cfg.mu is not None else fn.default_mu(cfg.p, cfg.dim), cfg.dim) \
        if cfg.p > 2 else None
    if ex is None:
        out.append(f"equation.p = {cfg.p} violates the exponent hypothesis 2 < p < 2_*")
    else:
        out += [f"equation.{m}" for m in ex.violations()]
    if not (cfg.omega >= 0 and math.isfinite(cfg.omega)):
        out.append(f"equation.omega = {cfg.omega} must be finite and >= 0")
    out += cfg.damping.violations()
    ic = cfg.integrator
    if not 0 < ic.tolerance < 1:
        out.append(f"integrator.tolerance = {ic.tolerance} must lie in (0, 1)")
    if not (ic.t_max > 0 and math.isfinite(ic.t_max)):
        out.append(f"integrator.t_max = {ic.t_max} must be finite and > 0")
    if not ic.dt_initial > 0:
        out.append(f"integrator.dt_initial = {ic.dt_initial} must be > 0")
    if not ic.dt_max > 0:
        out.append(f"integrator.dt_max = {ic.dt_max} must be > 0")
    if ic.max_steps < 1:
        out.append(f"integrator.max_steps = {ic.max_steps} must be >= 1")
    if not cfg.detector.divergence > 0:
        out.append(f"detector.divergence = {cfg.detector.divergence} must be > 0")
    if not cfg.detector.dt_min > 0:
        out.append(f"detector.dt_min = {cfg.detector.dt_min} must be > 0")
    w = cfg.well
    if w.restarts < 1:
        out.append(f"well.restarts = {w.restarts} must be >= 1")
    if w.mode_budget < 1:
        out.append(f"well.mode_budget = {w.mode_budget} must be >= 1")
    if w.embedding_restarts < 1:
        out.append(f"well.embedding_restarts = {w.embedding_restarts} must be >= 1")
    if not w.safety >= 1:
        out.append(f"well.safety = {w.safety} must be >= 1")
    if w.seed < 0:
        out.append(f"well.seed = {w.seed} must be >= 0")
    init = cfg.initial
    if init.kind not in INITIAL_KINDS:
        out.append(f"initial.kind = {init.kind!r} must be one of {', '.join(INITIAL_KINDS)}")
    elif init.kind == "preset" and init.preset not in PRESETS:
        out.append(f"initial.preset = {init.preset!r} must be one of {', '.join(PRESETS)}")
    elif init.kind == "eigenmode":
        if len(init.mode) != cfg.dim:
            out.append(f"initial.mode has {len(init.mode)} entries for dim = {cfg.dim}")
        elif any(k < 1 or k > m for k, m in zip(init.mode, cfg.modes)):
            out.append(f"initial.mode = {list(init.mode)} outside retained modes {list(cfg.modes)}")
    elif init.kind == "coefficients":
        for nm in ("u0", "u1"):
            a = np.asarray(getattr(init, nm), dtype=float)
            if a.size and a.ndim != cfg.dim:
                out.append(f"initial.{nm} must be a {cfg.dim}D list")
            elif a.size and any(s > m for s, m in zip(a.shape, cfg.modes)):
                out.append(f"initial.{nm} has shape {a.shape} beyond modes {cfg.modes}")
    return out


def parse_config(path: str | Path, verify_initial: bool = True) -> ProblemConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: not a valid key/value document: {exc}") from None
    return from_flat(_flatten(raw), verify_initial=verify_initial)


# --- serialization ---------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            return ("-inf" if v < 0 else "inf") if math.isinf(v) else "nan"
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {v!r}")


def to_flat(cfg: ProblemConfig) -> dict[str, Any]:
    out = {}
    for key, (path, _) in SCHEMA.items():
        v = getattr(cfg, path[0])
        if len(path) == 2:
            v = getattr(v, path[1])
        if v is None or (key in ("initial.u0", "initial.u1") and not v):
            continue
        out[key] = v
    for target, vals in cfg.sweep:
        out[f"sweep.{target}"] = vals
    return out


def serialize(cfg: ProblemConfig) -> str:
    """Canonical text form: schema key order, shortest round-trip floats."""
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in to_flat(cfg).items())


def loads(text: str, verify_initial: bool = True) -> ProblemConfig:
    return from_flat(_flatten(tomllib.loads(text)), verify_initial=verify_initial)


def override(cfg: ProblemConfig, key: str, value) -> ProblemConfig:
    """Copy of cfg with one dotted key replaced (used by sweeps)."""
    flat = to_flat(cfg)
    flat.pop("sweep." + key, None)
    flat[key] = value
    flat = {k: (list(v) if isinstance(v, tuple) else v) for k, v in flat.items()}
    return from_flat(flat)


# --- initial data and presets ----------------------------------------------------------

PRESET_LEVELS = {
    # multiple of A0, where J(A0 phi_1) = 0
    "negative_energy": 1.2,
    # target J(u0) / d0 with u0 = A phi_1, A > lambda*(phi_1)
    "subcritical_unstable": 0.5,
    # multiple of lambda*(phi_1)
    "small_data_global": 0.11,
    # multiple of A0; u1 = c u0
    "high_energy_growth": 2.5,
}


def _first_mode(domain: Domain) -> Field:
    return Field.eigenmode(domain, (1,) * domain.dim, 1.0)


def _root(f, lo: float, hi: float) -> float:
    from scipy.optimize import brentq

    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def _zero_energy_amplitude(phi: Field, p: float) -> float:
    fs = fn.FiberScalars.of(phi, p)
    lo = fn.lambda_star_from_scalars(fs)
    hi = 2.0 * lo
    while fs.J(hi) > 0:
        hi *= 2.0
    return _root(lambda a: fs.J(a), lo, hi)


def build_initial(cfg: ProblemConfig) -> tuple[Field, Field]:
    d = cfg.domain()
    init = cfg.initial
    if init.kind == "eigenmode":
        phi = Field.eigenmode(d, init.mode, 1.0)
        return init.amplitude * phi, init.velocity * phi
    if init.kind == "coefficients":
        return _pad_coeffs(d, init.u0), _pad_coeffs(d, init.u1)
    return _preset_fields(cfg, d)


def _pad_coeffs(d: Domain, c: tuple) -> Field:
    out = np.zeros(d.modes)
    a = np.asarray(c, dtype=float)
    if a.size:
        out[tuple(slice(0, s) for s in a.shape)] = a
    return Field(d, out)


def _preset_fields(cfg: ProblemConfig, d: Domain) -> tuple[Field, Field]:
    name, init, p = cfg.initial.preset, cfg.initial, cfg.p
    level = PRESET_LEVELS[name] if init.level is None else init.level
    phi = _first_mode(d)
    fs = fn.FiberScalars.of(phi, p)
    lstar = fn.lambda_star_from_scalars(fs)
    zero = Field.zeros(d)

    def fail(msg):
        raise ConfigurationError(f"preset {name} (level {level!r}): {msg}")

    if name == "negative_energy":
        u0 = level * _zero_energy_amplitude(phi, p) * phi
        E0 = fn.energy(u0, zero, p)
        if not E0 < 0:
            fail(f"E(0) = {E0!r} is not negative")
        return u0, zero

    if name == "small_data_global":
        u0 = level * lstar * phi
        well = cfg.well_analysis()
        E0, I0 = fn.energy(u0, zero, p), fn.I(u0, p)
        if not (I0 > 0 and E0 < well.d_est):
            fail(f"needs I(u0) > 0 and E(0) < d_est; got I(u0) = {I0!r}, E(0) = {E0!r}, d_est = {well.d_est!r}")
        return u0, zero

    if name == "subcritical_unstable":
        well = cfg.well_analysis()
        target = level * well.d0
        A0 = _zero_energy_amplitude(phi, p)
        if not 0 < target < fs.J(lstar):
            fail(f"target energy {target!r} outside (0, J(lambda* phi_1)) = (0, {fs.J(lstar)!r})")
        u0 = _root(lambda a: fs.J(a) - target, lstar, A0) * phi
        E0, I0 = fn.energy(u0, zero, p), fn.I(u0, p)
        if not (I0 < 0 and 0 < E0 < well.d_est):
            fail(f"needs I(u0) < 0 and 0 < E(0) < d_est; got I(u0) = {I0!r}, E(0) = {E0!r}, d_est = {well.d_est!r}")
        return u0, zero

    # high_energy_growth: u1 = c u0 chosen so E(0) = theta (C0/p)(u0, u1)
    from .bounds import c0

    u0 = level * _zero_energy_amplitude(phi, p) * phi
    m = fn.l2_norm_sq(u0)
    j = -fn.J(u0, p) / m
    k = init.theta * c0(p, d.lambda1) / p
    if not j > 0:
        fail("J(u0) must be negative")
    c = k + math.sqrt(k * k + 2.0 * j)
    u1 = c * u0
    rt = fn.classify_initial_data(u0, u1, _dummy_well(), cfg.exponents, d.lambda1)
    if not rt.has("HighEnergyGrowth"):
        fail(f"growth condition 0 < E(0) < (C0/p)(u0,u1) fails: E(0) = {rt.E0!r}, (u0,u1) = {rt.uv0!r}")
    return u0, u1


def _dummy_well() -> fn.WellAnalysis:
    # classification of the growth tags needs no well data
    nan = float("nan")
    return fn.WellAnalysis(nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, 0, 0, 0)


def preset_config(name: str, **overrides) -> ProblemConfig:
    """The shipped configuration for a named preset."""
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    base = ProblemConfig(name=name, initial=InitialSpec(kind="preset", preset=name))
    if name == "small_data_global":
        base = replace(base, modes=(16,), integrator=IntegratorControls(tolerance=1e-8, t_max=3.0, dt_max=0.05))
    else:
        base = replace(base, integrator=IntegratorControls(tolerance=1e-6, t_max=20.0, dt_max=0.05))
    flat = {k: (list(v) if isinstance(v, tuple) else v) for k, v in {**to_flat(base), **overrides}.items()}
    return from_flat(flat)
