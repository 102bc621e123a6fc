"""Time integration of

    u_tt + Δ²u − Δu − ω Δu_t + α(t) u_t = |u|^(p−2) u ln|u|

by Strang splitting: half kick with the nonlinear source, exact propagation of
each sine mode's damped oscillator over the full step (α frozen at the step
midpoint), half kick. Step size is adapted by step doubling with a PI
controller on the error per unit step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
from scipy import fft

from .spectral import Domain, Field

if TYPE_CHECKING:
    from .config import ProblemConfig


@dataclass(frozen=True)
class DampingSchedule:
    kind: str = "constant"
    alpha0: float = 1.0
    rate: float = 0.0

    def violations(self) -> list[str]:
        out = []
        if self.kind not in ("constant", "exponential-decay"):
            out.append(f"damping.kind = {self.kind!r} must be 'constant' or 'exponential-decay'")
        if not (self.alpha0 >= 0 and math.isfinite(self.alpha0)):
            out.append(f"damping.alpha0 = {self.alpha0} must be finite and >= 0")
        if self.kind == "exponential-decay" and not self.rate >= 0:
            out.append(
                f"damping.rate = {self.rate} makes alpha(t) increasing; "
                "alpha must be a nonincreasing bounded nonnegative function"
            )
        return out

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.alpha0
        return self.alpha0 * math.exp(-self.rate * t)

    def is_unit(self) -> bool:
        return self(0.0) == 1.0 and (self.kind == "constant" or self.rate == 0.0)


@dataclass(frozen=True)
class PDESystem:
    domain: Domain
    p: float
    omega: float
    damping: DampingSchedule
    nonlinear: bool = True

    @cached_property
    def kernel(self) -> "_Kernel":
        return _Kernel(self)

    def force(self, u_coeffs: np.ndarray) -> tuple[np.ndarray, float, float]:
        """Projected source f(u) plus the grid integrals L(u) = ∫u f(u) and P(u) = ∫|u|^p."""
        return self.kernel.force(u_coeffs)


@dataclass(frozen=True)
class IntegratorControls:
    tolerance: float = 1e-8
    dt_initial: float = 1e-3
    dt_max: float = 0.05
    t_max: float = 10.0
    max_steps: int = 2_000_000


@dataclass(frozen=True)
class DetectorThresholds:
    divergence: float = 1e8
    dt_min: float = 1e-12


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray
    v: np.ndarray
    dissipation: float = 0.0
    accumulated_h1: float = 0.0
    _force: tuple | None = field(default=None, repr=False, compare=False)

    def fields(self, domain: Domain) -> tuple[Field, Field]:
        return Field(domain, self.u), Field(domain, self.v)


def initial_state(u0: Field, u1: Field) -> State:
    return State(0.0, np.array(u0.coeffs), np.array(u1.coeffs))


_DENSE_MAX = 256


class _Kernel:
    """Per-system constants for the time stepper."""

    def __init__(self, system: PDESystem):
        d = system.domain
        self.system = system
        self.p = system.p
        self.lam = np.array(d.lambda_table)
        self.kappa = np.array(d.bilaplacian_table) + self.lam
        self.w = d.norm_weight
        self.h1w = self.w * (1.0 + self.lam)
        self.interior = tuple(n - 1 for n in d.grid_points)
        self.window = tuple(slice(0, m) for m in d.modes)
        self.fwd_scale = 0.5**d.dim
        self.inv_scale = 1.0 / float(np.prod(d.grid_points))
        self.cell = float(np.prod([L / n for L, n in zip(d.extents, d.grid_points)]))
        self._modal: dict[float, tuple] = {}
        # small grids: dense sine matrices beat the FFT call overhead
        self.dense = max(d.grid_points) <= _DENSE_MAX
        if self.dense:
            self.synth = [
                np.sin(np.pi * np.outer(np.arange(1, n), np.arange(1, m + 1)) / n)
                for n, m in zip(d.grid_points, d.modes)
            ]
            self.anal = [S.T * (2.0 / n) for S, n in zip(self.synth, d.grid_points)]

    def _samples(self, c: np.ndarray) -> np.ndarray:
        if self.dense:
            if c.ndim == 1:
                return self.synth[0] @ c
            return self.synth[0] @ c @ self.synth[1].T
        buf = np.zeros(self.interior)
        buf[self.window] = c
        return fft.dstn(buf, type=1) * self.fwd_scale

    def _coeffs(self, s: np.ndarray) -> np.ndarray:
        if self.dense:
            if s.ndim == 1:
                return self.anal[0] @ s
            return self.anal[0] @ s @ self.anal[1].T
        return fft.dstn(s, type=1)[self.window] * self.inv_scale

    def force(self, u_coeffs: np.ndarray) -> tuple[np.ndarray, float, float]:
        s = self._samples(u_coeffs)
        a = np.abs(s)
        la = np.log(a, out=np.zeros_like(a), where=a > 0)
        apm2 = a if self.p == 3.0 else a ** (self.p - 2.0)
        fs = apm2 * s * la
        # trapezoid weights are uniform on interior nodes; boundary samples vanish
        L = self.cell * float(np.vdot(fs, s))
        P = self.cell * float(np.vdot(apm2 * a, a))
        if not self.system.nonlinear:
            return np.zeros(u_coeffs.shape), L, P
        return self._coeffs(fs), L, P

    def propagator(self, alpha: float, dt: float):
        modal = self._modal.get(alpha)
        if modal is None:
            if len(self._modal) > 64:
                self._modal.clear()
            modal = self._modal[alpha] = _modal_data(self.system.omega * self.lam + alpha, self.kappa)
        return _propagate(modal, self.kappa, dt)


def _modal_data(gamma: np.ndarray, kappa: np.ndarray) -> tuple:
    s = 0.5 * np.asarray(gamma, dtype=float)
    disc = s * s - kappa
    under = disc < 0
    om = np.sqrt(np.where(under, -disc, 0.0))
    dl = np.sqrt(np.where(under, 0.0, disc))
    return s, under, om, dl, bool(under.all())


def _propagate(modal: tuple, kappa: np.ndarray, dt: float):
    """Entries of exp(dt [[0, 1], [−κ, −γ]]) per mode, overflow-free."""
    s, under, om, dl, all_under = modal
    if all_under:
        decay = np.exp(-s * dt)
        c = decay * np.cos(om * dt)
        sn = decay * np.sin(om * dt) / om
    else:
        c = np.empty_like(s)
        sn = np.empty_like(s)
        if np.any(under):
            decay = np.exp(-s[under] * dt)
            c[under] = decay * np.cos(om[under] * dt)
            sn[under] = decay * np.sin(om[under] * dt) / om[under]
        over = ~under
        dlo, so = dl[over], s[over]
        slow = np.exp(-kappa[over] / (so + dlo) * dt)  # exp((δ − s) dt)
        fast = np.exp(-(so + dlo) * dt)
        c[over] = 0.5 * (slow + fast)
        # (slow − fast)/(2δ); the expm1 form survives δ → 0
        x = np.minimum(2.0 * dlo * dt, 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            small = fast * np.expm1(x) / (2.0 * dlo)
            large = (slow - fast) / (2.0 * dlo)
        sn[over] = np.where(dlo == 0, dt * fast, np.where(2.0 * dlo * dt < 1.0, small, large))
    return c + s * sn, sn, -kappa * sn, c - s * sn


def _propagator(gamma: np.ndarray, kappa: np.ndarray, dt: float):
    kappa = np.asarray(kappa, dtype=float)
    return _propagate(_modal_data(gamma, kappa), kappa, dt)


def step(state: State, dt: float, system: PDESystem) -> State:
    """One Strang step of length dt."""
    k = system.kernel
    kappa = k.kappa

    fu = state._force if state._force is not None else k.force(state.u)
    u, v = state.u, state.v + 0.5 * dt * fu[0]

    a11, a12, a21, a22 = k.propagator(system.damping(state.t + 0.5 * dt), dt)
    e_before = 0.5 * (np.dot(v.ravel(), v.ravel()) + np.dot((kappa * u).ravel(), u.ravel()))
    u, v = a11 * u + a12 * v, a21 * u + a22 * v
    e_after = 0.5 * (np.dot(v.ravel(), v.ravel()) + np.dot((kappa * u).ravel(), u.ravel()))

    fn = k.force(u)
    v = v + 0.5 * dt * fn[0]

    h1_old = np.dot((k.h1w * state.u).ravel(), state.u.ravel())
    h1_new = np.dot((k.h1w * u).ravel(), u.ravel())
    return State(
        t=state.t + dt,
        u=u,
        v=v,
        dissipation=state.dissipation + k.w * (e_before - e_after),
        accumulated_h1=state.accumulated_h1 + 0.5 * dt * (h1_old + h1_new),
        _force=fn,
    )


def _energy_norm(system: PDESystem, du: np.ndarray, dv: np.ndarray) -> float:
    k = system.kernel
    du, dv = du.ravel(), dv.ravel()
    return math.sqrt(k.w * float(np.dot(k.kappa.ravel() * du, du) + np.dot(dv, dv)))


COLUMNS = ("t", "E", "J", "I", "l2_sq", "h1_sq", "H_sq", "v_l2_sq", "uv_inner", "N", "H_growth", "dt")
EXTRA_COLUMNS = ("P", "L", "dissipation", "acc_h1", "grad_v_sq")


@dataclass
class BlowupVerdict:
    status: str  # "Continue" | "BlowUp"
    T_num: float | None = None
    bracket: tuple[float, float] | None = None
    reason: str = ""


@dataclass
class TrajectoryRecord:
    p: float
    omega: float
    C0: float
    data: dict[str, np.ndarray]
    termination: str = "t_max"
    blowup: BlowupVerdict = field(default_factory=lambda: BlowupVerdict("Continue"))
    rejected_steps: int = 0

    def __getitem__(self, key: str) -> np.ndarray:
        return self.data[key]

    def __len__(self) -> int:
        return len(self.data["t"])

    def divergence_measure(self) -> np.ndarray:
        return self.data["l2_sq"] + self.data["acc_h1"]


def diagnostics(state: State, system: PDESystem, C0: float, dt: float) -> dict[str, float]:
    d = system.domain
    lam = d.lambda_table
    w = d.norm_weight
    u, v = state.u, state.v
    fu = state._force if state._force is not None else system.force(u)
    _, L, P = fu
    p = system.p
    l2 = w * float(np.sum(u * u))
    grad = w * float(np.sum(lam * u * u))
    H = w * float(np.sum((lam * lam + lam) * u * u))
    vl2 = w * float(np.sum(v * v))
    uv = w * float(np.sum(u * v))
    Jv = 0.5 * H - L / p + P / p**2
    E = 0.5 * vl2 + Jv
    return {
        "t": state.t, "E": E, "J": Jv, "I": H - L, "l2_sq": l2, "h1_sq": l2 + grad, "H_sq": H,
        "v_l2_sq": vl2, "uv_inner": uv, "N": vl2 + H, "H_growth": uv - p / C0 * E, "dt": dt,
        "P": P, "L": L, "dissipation": state.dissipation, "acc_h1": state.accumulated_h1,
        "grad_v_sq": w * float(np.sum(lam * v * v)),
    }


def _finite(state: State) -> bool:
    return bool(np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v))) and math.isfinite(
        state.dissipation
    )


def integrate_system(
    system: PDESystem,
    u0: Field,
    u1: Field,
    controls: IntegratorControls,
    thresholds: DetectorThresholds = DetectorThresholds(),
) -> tuple[TrajectoryRecord, State]:
    from .bounds import c0 as _c0

    C0 = _c0(system.p, system.domain.lambda1)
    cols = COLUMNS + EXTRA_COLUMNS
    rows: dict[str, list[float]] = {k: [] for k in cols}

    def push(st: State, h: float) -> None:
        for k, val in diagnostics(st, system, C0, h).items():
            rows[k].append(val)

    state = initial_state(u0, u1)
    state = replace(state, _force=system.force(state.u))
    push(state, 0.0)

    tol = controls.tolerance
    dt = min(controls.dt_initial, controls.dt_max)
    prev_ratio = 1.0
    termination = "t_max"
    verdict = BlowupVerdict("Continue")
    rejected = 0
    steps = 0
    eps_t = 1e-14 * max(1.0, controls.t_max)

    while state.t < controls.t_max - eps_t:
        if steps >= controls.max_steps:
            termination = "max_steps"
            break
        h = min(dt, controls.dt_max, controls.t_max - state.t)
        if h < thresholds.dt_min:
            N = rows["N"]
            if len(N) >= 2 and N[-1] > N[-2]:
                verdict = BlowupVerdict("BlowUp", state.t, (state.t, state.t + h), "dt_underflow")
                termination = "blow_up"
            else:
                termination = "dt_underflow"
            break
        big = step(state, h, system)
        half = step(state, 0.5 * h, system)
        fine = step(half, 0.5 * h, system)
        if _finite(big) and _finite(fine):
            nrm = _energy_norm(system, fine.u, fine.v)
            err = _energy_norm(system, fine.u - big.u, fine.v - big.v) / (3.0 * max(1.0, nrm))
            ratio = err / (tol * h)
        else:
            ratio = math.inf
        if ratio <= 1.0:
            state = fine
            steps += 1
            push(state, h)
            fac = 0.9 * max(ratio, 1e-10) ** -0.35 * prev_ratio**0.2
            dt = h * min(1.5, max(0.2, fac))
            prev_ratio = max(ratio, 1e-4)
            measure = rows["l2_sq"][-1] + rows["acc_h1"][-1]
            if measure > thresholds.divergence:
                verdict = BlowupVerdict("BlowUp", state.t, (rows["t"][-2], state.t), "threshold")
                termination = "blow_up"
                break
        else:
            rejected += 1
            fac = 0.2 if not math.isfinite(ratio) else max(0.2, 0.9 * ratio**-0.5)
            dt = h * fac

    data = {k: np.asarray(vals, dtype=float) for k, vals in rows.items()}
    rec = TrajectoryRecord(system.p, system.omega, C0, data, termination, verdict, rejected)
    return rec, state


def simulate(config: "ProblemConfig") -> tuple[TrajectoryRecord, State]:
    system = config.system()
    u0, u1 = config.initial_fields()
    return integrate_system(system, u0, u1, config.integrator, config.detector)


def detect_blowup(record: TrajectoryRecord, thresholds: DetectorThresholds = DetectorThresholds()) -> BlowupVerdict:
    """Scan a record for the first sample whose blow-up measure crosses the threshold.

    Falls back to the record's own verdict for runs that stopped on dt underflow.
    """
    m = record.divergence_measure()
    t = record["t"]
    over = np.nonzero(m > thresholds.divergence)[0]
    if over.size:
        j = int(over[0])
        lo = float(t[j - 1]) if j > 0 else float(t[0])
        return BlowupVerdict("BlowUp", float(t[j]), (lo, float(t[j])), "threshold")
    if record.blowup.status == "BlowUp" and record.blowup.reason == "dt_underflow":
        return record.blowup
    return BlowupVerdict("Continue")


def dissipation_residual(record: TrajectoryRecord) -> np.ndarray:
    E = record["E"]
    return E - E[0] + record["dissipation"]


def max_relative_residual(record: TrajectoryRecord) -> float:
    r = dissipation_residual(record)
    return float(np.max(np.abs(r)) / max(1.0, abs(record["E"][0])))


def energy_monotone(record: TrajectoryRecord, rel_tol: float = 1e-8) -> bool:
    E = record["E"]
    tol = rel_tol * max(1.0, abs(E[0]))
    return bool(np.all(np.diff(E) <= tol))
