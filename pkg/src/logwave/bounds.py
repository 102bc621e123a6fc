"""Closed-form lifespan bounds and trajectory audits.

Upper bounds come from the concavity argument in the lower-energy
(unstable-set) and high-energy regimes; the lower bound integrates the
first-order inequality N' <= C4 + C5 N^(p-1+mu) for N = ‖u_t‖₂² + ‖u‖²_H.
All three are derived for ω = 1 and α ≡ 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from . import functionals as fn
from .spectral import Field


class NotApplicable(Exception):
    """The hypotheses of the bound or monitor are not met."""


def c0(p: float, lambda1: float) -> float:
    return min(p + 2.0, p * (p - 2.0) * lambda1, (p - 2.0) * (lambda1 + lambda1**2) / 2.0)


@dataclass(frozen=True)
class DataScalars:
    """Scalars of the initial data that every bound is written in."""

    m: float  # ‖u0‖₂²
    h1: float  # ‖u0‖² (H¹)
    uv: float  # (u0, u1)
    E0: float
    I0: float
    N0: float  # ‖u1‖₂² + ‖u0‖²_H

    @classmethod
    def of(cls, u0: Field, u1: Field, p: float) -> "DataScalars":
        return cls(
            m=fn.l2_norm_sq(u0),
            h1=fn.h1_norm_sq(u0),
            uv=float(u0.domain.norm_weight * np.sum(u0.coeffs * u1.coeffs)),
            E0=fn.energy(u0, u1, p),
            I0=fn.I(u0, p),
            N0=fn.l2_norm_sq(u1) + fn.h_norm_sq(u0),
        )


def concavity_time(tau, s: DataScalars, b: float, p: float):
    """T(τ) = 2(‖u0‖₂² + bτ²) / ((p−2)[(u0,u1) + bτ] − 2‖u0‖²); +inf where the denominator is <= 0."""
    tau = np.asarray(tau, dtype=float)
    den = (p - 2.0) * (s.uv + b * tau) - 2.0 * s.h1
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, 2.0 * (s.m + b * tau**2) / den, np.inf)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SubcriticalBound:
    a: float
    b: float
    tau0: float
    T_upper: float
    d_used: float


def subcritical_bound_from_scalars(s: DataScalars, d: float, p: float) -> SubcriticalBound:
    b = d - s.E0
    if not b > 0:
        raise NotApplicable(f"b = d - E(0) = {b} is not positive")
    k = p - 2.0
    a = 2.0 * s.h1 - k * s.uv
    R = math.sqrt(a * a + k * k * b * s.m)
    # R + a without cancellation when a < 0
    r_plus_a = R + a if a >= 0 else k * k * b * s.m / (R - a)
    return SubcriticalBound(a=a, b=b, tau0=r_plus_a / (k * b), T_upper=4.0 * r_plus_a / (k * k * b), d_used=d)


def upper_bound_subcritical(u0: Field, u1: Field, d_est: float, p: float) -> SubcriticalBound:
    s = DataScalars.of(u0, u1, p)
    if u0.is_zero() or not s.I0 < 0:
        raise NotApplicable(f"u0 not in the unstable set: I(u0) = {s.I0}")
    if not s.E0 < d_est:
        raise NotApplicable(f"E(0) = {s.E0} >= d_est = {d_est}")
    return subcritical_bound_from_scalars(s, d_est, p)


@dataclass(frozen=True)
class HighEnergyBound:
    beta: float
    t0: float
    t0_min: float
    T_upper: float


def high_energy_bound_from_scalars(s: DataScalars, p: float, C0: float) -> HighEnergyBound:
    if not 0 < s.E0 < C0 / p * s.uv:
        raise NotApplicable(f"growth condition 0 < E(0) < (C0/p)(u0,u1) fails: E(0) = {s.E0}, (C0/p)(u0,u1) = {C0 / p * s.uv}")
    if not s.E0 < C0 / p * s.m:
        raise NotApplicable(f"E(0) = {s.E0} >= (C0/p)||u0||_2^2 = {C0 / p * s.m}")
    beta = 2.0 * (C0 / p * s.m - s.E0)
    k = p - 2.0
    t0_min = max(0.0, (2.0 * s.h1 - k * s.uv) / (k * beta))
    lo = t0_min * (1.0 + 1e-6)

    def T(t0):
        return concavity_time(t0, s, beta, p)

    delta = max(lo, 1.0 / max(beta, 1e-300) ** 0.5, 1e-8)
    for _ in range(200):
        if T(lo + delta) < T(lo):
            break
        delta *= 0.5
    for _ in range(200):
        if T(lo + 2.0 * delta) >= T(lo + delta):
            break
        delta *= 2.0
    res = optimize.minimize_scalar(T, bracket=(lo, lo + delta, lo + 2.0 * delta), method="golden", tol=1e-12)
    t0 = float(res.x)
    if T(lo) <= T(t0):
        t0 = lo
    return HighEnergyBound(beta=beta, t0=t0, t0_min=t0_min, T_upper=float(T(t0)))


def upper_bound_high_energy(u0: Field, u1: Field, p: float, C0: float) -> HighEnergyBound:
    return high_energy_bound_from_scalars(DataScalars.of(u0, u1, p), p, C0)


# --- lower bound -----------------------------------------------------------------

@dataclass(frozen=True)
class LowerBound:
    C4: float
    C5: float
    exponent: float  # p - 1 + mu
    N0: float
    T_lower: float
    S: float
    A: float
    B: float
    holder_weight: float


def lower_bound_constants(
    n: int, p: float, mu: float, measure: float, B_mu: float, S: float
) -> tuple[float, float, float, float, float]:
    """(C4, C5, A, B, θ) for N' <= C4 + C5 N^(p-1+mu).

    ∫u_t f(u) <= ‖u_t‖_r' (A + B‖u‖_H^(p-1+mu)) with
    A = |Ω|^θ / (e(p-1)), B = B_mu^(p-1+mu) / (e mu), ‖u_t‖_r' <= S‖u_t‖, then
    Young with ε = 1 absorbs ‖u_t‖² into the damping. The Hölder pair is (2, 2)
    with θ = 1/2 for n <= 2 and (2n/(n-2), 2n/(n+2)) with θ = (n+2)/(2n) above.
    """
    theta = 0.5 if n <= 2 else (n + 2.0) / (2.0 * n)
    A = measure**theta / (math.e * (p - 1.0))
    B = B_mu ** (p - 1.0 + mu) / (math.e * mu)
    return S * S * A * A, S * S * B * B, A, B, theta


def lifespan_integral(N0: float, C4: float, C5: float, q: float, rtol: float = 1e-13) -> float:
    """∫_{N0}^∞ ds / (C4 + C5 s^q) for q > 1."""
    if not (q > 1 and C5 > 0 and C4 >= 0 and N0 >= 0):
        raise ValueError("need q > 1, C5 > 0, C4 >= 0, N0 >= 0")
    if C4 == 0:
        if N0 == 0:
            return math.inf
        return N0 ** (1.0 - q) / (C5 * (q - 1.0))
    # tail beyond M where C4 is below 1e-16 of C5 s^q
    M = max(N0, (1e16 * C4 / C5) ** (1.0 / q), 1.0)
    tail = M ** (1.0 - q) / (C5 * (q - 1.0))
    if M == N0:
        return tail
    main = 0.0
    lo = N0
    if lo < 1.0:
        # near zero the integrand is flat; integrate directly up to s = 1
        top = min(1.0, M)
        main, _ = sp_integrate.quad(lambda s: 1.0 / (C4 + C5 * s**q), lo, top, epsabs=0.0, epsrel=rtol, limit=500)
        lo = top
    if lo < M:
        def integrand(x):
            return math.exp(x) / (C4 + C5 * math.exp(q * x))

        part, _ = sp_integrate.quad(integrand, math.log(lo), math.log(M), epsabs=0.0, epsrel=rtol, limit=500)
        main += part
    return main + tail


def lower_bound(
    u0: Field, u1: Field, ex: fn.Exponents, B_mu: float, S: float | None = None
) -> LowerBound:
    d = u0.domain
    if S is None:
        if d.dim > 2:
            raise ValueError("S must be supplied for n >= 3")
        S = 1.0 / math.sqrt(1.0 + d.lambda1)  # sup ‖v‖₂/‖v‖, attained at the first mode
    C4, C5, A, B, theta = lower_bound_constants(d.dim, ex.p, ex.mu, d.measure, B_mu, S)
    q = ex.p - 1.0 + ex.mu
    N0 = fn.l2_norm_sq(u1) + fn.h_norm_sq(u0)
    return LowerBound(C4, C5, q, N0, lifespan_integral(N0, C4, C5, q), S, A, B, theta)


# --- trajectory monitors ---------------------------------------------------------------

@dataclass
class Verdict:
    status: str  # "Pass" | "Fail" | "NotApplicable"
    detail: str = ""
    first_violation: int | None = None
    worst_slack: float | None = None

    @property
    def passed(self) -> bool:
        return self.status == "Pass"


def monitor_growth_H(record, C0: float, p: float, rel_slack: float = 1e-3) -> Verdict:
    t = record["t"]
    H = record["uv_inner"] - p / C0 * record["E"]
    if not H[0] > 0:
        return Verdict("NotApplicable", f"H(0) = {H[0]:.6g} <= 0")
    with np.errstate(over="ignore"):
        target = (1.0 - rel_slack) * H[0] * np.exp(C0 * t)
    ratio = H / target
    bad = np.nonzero(ratio < 1.0)[0]
    worst = float(np.min(ratio))
    if bad.size:
        j = int(bad[0])
        return Verdict("Fail", f"H(t)={H[j]:.6g} < bound {target[j]:.6g} at t={t[j]:.6g}", j, worst)
    return Verdict("Pass", f"min H(t)/((1-{rel_slack:g}) H(0) e^(C0 t)) = {worst:.6g}", None, worst)


def concavity_terms(record, b: float, tau: float, T_star: float | None = None):
    t = record["t"]
    if T_star is None:
        T_star = float(t[-1])
    h1_0 = record["h1_sq"][0]
    G = record["l2_sq"] + record["acc_h1"] + (T_star - t) * h1_0 + b * (t + tau) ** 2
    Gp = 2.0 * record["uv_inner"] + record["h1_sq"] - h1_0 + 2.0 * b * (t + tau)
    Gpp = np.gradient(Gp, t)
    return G, Gp, Gpp


def monitor_concavity_G(record, b: float, tau: float, p: float, tol: float = 1e-3,
                        T_star: float | None = None) -> Verdict:
    if record["l2_sq"][0] == 0 or not b > 0:
        return Verdict("NotApplicable", "zero data or b <= 0: unstable-set hypothesis unmet")
    if record["I"][0] >= 0:
        return Verdict("NotApplicable", f"I(u0) = {record['I'][0]:.6g} >= 0")
    if len(record) < 3:
        raise ValueError("record too short for differencing")
    G, Gp, Gpp = concavity_terms(record, b, tau, T_star)
    q = G * Gpp - (p + 2.0) / 4.0 * Gp**2
    scale = G * np.abs(Gpp)
    inner = slice(1, -1)
    rel = q[inner] / np.where(scale[inner] > 0, scale[inner], 1.0)
    bad = np.nonzero(q[inner] < -tol * scale[inner])[0]
    worst = float(np.min(rel))
    if bad.size:
        j = int(bad[0]) + 1
        return Verdict("Fail", f"G G'' - (p+2)/4 G'^2 = {q[j]:.6g} at t={record['t'][j]:.6g}", j, worst)
    return Verdict("Pass", f"min (GG''-(p+2)/4 G'^2)/(G|G''|) = {worst:.6g}", None, worst)


def monitor_invariance(record, d_est: float, p: float, margin: float = 1e-6) -> Verdict:
    """I(u(t)) < 0 and ((p-2)/2p)‖u‖²_H + ‖u‖_p^p/p² > d_est − margin at every sample."""
    if record["I"][0] >= 0:
        return Verdict("NotApplicable", "I(u0) >= 0")
    floor = (p - 2.0) / (2.0 * p) * record["H_sq"] + record["P"] / p**2
    bad_i = np.nonzero(record["I"] >= 0)[0]
    bad_f = np.nonzero(floor <= d_est - margin)[0]
    worst = float(np.min(floor - d_est))
    if bad_i.size or bad_f.size:
        j = int(min(bad_i.min() if bad_i.size else 1 << 62, bad_f.min() if bad_f.size else 1 << 62))
        return Verdict("Fail", f"left the unstable set at t={record['t'][j]:.6g}", j, worst)
    return Verdict("Pass", f"max I = {np.max(record['I']):.6g}, min(floor - d_est) = {worst:.6g}", None, worst)


# --- audit ---------------------------------------------------------------------

@dataclass
class BoundReport:
    regime: fn.RegimeTag
    C0: float
    termination: str
    T_num: float | None
    T_num_bracket: tuple[float, float] | None
    subcritical: SubcriticalBound | None = None
    subcritical_rigorous: SubcriticalBound | None = None
    high_energy: HighEnergyBound | None = None
    lower: LowerBound | None = None
    T_upper: float | None = None
    T_upper_kind: str = "none"
    verdicts: dict[str, Verdict] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def items(self) -> list[tuple[str, object]]:
        out: list[tuple[str, object]] = [(f"regime.{k}", v) for k, v in self.regime.as_items()]
        out += [("C0", self.C0), ("termination", self.termination), ("T_num", self.T_num)]
        if self.T_num_bracket is not None:
            out += [("T_num_lo", self.T_num_bracket[0]), ("T_num_hi", self.T_num_bracket[1])]
        for name, obj in (("subcritical", self.subcritical), ("subcritical_rigorous", self.subcritical_rigorous),
                          ("high_energy", self.high_energy), ("lower", self.lower)):
            if obj is not None:
                out += [(f"{name}.{k}", v) for k, v in obj.__dict__.items()]
        out += [("T_upper", self.T_upper), ("T_upper_kind", self.T_upper_kind)]
        for name, v in self.verdicts.items():
            out.append((f"verdict.{name}", v.status))
            if v.detail:
                out.append((f"verdict.{name}.detail", v.detail))
        out += [(f"provenance.{k}", v) for k, v in self.provenance.items()]
        return out


def audit_run(config, record, well: fn.WellAnalysis, u0: Field | None = None, u1: Field | None = None) -> BoundReport:
    """Evaluate every applicable bound and monitor for one completed run."""
    if u0 is None or u1 is None:
        u0, u1 = config.initial_fields()
    ex = config.exponents
    p = ex.p
    domain = u0.domain
    lam1 = domain.lambda1
    C0 = c0(p, lam1)
    regime = fn.classify_initial_data(u0, u1, well, ex, lam1)
    s = DataScalars.of(u0, u1, p)
    blow = record.blowup
    rep = BoundReport(
        regime=regime, C0=C0, termination=record.termination,
        T_num=blow.T_num if blow.status == "BlowUp" else None,
        T_num_bracket=blow.bracket if blow.status == "BlowUp" else None,
    )
    rep.provenance["B_sigma"] = well.notes.get("B_sigma", "")
    rep.provenance["B_mu"] = well.notes.get("B_mu", "")
    rep.provenance["d0"] = well.notes.get("d0", "")
    rep.provenance["d_est"] = well.notes.get("d_est", "")

    unit = config.omega == 1.0 and config.damping.is_unit()
    if not unit:
        rep.provenance["bounds"] = "NotApplicable: lifespan bounds require omega = 1 and alpha = 1"
        rep.verdicts["energy_identity"] = _energy_verdict(record)
        return rep

    rigorous = []
    if regime.has("SubcriticalUnstable"):
        rep.subcritical = subcritical_bound_from_scalars(s, well.d_est, p)
        rep.provenance["subcritical"] = "b = d_est - E(0); d_est >= d, so heuristic"
        if well.d0 > s.E0:
            rep.subcritical_rigorous = subcritical_bound_from_scalars(s, well.d0, p)
            rep.provenance["subcritical_rigorous"] = "b = d0 - E(0) <= d - E(0), valid upper bound"
            rigorous.append(("subcritical_rigorous", rep.subcritical_rigorous.T_upper))
    if regime.has("HighEnergyBoundEligible"):
        rep.high_energy = high_energy_bound_from_scalars(s, p, C0)
        rep.provenance["high_energy"] = "t0 minimised by golden section over the admissible ray"
        rigorous.append(("high_energy", rep.high_energy.T_upper))
    if rigorous:
        kind, T_up = min(rigorous, key=lambda kv: kv[1])
        rep.T_upper, rep.T_upper_kind = T_up, kind
    elif rep.subcritical is not None:
        rep.T_upper, rep.T_upper_kind = rep.subcritical.T_upper, "subcritical_heuristic"

    rep.lower = lower_bound(u0, u1, ex, well.B_mu)
    rep.provenance["lower"] = (
        f"C4=S^2A^2, C5=S^2B^2 with S=(1+lambda1)^(-1/2), B_mu={well.B_mu:.6g} (estimated, x{well.safety})"
    )

    rep.verdicts["energy_identity"] = _energy_verdict(record)
    T_lo = rep.lower.T_lower
    if rep.T_num is not None:
        hi = rep.T_num_bracket[1]
        rep.verdicts["T_lower<=T_num"] = Verdict(
            "Pass" if T_lo <= hi else "Fail", f"T_lower={T_lo:.6g}, T_num_hi={hi:.6g}", worst_slack=hi - T_lo)
        if rep.T_upper is not None:
            rep.verdicts["T_num<=T_upper"] = Verdict(
                "Pass" if hi <= rep.T_upper else "Fail",
                f"T_num_hi={hi:.6g}, T_upper={rep.T_upper:.6g} ({rep.T_upper_kind})",
                worst_slack=rep.T_upper - hi)
        if rep.T_upper is not None:
            rep.verdicts["T_lower<=T_upper"] = Verdict(
                "Pass" if T_lo <= rep.T_upper else "Fail", f"T_lower={T_lo:.6g}, T_upper={rep.T_upper:.6g}")
    else:
        t_end = float(record["t"][-1])
        rep.verdicts["no_blowup_before_t_end"] = Verdict(
            "Pass", f"no blow-up observed before t={t_end:.6g}; T_lower={T_lo:.6g}")
        if rep.T_upper is not None and t_end > rep.T_upper:
            rep.verdicts["T_num<=T_upper"] = Verdict(
                "Fail", f"ran to t={t_end:.6g} past T_upper={rep.T_upper:.6g} without blow-up")

    if regime.has("HighEnergyGrowth"):
        rep.verdicts["growth_H"] = monitor_growth_H(record, C0, p)
    if regime.has("SubcriticalUnstable") and len(record) >= 3:
        sub = rep.subcritical_rigorous or rep.subcritical
        rep.verdicts["concavity_G"] = monitor_concavity_G(record, sub.b, sub.tau0, p)
        rep.verdicts["invariance"] = monitor_invariance(record, well.d_est, p)
    return rep


def _energy_verdict(record) -> Verdict:
    from .dynamics import energy_monotone, max_relative_residual

    res = max_relative_residual(record)
    mono = energy_monotone(record)
    return Verdict("Pass" if mono else "Fail", f"max relative dissipation residual {res:.3e}; "
                   f"E nonincreasing: {mono}", worst_slack=res)
