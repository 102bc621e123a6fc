"""Variational quantities of the logarithmic fourth-order problem.

Norms follow the conventions

    ‖u‖²_H = ‖Δu‖₂² + ‖∇u‖₂²,     ‖u‖² = ‖u‖₂² + ‖∇u‖₂²,

and the nonlinear pieces are

    L(u) = ∫ |u|^p ln|u| dx,      P(u) = ∫ |u|^p dx,
    J(u) = ½‖u‖²_H − L(u)/p + P(u)/p²,     I(u) = ‖u‖²_H − L(u).

Quadratic quantities are evaluated in coefficient space, L and P by the
trapezoid rule on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .spectral import ConfigurationError, Domain, Field, integrate, samples_to_coeffs

REGIME_TAGS = (
    "NegativeEnergy",
    "SubcriticalUnstable",
    "HighEnergyGrowth",
    "HighEnergyBoundEligible",
    "NoneProven",
)


def critical_exponent(n: int) -> float:
    """2_*: +inf for n <= 4, 2n/(n-4) otherwise."""
    return math.inf if n <= 4 else 2.0 * n / (n - 4)


def lower_bound_exponent(n: int, p: float, mu: float) -> float:
    """Lebesgue exponent whose embedding constant B_mu enters the lifespan lower bound.

    For n <= 2 the Hölder split is (2, 2), giving 2(p-1+mu); for n >= 3 it is
    the (2n/(n-2), 2n/(n+2)) pair, giving 2n(p-1+mu)/(n+2).
    """
    if n <= 2:
        return 2.0 * (p - 1.0 + mu)
    return 2.0 * n * (p - 1.0 + mu) / (n + 2.0)


@dataclass(frozen=True)
class Exponents:
    p: float
    sigma: float
    mu: float
    n: int = 1

    @property
    def two_star(self) -> float:
        return critical_exponent(self.n)

    def violations(self) -> list[str]:
        out = []
        ts = self.two_star
        if not self.p > 2:
            out.append(f"p = {self.p} violates the exponent hypothesis 2 < p < 2_*")
        elif not self.p < ts:
            out.append(f"p = {self.p} violates the exponent hypothesis 2 < p < 2_* = {ts}")
        if not self.sigma > 0:
            out.append(f"sigma = {self.sigma} must be positive")
        elif not self.p + self.sigma < ts:
            out.append(f"p + sigma = {self.p + self.sigma} must be < 2_* = {ts}")
        if not self.mu > 0:
            out.append(f"mu = {self.mu} must be positive")
        elif not lower_bound_exponent(self.n, self.p, self.mu) < ts:
            out.append(f"mu = {self.mu} breaks the lifespan-bound embedding (exponent must be < 2_*)")
        return out


def default_sigma(p: float, n: int) -> float:
    ts = critical_exponent(n)
    return 1.0 if math.isinf(ts) else min(1.0, (ts - p) / 2.0)


def default_mu(p: float, n: int) -> float:
    ts = critical_exponent(n)
    if math.isinf(ts):
        return 1.0
    mu_max = ts * (n + 2.0) / (2.0 * n) - (p - 1.0)
    return min(1.0, mu_max / 1.1)


def make_exponents(p: float, n: int = 1, sigma: float | None = None, mu: float | None = None) -> Exponents:
    ex = Exponents(
        p=float(p),
        sigma=default_sigma(p, n) if sigma is None else float(sigma),
        mu=default_mu(p, n) if mu is None else float(mu),
        n=int(n),
    )
    bad = ex.violations()
    if bad:
        raise ConfigurationError("; ".join(bad))
    return ex


# --- pointwise nonlinearities ---------------------------------------------

def log_power(s: np.ndarray, p: float) -> np.ndarray:
    """|s|^p ln|s|, set to 0 where s = 0."""
    a = np.abs(s)
    out = np.zeros_like(a)
    m = a > 0
    out[m] = a[m] ** p * np.log(a[m])
    return out


def log_source(s: np.ndarray, p: float) -> np.ndarray:
    """f(s) = |s|^(p-2) s ln|s|, set to 0 where s = 0."""
    a = np.abs(s)
    out = np.zeros_like(a)
    m = a > 0
    out[m] = a[m] ** (p - 2.0) * s[m] * np.log(a[m])
    return out


# --- norms -----------------------------------------------------------------

def _wsum(u: Field, mult) -> float:
    return float(u.domain.norm_weight * np.sum(mult * u.coeffs**2))


def l2_norm_sq(u: Field) -> float:
    return _wsum(u, 1.0)


def grad_norm_sq(u: Field) -> float:
    return _wsum(u, u.domain.lambda_table)


def h_norm_sq(u: Field) -> float:
    d = u.domain
    return _wsum(u, d.bilaplacian_table + d.lambda_table)


def h1_norm_sq(u: Field) -> float:
    return _wsum(u, 1.0 + u.domain.lambda_table)


def h1_inner(u: Field, v: Field) -> float:
    """(u, v) + (∇u, ∇v)."""
    return float(u.domain.norm_weight * np.sum((1.0 + u.domain.lambda_table) * u.coeffs * v.coeffs))


def log_potential(u: Field, p: float) -> float:
    return integrate(u.domain, log_power(u.samples, p))


def p_norm_p(u: Field, p: float) -> float:
    return integrate(u.domain, np.abs(u.samples) ** p)


def J(u: Field, p: float) -> float:
    return 0.5 * h_norm_sq(u) - log_potential(u, p) / p + p_norm_p(u, p) / p**2


def I(u: Field, p: float) -> float:
    return h_norm_sq(u) - log_potential(u, p)


def energy(u: Field, v: Field, p: float) -> float:
    return 0.5 * l2_norm_sq(v) + J(u, p)


# --- fibering map ------------------------------------------------------------

@dataclass(frozen=True)
class FiberScalars:
    """The three scalars that determine λ ↦ J(λu) and λ ↦ I(λu) exactly."""

    h: float  # ‖u‖²_H
    L: float  # ∫|u|^p ln|u|
    P: float  # ∫|u|^p
    p: float

    @classmethod
    def of(cls, u: Field, p: float) -> "FiberScalars":
        s = u.samples
        a = np.abs(s)
        lp = log_power(s, p)
        return cls(h=h_norm_sq(u), L=integrate(u.domain, lp), P=integrate(u.domain, a**p), p=p)

    def J(self, lam):
        lam = np.asarray(lam, dtype=float)
        p = self.p
        return 0.5 * lam**2 * self.h - lam**p / p * (self.L + np.log(lam) * self.P) + lam**p / p**2 * self.P

    def I(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam**2 * self.h - lam**self.p * (self.L + np.log(lam) * self.P)

    def g(self, lam: float) -> float:
        """I(λu)/λ², whose unique positive root is λ*."""
        return self.h - lam ** (self.p - 2.0) * (self.L + math.log(lam) * self.P)

    def dg(self, lam: float) -> float:
        p = self.p
        return -(lam ** (p - 3.0)) * ((p - 2.0) * (self.L + math.log(lam) * self.P) + self.P)

    def floor(self) -> float:
        """((p-2)/2p)‖u‖²_H + P/p², the quantity J − I/p."""
        return (self.p - 2.0) / (2.0 * self.p) * self.h + self.P / self.p**2


def fibering_profile(u: Field, lams: Sequence[float], p: float) -> tuple[np.ndarray, np.ndarray]:
    """J(λu) and I(λu) on a λ-grid from the closed form (no re-quadrature)."""
    if u.is_zero():
        raise ValueError("fibering map undefined for u = 0")
    fs = FiberScalars.of(u, p)
    return fs.J(lams), fs.I(lams)


class RootBracketError(RuntimeError):
    pass


def lambda_star_from_scalars(fs: FiberScalars, max_expand: int = 200) -> float:
    if not fs.h > 0:
        raise ValueError("fibering map undefined for u = 0")
    lo = hi = 1.0
    if fs.g(1.0) > 0:
        for _ in range(max_expand):
            hi *= 2.0
            if fs.g(hi) < 0:
                break
        else:
            raise RootBracketError(f"no sign change of g on [1, {hi}]")
        lo = hi / 2.0
    else:
        for _ in range(max_expand):
            lo /= 2.0
            if fs.g(lo) > 0:
                break
        else:
            raise RootBracketError(f"no sign change of g on [{lo}, 1]")
        hi = lo * 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if fs.g(mid) > 0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    for _ in range(3):
        d = fs.dg(lam)
        if d == 0:
            break
        nxt = lam - fs.g(lam) / d
        if not (lo <= nxt <= hi):
            break
        lam = nxt
    return lam


def lambda_star(u: Field, p: float) -> float:
    if u.is_zero():
        raise ValueError("fibering map undefined for u = 0")
    return lambda_star_from_scalars(FiberScalars.of(u, p))


def nehari_value(u: Field, p: float) -> float:
    """sup_λ J(λu) = J(λ*(u) u)."""
    fs = FiberScalars.of(u, p)
    return float(fs.J(lambda_star_from_scalars(fs)))


# --- embedding constants and well depth ------------------------------------------

def _h_weights(domain: Domain) -> np.ndarray:
    return domain.norm_weight * (domain.bilaplacian_table + domain.lambda_table)


def _random_direction(domain: Domain, rng: np.random.Generator) -> np.ndarray:
    kk = np.sqrt(domain.lambda_table / domain.lambda1)
    return rng.standard_normal(domain.modes) / kk


def _ascend(domain: Domain, q: float, a: np.ndarray, max_iter: int, rtol: float) -> float:
    """Projected gradient ascent of ∫|u|^q on the unit H-sphere; returns the sup ratio."""
    sqrt_h = np.sqrt(_h_weights(domain))
    w = domain.norm_weight

    def value_grad(a):
        u = Field(domain, a / sqrt_h)
        s = u.samples
        F = integrate(domain, np.abs(s) ** q)
        g = q * w * samples_to_coeffs(domain, np.abs(s) ** (q - 2.0) * s) / sqrt_h
        return F, g

    a = a / np.linalg.norm(a)
    F, g = value_grad(a)
    eta = None
    for _ in range(max_iter):
        gt = g - np.sum(g * a) * a
        gn = np.linalg.norm(gt)
        if gn <= 1e-15 * max(F, 1e-300):
            break
        if eta is None:
            eta = 0.1 / gn
        improved = False
        for _ in range(60):
            trial = a + eta * gt
            trial /= np.linalg.norm(trial)
            Ft, gtr = value_grad(trial)
            if Ft > F:
                improved = True
                break
            eta *= 0.5
        if not improved:
            break
        gain = (Ft - F) / F
        a, F, g = trial, Ft, gtr
        eta *= 1.5
        if gain < rtol:
            break
    return F ** (1.0 / q)


def estimate_embedding_constant(
    domain: Domain,
    q: float,
    restarts: int = 8,
    seed: int = 0,
    safety: float = 1.05,
    two_star: float | None = None,
    max_iter: int = 3000,
) -> float:
    """Estimate sup ‖u‖_q / ‖u‖_H over the retained sine modes, times ``safety``.

    Multistart projected gradient ascent: the first eigenmode plus ``restarts``
    random directions drawn from ``seed``.
    """
    ts = critical_exponent(domain.dim) if two_star is None else two_star
    if not (2.0 <= q < ts):
        raise ValueError(f"q = {q} outside [2, 2_*) = [2, {ts})")
    rng = np.random.default_rng(seed)
    first = np.zeros(domain.modes)
    first[(0,) * domain.dim] = 1.0
    starts = [first] + [_random_direction(domain, rng) for _ in range(restarts)]
    best = max(_ascend(domain, q, a, max_iter, 1e-13) for a in starts)
    return safety * best


def nehari_floor(ex: Exponents, B_sigma: float) -> tuple[float, float]:
    """(C*, d0): ‖u‖_H >= C* on the Nehari set and d >= d0 = (p-2)/(2p) C*²."""
    if not B_sigma > 0:
        raise ValueError("B_sigma must be positive")
    ps = ex.p + ex.sigma
    c_star = (math.e * ex.sigma / B_sigma**ps) ** (1.0 / (ps - 2.0))
    return c_star, (ex.p - 2.0) / (2.0 * ex.p) * c_star**2


def _mode_order(domain: Domain) -> list[tuple[int, ...]]:
    """Multi-indices sorted by eigenvalue (ties by index)."""
    idx = list(np.ndindex(*domain.modes))
    return sorted(idx, key=lambda k: (domain.lambda_table[k], k))


def _budget_ladder(mode_budget: int) -> list[int]:
    rungs, m = [], 1
    while m < mode_budget:
        rungs.append(m)
        m *= 2
    rungs.append(mode_budget)
    return rungs


@dataclass
class WellDepthResult:
    d_est: float
    coeffs: np.ndarray = field(repr=False)
    evaluations: int
    history: dict[int, float]


def estimate_well_depth(
    domain: Domain,
    ex: Exponents,
    restarts: int = 2,
    mode_budget: int = 16,
    seed: int = 0,
    xatol: float = 1e-8,
    fevals_per_dim: int = 150,
) -> WellDepthResult:
    """Upper estimate of d = inf over directions of sup_λ J(λu).

    The search runs on a ladder of nested subspaces 1, 2, 4, ... modes up to
    ``mode_budget``; each rung is warm-started from the best direction so far
    and adds ``restarts - 1`` random starts seeded by (seed, rung). Each
    rung is a Nelder-Mead minimisation of the scale-free Nehari value. The
    returned value is the minimum over every direction evaluated.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    order = _mode_order(domain)
    mode_budget = max(1, min(int(mode_budget), len(order)))
    sqrt_h = np.sqrt(_h_weights(domain))
    p = ex.p
    state = {"best": math.inf, "dir": None, "count": 0}

    def coeffs_of(a: np.ndarray) -> np.ndarray:
        c = np.zeros(domain.modes)
        for val, k in zip(a, order):
            c[k] = val / sqrt_h[k]
        return c

    def objective(a: np.ndarray) -> float:
        nrm = np.linalg.norm(a)
        if nrm == 0 or not np.isfinite(nrm):
            return math.inf
        a = a / nrm
        val = nehari_value(Field(domain, coeffs_of(a)), p)
        state["count"] += 1
        if val < state["best"]:
            state["best"], state["dir"] = val, a.copy()
        return val

    history: dict[int, float] = {}
    for m in _budget_ladder(mode_budget):
        if m == 1:
            objective(np.array([1.0]))
        else:
            rng = np.random.default_rng([seed, m])
            warm = np.zeros(m)
            warm[: len(state["dir"])] = state["dir"]
            starts = [warm]
            for _ in range(restarts - 1):
                kk = np.sqrt([domain.lambda_table[k] / domain.lambda1 for k in order[:m]])
                starts.append(warm + 0.3 * rng.standard_normal(m) / kk)
            for a0 in starts:
                optimize.minimize(
                    objective,
                    a0,
                    method="Nelder-Mead",
                    options={"xatol": xatol, "fatol": xatol, "maxfev": fevals_per_dim * m + 200},
                )
        history[m] = state["best"]
    best_dir = np.zeros(mode_budget)
    best_dir[: len(state["dir"])] = state["dir"]
    return WellDepthResult(
        d_est=state["best"], coeffs=coeffs_of(best_dir), evaluations=state["count"], history=history
    )


@dataclass
class WellAnalysis:
    p: float
    sigma: float
    mu: float
    q_sigma: float
    q_mu: float
    B_sigma: float
    B_mu: float
    C_star: float
    d0: float
    d_est: float
    safety: float
    seed: int
    mode_budget: int
    restarts: int
    notes: dict[str, str] = field(default_factory=dict)

    def as_items(self) -> list[tuple[str, object]]:
        keys = ["p", "sigma", "mu", "q_sigma", "q_mu", "B_sigma", "B_mu", "C_star", "d0", "d_est",
                "safety", "seed", "mode_budget", "restarts"]
        items = [(k, getattr(self, k)) for k in keys]
        items += [(f"note.{k}", v) for k, v in sorted(self.notes.items())]
        return items


def analyze_well(
    domain: Domain,
    ex: Exponents,
    restarts: int = 2,
    mode_budget: int = 16,
    seed: int = 0,
    embedding_restarts: int = 6,
    safety: float = 1.05,
) -> WellAnalysis:
    q_sigma = ex.p + ex.sigma
    q_mu = lower_bound_exponent(domain.dim, ex.p, ex.mu)
    B_sigma = estimate_embedding_constant(domain, q_sigma, embedding_restarts, seed, safety, ex.two_star)
    B_mu = estimate_embedding_constant(domain, q_mu, embedding_restarts, seed, safety, ex.two_star)
    c_star, d0 = nehari_floor(ex, B_sigma)
    depth = estimate_well_depth(domain, ex, restarts, mode_budget, seed)
    notes = {
        "B_sigma": f"sup ||u||_{q_sigma:g}/||u||_H by multistart ascent on {domain.modes} modes, x{safety}",
        "B_mu": f"sup ||u||_{q_mu:g}/||u||_H by multistart ascent on {domain.modes} modes, x{safety}",
        "d0": "analytic floor (p-2)/(2p) C*^2 from the estimated B_sigma",
        "d_est": f"min of sup_lambda J(lambda u) over {depth.evaluations} directions (upper estimate of d)",
    }
    return WellAnalysis(
        p=ex.p, sigma=ex.sigma, mu=ex.mu, q_sigma=q_sigma, q_mu=q_mu,
        B_sigma=B_sigma, B_mu=B_mu, C_star=c_star, d0=d0, d_est=depth.d_est,
        safety=safety, seed=seed, mode_budget=mode_budget, restarts=restarts, notes=notes,
    )


# --- regime classification -----------------------------------------------------

@dataclass(frozen=True)
class RegimeTag:
    tags: frozenset
    E0: float
    J0: float
    I0: float
    uv0: float
    u0_l2_sq: float
    C0: float
    d_est: float
    d0: float

    def has(self, tag: str) -> bool:
        return tag in self.tags

    def as_items(self) -> list[tuple[str, object]]:
        return [
            ("tags", ",".join(t for t in REGIME_TAGS if t in self.tags)),
            ("E0", self.E0), ("J0", self.J0), ("I0", self.I0), ("uv0", self.uv0),
            ("u0_l2_sq", self.u0_l2_sq), ("C0", self.C0), ("d_est", self.d_est), ("d0", self.d0),
        ]


def classify_initial_data(u0: Field, u1: Field, well: WellAnalysis, ex: Exponents, lambda1: float) -> RegimeTag:
    from .bounds import c0 as _c0

    p = ex.p
    C0 = _c0(p, lambda1)
    E0 = energy(u0, u1, p)
    J0 = J(u0, p)
    I0 = I(u0, p)
    uv0 = float(u0.domain.norm_weight * np.sum(u0.coeffs * u1.coeffs))
    m0 = l2_norm_sq(u0)
    tags = set()
    nonzero = not u0.is_zero()
    if E0 < 0:
        tags.add("NegativeEnergy")
    if nonzero and I0 < 0 and E0 < well.d_est:
        tags.add("SubcriticalUnstable")
    if 0 < E0 < C0 / p * uv0:
        tags.add("HighEnergyGrowth")
        if E0 < C0 / p * m0:
            tags.add("HighEnergyBoundEligible")
    if not tags:
        tags.add("NoneProven")
    return RegimeTag(frozenset(tags), E0, J0, I0, uv0, m0, C0, well.d_est, well.d0)
