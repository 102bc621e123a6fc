"""Self-check suite over the module invariants.

Each check returns (passed, detail). ``fault="eigen_table"`` corrupts the
bilaplacian table of the test domain so the eigen-relation check must fail.
"""
from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

from . import bounds as bd
from . import functionals as fn
from .config import PRESETS, _fmt, loads, preset_config, serialize
from .dynamics import (DampingSchedule, IntegratorControls, PDESystem, _propagator, energy_monotone,
                       integrate_system, max_relative_residual, step, initial_state)
from .spectral import (Domain, Field, apply_bilaplacian, apply_neg_laplacian, build_domain, coeffs_to_samples,
                       integrate, samples_to_coeffs)

FAULTS = ("eigen_table",)

Check = Callable[[], tuple[bool, str]]


def _domains(fault: str | None) -> tuple[Domain, Domain]:
    d1 = build_domain(1, math.pi, 32)
    d2 = build_domain(2, (math.pi, 2.0), (12, 10))
    if fault == "eigen_table":
        bad = np.array(d1.bilaplacian_table)
        bad[3] *= 1.0 + 1e-3
        bad.setflags(write=False)
        d1 = replace(d1, bilaplacian_table=bad)
    elif fault is not None:
        raise ValueError(f"unknown fault {fault!r}; choose from {', '.join(FAULTS)}")
    return d1, d2


def checks(seed: int = 0, fault: str | None = None) -> dict[str, Check]:
    rng = np.random.default_rng(seed)
    d1, d2 = _domains(fault)
    p = 3.0
    out: dict[str, Check] = {}

    def eigen_relation():
        worst = 0.0
        for d in (d1, d2):
            ks = np.meshgrid(*[np.arange(1, m + 1) for m in d.modes], indexing="ij")
            mu = sum((k * math.pi / L) ** 2 for k, L in zip(ks, d.extents))
            worst = max(worst, float(np.max(np.abs(d.lambda_table / mu - 1))))
            for k in [(1,) * d.dim, tuple(m for m in d.modes), tuple(min(4, m) for m in d.modes)]:
                phi = Field.eigenmode(d, k)
                idx = tuple(i - 1 for i in k)
                lam = mu[idx]
                worst = max(worst, float(np.max(np.abs(apply_neg_laplacian(phi).coeffs - lam * phi.coeffs))) / lam)
                worst = max(worst, float(np.max(np.abs(apply_bilaplacian(phi).coeffs - lam**2 * phi.coeffs))) / lam**2)
            worst = max(worst, float(np.max(np.abs(d.bilaplacian_table / mu**2 - 1))))
        return worst <= 1e-12, f"max relative eigen-relation error {worst:.3e}"

    def lambda1():
        ok = all(d.lambda1 == float(np.min(d.lambda_table)) for d in (d1, d2))
        ok &= math.isclose(d2.lambda1, 1.0 + (math.pi / 2.0) ** 2, rel_tol=1e-15)
        return ok, f"lambda1 = {d1.lambda1!r}, {d2.lambda1!r}"

    def round_trip():
        worst = 0.0
        for d in (d1, d2):
            c = rng.standard_normal(d.modes)
            back = samples_to_coeffs(d, coeffs_to_samples(d, c))
            worst = max(worst, float(np.linalg.norm(back - c) / np.linalg.norm(c)))
        return worst <= 1e-12, f"relative round-trip error {worst:.3e}"

    def eigenmode_samples():
        x = d1.nodes(0)
        err = float(np.max(np.abs(Field.eigenmode(d1, 3).samples - np.sin(3 * x))))
        return err <= 1e-12, f"max |samples - sin 3x| = {err:.3e}"

    def sine_cube():
        # trapezoid converges like h^4 here (odd derivatives at the ends), sine is exact
        errs = []
        for m, rule in ((512, "trapezoid"), (8, "sine")):
            d = build_domain(1, math.pi, m)
            errs.append(abs(integrate(d, np.sin(d.nodes(0)) ** 3, rule) - 4.0 / 3.0))
        return max(errs) <= 1e-10, "int sin^3 errors " + ", ".join(f"{e:.3e}" for e in errs)

    def zero_field():
        z = Field.zeros(d2)
        vals = [fn.l2_norm_sq(z), fn.h_norm_sq(z), fn.h1_norm_sq(z), fn.log_potential(z, p), fn.p_norm_p(z, p)]
        return all(v == 0 for v in vals), "all norms of the zero field vanish"

    def j_identity():
        worst = 0.0
        for _ in range(10):
            u = Field(d1, rng.standard_normal(d1.modes) / np.arange(1, 33) ** 2 * 3)
            lhs = fn.J(u, p)
            rhs = (p - 2) / (2 * p) * fn.h_norm_sq(u) + fn.I(u, p) / p + fn.p_norm_p(u, p) / p**2
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
        return worst <= 1e-12, f"max relative defect {worst:.3e}"

    def fibering():
        worst, viol = 0.0, 0
        for _ in range(10):
            u = Field(d1, rng.standard_normal(d1.modes) / np.arange(1, 33) ** 2)
            fs = fn.FiberScalars.of(u, p)
            ls = fn.lambda_star_from_scalars(fs)
            worst = max(worst, abs(fs.I(ls)) / fs.h)
            for lam in np.linspace(0.05, 3.0, 50) * ls:
                val = fs.I(lam)
                if (lam < ls and val <= 0) or (lam > ls and val >= 0):
                    viol += 1
        return worst <= 1e-9 and viol == 0, f"max |I(lambda* u)|/||u||_H^2 = {worst:.3e}, sign violations {viol}"

    def depth():
        ex = fn.make_exponents(p, 1)
        d = build_domain(1, math.pi, 16)
        well = fn.analyze_well(d, ex, restarts=2, mode_budget=4, seed=seed)
        return well.d_est >= 0.95 * well.d0, f"d_est = {well.d_est:.8g}, d0 = {well.d0:.8g}"

    def c0_spots():
        vals = (bd.c0(4.0, 1.0), bd.c0(3.0, 1.0))
        return vals == (2.0, 1.0), f"C0 = {vals}"

    def propagator():
        kappa = np.array([2.0, 1e-6, 1.0, 30.0, 1e6])
        gamma = np.array([2.0, 1.0, 2.0, 1e4, 1.0])
        worst = 0.0
        for dt in (1e-3, 0.1, 1.0):
            a = _propagator(gamma, kappa, dt)
            for j in range(len(kappa)):
                ref = expm(dt * np.array([[0.0, 1.0], [-kappa[j], -gamma[j]]]))
                got = np.array([[a[0][j], a[1][j]], [a[2][j], a[3][j]]])
                worst = max(worst, float(np.max(np.abs(got - ref)) / np.max(np.abs(ref))))
        return worst <= 1e-12, f"max relative deviation from expm {worst:.3e}"

    def zero_state():
        sy = PDESystem(d1, p, 1.0, DampingSchedule())
        st = initial_state(Field.zeros(d1), Field.zeros(d1))
        for _ in range(5):
            st = step(st, 0.01, sy)
        ok = not np.any(st.u) and not np.any(st.v) and st.dissipation == 0.0
        return ok, "zero data stays zero"

    def energy_identity():
        d = build_domain(1, math.pi, 16)
        sy = PDESystem(d, p, 1.0, DampingSchedule())
        u0 = Field(d, rng.standard_normal(16) / np.arange(1, 17) ** 3 * 0.5)
        rec, _ = integrate_system(sy, u0, Field.zeros(d), IntegratorControls(tolerance=1e-7, t_max=0.5))
        r = max_relative_residual(rec)
        mono = energy_monotone(rec)
        return r <= 1e-5 and mono, f"max relative residual {r:.3e}, E nonincreasing {mono}"

    def lifespan():
        N0, C5, q = 2.0, 0.7, 2.5
        closed = N0 ** (1 - q) / (C5 * (q - 1))
        brute, _ = quad(lambda x: 1.0 / (C5 * x**q), N0, np.inf, epsabs=0.0, epsrel=1e-12)
        e1 = abs(bd.lifespan_integral(N0, 0.0, C5, q) - closed) / closed + abs(brute - closed) / closed
        t1 = bd.lifespan_integral(N0, 0.3, C5, q)
        t2 = bd.lifespan_integral(N0, 0.6, 2 * C5, q)
        e2 = abs(t2 / t1 - 0.5)
        return e1 <= 1e-8 and e2 <= 1e-12, f"closed-form error {e1:.3e}, halving defect {e2:.3e}"

    def config_round_trip():
        worst = ""
        for name in PRESETS:
            cfg = preset_config(name)
            text = serialize(cfg)
            again = loads(text, verify_initial=False)
            if again != cfg or serialize(again) != text:
                worst = name
            shuffled = "".join(reversed(text.splitlines(keepends=True)))
            if loads(shuffled, verify_initial=False).digest() != cfg.digest():
                worst = name
        return worst == "", "parse/serialize idempotent, digest order-free" if not worst else f"{worst} differs"

    for f in (eigen_relation, lambda1, round_trip, eigenmode_samples, sine_cube, zero_field, j_identity, fibering,
              depth, c0_spots, propagator, zero_state, energy_identity, lifespan, config_round_trip):
        out[f.__name__] = f
    return out


def run_checks(seed: int = 0, fault: str | None = None) -> list[tuple[str, bool, str]]:
    results = []
    for name, f in checks(seed, fault).items():
        try:
            ok, detail = f()
        except Exception as exc:  # failures are data
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results


def cmd_verify(seed: int = 0, out: str | Path | None = None, fault: str | None = None) -> int:
    results = run_checks(seed, fault)
    lines = [f"seed = {seed}\n"]
    if fault:
        lines.append(f"fault = {_fmt(fault)}\n")
    for name, ok, detail in results:
        lines.append(f"check.{name} = {_fmt('pass' if ok else 'fail')}\n")
        lines.append(f"check.{name}.detail = {_fmt(detail)}\n")
    passed = all(ok for _, ok, _ in results)
    lines.append(f"all_passed = {_fmt(passed)}\n")
    text = "".join(lines)
    if out is not None:
        path = Path(out) / "verify.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    print(text, end="")
    return 0 if passed else 1
