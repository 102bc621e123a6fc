import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from logwave import functionals as fn
from logwave.spectral import ConfigurationError, Field, build_domain

from conftest import smooth_coeffs

P = 3.0
# ∫_0^π sin³x ln(sin x) dx in closed form
L_SIN = 4.0 / 3.0 * (math.log(2.0) - 5.0 / 6.0)


def sin_lambda_star():
    # I(λ sin) = 0  <=>  π = λ (L + (4/3) ln λ)
    return brentq(lambda lam: math.pi - lam * (L_SIN + 4.0 / 3.0 * math.log(lam)), 1.0, 10.0, xtol=1e-15)


def test_exponents():
    assert fn.critical_exponent(3) == math.inf and fn.critical_exponent(6) == 6.0
    ex = fn.make_exponents(3.0, 1)
    assert (ex.sigma, ex.mu) == (1.0, 1.0)
    ex6 = fn.make_exponents(3.0, 6)
    assert ex6.p + ex6.sigma < 6.0
    assert fn.lower_bound_exponent(6, 3.0, ex6.mu) < 6.0
    with pytest.raises(ConfigurationError, match="2 < p < 2_"):
        fn.make_exponents(2.0, 1)
    with pytest.raises(ConfigurationError, match="p < 2_"):
        fn.make_exponents(7.0, 6)
    assert len(fn.Exponents(2.0, -1.0, 0.0, 1).violations()) == 3


def test_log_power_zero():
    s = np.array([0.0, 1.0, -0.5, 2.0])
    np.testing.assert_allclose(fn.log_power(s, P), [0, 0, 0.125 * math.log(0.5), 8 * math.log(2)])
    np.testing.assert_allclose(fn.log_source(s, P), [0, 0, -0.25 * math.log(0.5), 4 * math.log(2)])


def test_sin_functionals():
    d = build_domain(1, math.pi, 128)
    u = Field.eigenmode(d, 1)
    assert fn.h_norm_sq(u) == pytest.approx(math.pi, rel=1e-15)
    assert fn.h1_norm_sq(u) == pytest.approx(math.pi, rel=1e-15)
    assert fn.log_potential(u, P) == pytest.approx(L_SIN, rel=1e-7)
    assert fn.lambda_star(u, P) == pytest.approx(sin_lambda_star(), rel=1e-6)


@given(st.integers(0, 2**31 - 1), st.floats(2.2, 5.0), st.floats(0.1, 6.0))
def test_j_identity(seed, p, scale):
    d = build_domain(1, math.pi, 16)
    u = Field(d, smooth_coeffs(np.random.default_rng(seed), d, scale=scale))
    lhs = fn.J(u, p)
    rhs = (p - 2) / (2 * p) * fn.h_norm_sq(u) + fn.I(u, p) / p + fn.p_norm_p(u, p) / p**2
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_fiber_scalars_match_requadrature(line):
    u = Field(line, smooth_coeffs(np.random.default_rng(4), line))
    fs = fn.FiberScalars.of(u, P)
    for lam in (0.3, 1.0, 2.7):
        assert fs.J(lam) == pytest.approx(fn.J(lam * u, P), rel=1e-12)
        assert fs.I(lam) == pytest.approx(fn.I(lam * u, P), rel=1e-12, abs=1e-12)


def random_fields(domain, n, seed=0):
    rng = np.random.default_rng(seed)
    return [Field(domain, smooth_coeffs(rng, domain, decay=1.5, scale=10 ** rng.uniform(-2, 2))) for _ in range(n)]


def test_fibering_suite(line):
    for u in random_fields(line, 20):
        fs = fn.FiberScalars.of(u, P)
        ls = fn.lambda_star_from_scalars(fs)
        assert abs(fs.I(ls)) <= 1e-9 * fs.h
        # I(λu) = λ dJ(λu)/dλ by central differences
        for lam in (0.5 * ls, ls, 1.7 * ls):
            h = 1e-5 * lam
            dj = (fs.J(lam + h) - fs.J(lam - h)) / (2 * h)
            assert lam * dj == pytest.approx(fs.I(lam), rel=1e-6, abs=1e-6 * fs.h * lam**2)
        lams = np.linspace(0.02, 3.0, 50) * ls
        vals = fs.I(lams)
        bad = np.sum((lams < ls) & (vals <= 0)) + np.sum((lams > ls) & (vals >= 0))
        assert bad == 0


def test_lambda_star_scaling(line):
    # λ*(cu) = λ*(u)/c
    u = random_fields(line, 1, seed=9)[0]
    assert fn.lambda_star(3.0 * u, P) == pytest.approx(fn.lambda_star(u, P) / 3.0, rel=1e-10)


def test_zero_field_fibering(line):
    with pytest.raises(ValueError):
        fn.lambda_star(Field.zeros(line), P)
    with pytest.raises(ValueError):
        fn.fibering_profile(Field.zeros(line), [1.0], P)


def test_embedding_l2_exact(line):
    # sup ‖u‖₂/‖u‖_H is attained at the first mode: 1/sqrt(1 + 1)
    b2 = fn.estimate_embedding_constant(line, 2.0, restarts=3, safety=1.0)
    assert b2 == pytest.approx(1 / math.sqrt(2), rel=1e-9)


def test_embedding_constants(line):
    b4 = fn.estimate_embedding_constant(line, 4.0, restarts=4, safety=1.0)
    # first mode ratio is a lower bound: ‖sin‖_4 / ‖sin‖_H = (3π/8)^(1/4) / sqrt(π)
    first = (3 * math.pi / 8) ** 0.25 / math.sqrt(math.pi)
    assert b4 >= first * (1 - 1e-12)
    assert b4 == pytest.approx(0.58854, abs=5e-5)
    assert fn.estimate_embedding_constant(line, 4.0, restarts=4) == pytest.approx(1.05 * b4, rel=1e-14)
    with pytest.raises(ValueError):
        fn.estimate_embedding_constant(build_domain(1, 1.0, 4), 1.5)


def test_nehari_floor_formula():
    ex = fn.make_exponents(3.0, 1)
    c, d0 = fn.nehari_floor(ex, 0.5)
    assert c == pytest.approx((math.e / 0.5**4) ** 0.5, rel=1e-15)
    assert d0 == pytest.approx(c * c / 6, rel=1e-15)


def test_nehari_floor_holds(line):
    # every Nehari point has ‖u‖_H >= C* when C* uses a valid embedding constant
    ex = fn.make_exponents(3.0, 1)
    c_star, _ = fn.nehari_floor(ex, fn.estimate_embedding_constant(line, 4.0, restarts=4))
    for u in random_fields(line, 20, seed=2):
        assert math.sqrt(fn.h_norm_sq(fn.lambda_star(u, P) * u)) >= c_star


def test_well_depth_frozen(line):
    ex = fn.make_exponents(3.0, 1)
    res = fn.estimate_well_depth(line, ex, restarts=2, mode_budget=16, seed=0)
    assert res.d_est == pytest.approx(6.86721, abs=1e-4)
    # the first mode alone gives J(λ* sin)
    assert res.history[1] == pytest.approx(6.90721, abs=1e-4)
    hist = [res.history[m] for m in sorted(res.history)]
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert fn.nehari_value(Field(line, res.coeffs), P) == pytest.approx(res.d_est, rel=1e-12)


def test_well_depth_deterministic(line):
    ex = fn.make_exponents(3.0, 1)
    a = fn.estimate_well_depth(line, ex, mode_budget=4, seed=5)
    b = fn.estimate_well_depth(line, ex, mode_budget=4, seed=5)
    assert a.d_est == b.d_est and a.evaluations == b.evaluations


def test_analyze_and_classify(line):
    ex = fn.make_exponents(3.0, 1)
    well = fn.analyze_well(line, ex, mode_budget=4)
    assert well.d0 < well.d_est
    phi = Field.eigenmode(line, 1)
    zero = Field.zeros(line)
    assert fn.classify_initial_data(zero, zero, well, ex, 1.0).tags == {"NoneProven"}
    big = fn.classify_initial_data(5.0 * phi, zero, well, ex, 1.0)
    assert big.tags == {"NegativeEnergy", "SubcriticalUnstable"}
    small = fn.classify_initial_data(0.3 * phi, zero, well, ex, 1.0)
    assert small.tags == {"NoneProven"} and small.I0 > 0
    # u1 = c u0 with c inside (sqrt(2j), C0/p + sqrt((C0/p)^2 + 2j)), j = -J(u0)/‖u0‖₂² ≈ 0.607
    grow = fn.classify_initial_data(5.0 * phi, 1.3 * (5.0 * phi), well, ex, 1.0)
    assert grow.has("HighEnergyGrowth") and grow.E0 > 0


def test_lambda_star_residual_roundoff_floor(rect):
    # tiny data put lambda* far out; I(lambda* u) then cancels two terms of size
    # lambda*^2 ||u||_H^2 and the residual is limited by eps * lambda*^2 * ||u||_H^2
    rng = np.random.default_rng(3)
    u = Field(rect, 1e-3 * smooth_coeffs(rng, rect, decay=1.5))
    fs = fn.FiberScalars.of(u, 3.0)
    ls = fn.lambda_star_from_scalars(fs)
    assert ls > 1e4
    floor = np.finfo(float).eps * ls**2 * fs.h
    assert abs(fn.I(ls * u, 3.0)) <= 64 * floor
