import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.integrate import quad

from logwave import bounds as bd
from logwave import functionals as fn
from logwave.dynamics import TrajectoryRecord
from logwave.spectral import Field, build_domain

from conftest import preset_run


def test_c0_spots():
    assert bd.c0(4.0, 1.0) == 2.0
    assert bd.c0(3.0, 1.0) == 1.0
    assert bd.c0(3.0, 10.0) == 5.0
    assert bd.c0(2.5, 0.1) == pytest.approx(0.5 * 0.11 / 2)


scalars = st.builds(
    bd.DataScalars,
    m=st.floats(0.1, 50.0), h1=st.floats(0.1, 100.0), uv=st.floats(-50.0, 50.0),
    E0=st.floats(-5.0, 5.0), I0=st.just(-1.0), N0=st.just(1.0),
)


@given(scalars, st.floats(0.1, 20.0), st.floats(2.1, 5.0))
def test_subcritical_is_concavity_minimum(s, d, p):
    assume(d - s.E0 > 0.05 and s.h1 >= s.m)
    sb = bd.subcritical_bound_from_scalars(s, d, p)
    assert sb.tau0 > 0
    assert bd.concavity_time(sb.tau0, s, sb.b, p) == pytest.approx(sb.T_upper, rel=1e-9)
    # T(τ0) is the minimum of T over the admissible ray
    taus = sb.tau0 * np.exp(np.linspace(-3, 3, 601))
    assert np.min(bd.concavity_time(taus, s, sb.b, p)) >= sb.T_upper * (1 - 1e-9)


def test_subcritical_negative_a_no_cancellation():
    s = bd.DataScalars(m=1.0, h1=1.0, uv=1e9, E0=0.0, I0=-1.0, N0=1.0)
    sb = bd.subcritical_bound_from_scalars(s, 1.0, 3.0)
    assert sb.a < 0 and sb.T_upper > 0
    # R + a = b m k² / (R - a) ≈ b m / (2|a|)
    assert sb.T_upper == pytest.approx(4.0 * (1.0 / (2 * abs(sb.a))), rel=1e-6)


def test_subcritical_not_applicable(line):
    phi = Field.eigenmode(line, 1)
    with pytest.raises(bd.NotApplicable):
        bd.upper_bound_subcritical(0.3 * phi, Field.zeros(line), 6.8, 3.0)
    with pytest.raises(bd.NotApplicable):
        bd.upper_bound_subcritical(3.8 * phi, Field.zeros(line), 1.0, 3.0)
    with pytest.raises(bd.NotApplicable):
        bd.subcritical_bound_from_scalars(bd.DataScalars(1, 1, 0, 2.0, -1, 1), 1.0, 3.0)


def test_high_energy_golden_section():
    s = bd.DataScalars(m=157.08, h1=314.16, uv=464.5, E0=30.97, I0=-10.0, N0=1.0)
    he = bd.high_energy_bound_from_scalars(s, 3.0, 1.0)
    assert he.t0 >= he.t0_min
    grid = np.linspace(he.t0_min, 20 * he.t0 + 10, 200001)[1:]
    brute = np.min(bd.concavity_time(grid, s, he.beta, 3.0))
    assert he.T_upper == pytest.approx(brute, rel=1e-8)
    assert he.beta == pytest.approx(2 * (157.08 / 3 - 30.97))


def test_high_energy_not_applicable():
    with pytest.raises(bd.NotApplicable, match="growth"):
        bd.high_energy_bound_from_scalars(bd.DataScalars(1, 2, 1, 5.0, -1, 1), 3.0, 1.0)
    with pytest.raises(bd.NotApplicable):
        bd.high_energy_bound_from_scalars(bd.DataScalars(1, 2, 100, 5.0, -1, 1), 3.0, 1.0)


def test_lifespan_closed_form():
    for N0, C5, q in [(1.0, 1.0, 3.0), (70.0, 0.003, 3.0), (0.5, 2.0, 1.5)]:
        closed = N0 ** (1 - q) / (C5 * (q - 1))
        assert bd.lifespan_integral(N0, 0.0, C5, q) == pytest.approx(closed, rel=1e-14)
    assert bd.lifespan_integral(0.0, 0.0, 1.0, 2.0) == math.inf


def brute_force(N0, C4, C5, q, cut):
    main, _ = quad(lambda s: 1.0 / (C4 + C5 * s**q), N0, cut, epsabs=0.0, epsrel=1e-12, limit=1000)
    # tail: 1/(C5 s^q) expanded to second order in C4/(C5 s^q)
    r = C4 / C5
    tail = (cut ** (1 - q) / (q - 1) - r * cut ** (1 - 2 * q) / (2 * q - 1) + r * r * cut ** (1 - 3 * q) / (3 * q - 1)) / C5
    return main + tail


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 10.0), st.floats(1e-3, 10.0), st.floats(1.2, 4.0))
def test_lifespan_vs_cut_and_tail(N0, C4, C5, q):
    cut = max(N0, (C4 / C5) ** (1 / q)) * 1e3
    ref = brute_force(N0, C4, C5, q, cut)
    assert bd.lifespan_integral(N0, C4, C5, q) == pytest.approx(ref, rel=1e-6)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 10.0), st.floats(1e-3, 10.0), st.floats(1.2, 4.0))
def test_lifespan_halving(N0, C4, C5, q):
    T1 = bd.lifespan_integral(N0, C4, C5, q)
    T2 = bd.lifespan_integral(N0, 2 * C4, 2 * C5, q)
    assert T2 == 0.5 * T1


def test_lifespan_monotone_in_N0():
    vals = [bd.lifespan_integral(N0, 0.2, 0.5, 3.0) for N0 in (0.0, 0.1, 1.0, 10.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_lower_bound_constants():
    C4, C5, A, B, theta = bd.lower_bound_constants(1, 3.0, 1.0, math.pi, 0.6, 1 / math.sqrt(2))
    assert theta == 0.5
    assert A == pytest.approx(math.sqrt(math.pi) / (2 * math.e))
    assert B == pytest.approx(0.6**3 / math.e)
    assert C4 == pytest.approx(A * A / 2) and C5 == pytest.approx(B * B / 2)
    assert bd.lower_bound_constants(3, 3.0, 1.0, 1.0, 1.0, 1.0)[4] == pytest.approx(5 / 6)


def test_lower_bound_S(line):
    lb = bd.lower_bound(Field.eigenmode(line, 1), Field.zeros(line), fn.make_exponents(3.0, 1), 0.6)
    assert lb.S == pytest.approx(1 / math.sqrt(2))
    assert lb.N0 == pytest.approx(math.pi)
    assert lb.exponent == 3.0


def _rec(**cols):
    n = len(next(iter(cols.values())))
    data = {k: np.asarray(v, dtype=float) for k, v in cols.items()}
    data.setdefault("t", np.arange(n, dtype=float))
    return TrajectoryRecord(3.0, 1.0, 1.0, data)


def test_monitor_growth_synthetic():
    t = np.linspace(0, 2, 21)
    E = np.full_like(t, 1.0)
    ok = _rec(t=t, E=E, uv_inner=3.0 + 2 * np.exp(1.01 * t))
    assert bd.monitor_growth_H(ok, 1.0, 3.0).passed
    bad = _rec(t=t, E=E, uv_inner=3.0 + 2 * np.exp(0.9 * t))
    v = bd.monitor_growth_H(bad, 1.0, 3.0)
    assert v.status == "Fail" and v.first_violation is not None
    assert bd.monitor_growth_H(_rec(t=t, E=E, uv_inner=np.zeros_like(t)), 1.0, 3.0).status == "NotApplicable"


def test_monitor_invariance_synthetic():
    good = _rec(I=[-1, -2, -3], H_sq=[30, 40, 50], P=[1, 1, 1])
    assert bd.monitor_invariance(good, d_est=5.0, p=3.0).passed
    left = _rec(I=[-1, 0.5, -3], H_sq=[30, 40, 50], P=[1, 1, 1])
    assert bd.monitor_invariance(left, d_est=5.0, p=3.0).first_violation == 1
    assert bd.monitor_invariance(_rec(I=[1.0, 1.0], H_sq=[1, 1], P=[1, 1]), 5.0, 3.0).status == "NotApplicable"


def test_concavity_not_applicable():
    r = _rec(l2_sq=[0.0, 0, 0], I=[-1.0, -1, -1], h1_sq=[0, 0, 0], acc_h1=[0, 0, 0], uv_inner=[0, 0, 0])
    assert bd.monitor_concavity_G(r, 1.0, 1.0, 3.0).status == "NotApplicable"


def test_audit_negative_energy():
    cfg, rec, well = preset_run("negative_energy")
    rep = bd.audit_run(cfg, rec, well)
    assert rep.regime.has("NegativeEnergy")
    assert rep.T_upper_kind == "subcritical_rigorous"
    assert rep.subcritical_rigorous.b == pytest.approx(well.d0 - rep.regime.E0)
    assert all(v.status != "Fail" for v in rep.verdicts.values()), rep.verdicts
    assert rep.lower.T_lower <= rep.T_num_bracket[1] <= rep.T_upper
    keys = [k for k, _ in rep.items()]
    assert "T_num_lo" in keys and "lower.T_lower" in keys and "subcritical.T_upper" in keys


def test_audit_not_unit_coefficients():
    from dataclasses import replace

    cfg, rec, well = preset_run("negative_energy")
    rep = bd.audit_run(replace(cfg, omega=0.5), rec, well)
    assert rep.T_upper is None and rep.lower is None
    assert rep.provenance["bounds"].startswith("NotApplicable")
