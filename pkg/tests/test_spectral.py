import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from logwave.spectral import (
    ConfigurationError, DomainMismatchError, Field, apply_bilaplacian, apply_neg_laplacian, build_domain,
    coeffs_to_samples, gradient_samples, inner, integrate, samples_to_coeffs,
)


@pytest.mark.parametrize("dim,L,lam1", [(1, math.pi, 1.0), (2, math.pi, 2.0), (1, 2 * math.pi, 0.25)])
def test_lambda1(dim, L, lam1):
    d = build_domain(dim, L, 8)
    assert d.lambda1 == pytest.approx(lam1, rel=1e-15)
    assert d.lambda1 == d.lambda_table.min()


def test_tables(rect):
    kx, ky = np.meshgrid(np.arange(1, 13), np.arange(1, 11), indexing="ij")
    mu = (kx * math.pi / math.pi) ** 2 + (ky * math.pi / 2.0) ** 2
    np.testing.assert_allclose(rect.lambda_table, mu, rtol=1e-15)
    np.testing.assert_array_equal(rect.bilaplacian_table, rect.lambda_table**2)
    assert np.all(rect.lambda_table > 0)
    with pytest.raises(ValueError):
        rect.lambda_table[0, 0] = 1.0


def test_bad_domains():
    with pytest.raises(ConfigurationError, match="aliasing"):
        build_domain(1, math.pi, 8, 15)
    with pytest.raises(ConfigurationError) as e:
        build_domain(2, (-1.0, 0.0), (0, 4))
    msg = str(e.value)
    # every problem listed, not only the first
    assert msg.count("positive length") == 2 and "modes[0]" in msg
    with pytest.raises(ConfigurationError):
        build_domain(3, 1.0, 4)


def test_eigenmode_samples(line):
    x = line.nodes(0)
    np.testing.assert_allclose(Field.eigenmode(line, 3).samples, np.sin(3 * x), atol=1e-12)
    back = Field.from_samples(line, np.sin(3 * x)).coeffs
    one_hot = np.zeros(32)
    one_hot[2] = 1.0
    np.testing.assert_allclose(back, one_hot, atol=1e-12)


def test_eigenmode_2d(rect):
    X, Y = rect.mesh()
    u = Field.eigenmode(rect, (2, 3), 0.5)
    np.testing.assert_allclose(u.samples, 0.5 * np.sin(2 * X) * np.sin(3 * math.pi * Y / 2), atol=1e-12)


def test_zero_field(rect):
    z = Field.zeros(rect)
    assert z.is_zero()
    assert not np.any(z.samples)
    assert not np.any(Field.from_samples(rect, np.zeros(rect.grid_shape)).coeffs)


def test_operators(line):
    phi = Field.eigenmode(line, 5)
    np.testing.assert_allclose(apply_neg_laplacian(phi).coeffs, 25 * phi.coeffs, rtol=1e-15)
    np.testing.assert_allclose(apply_bilaplacian(phi).coeffs, 625 * phi.coeffs, rtol=1e-15)


def test_operator_vs_samples(line):
    # -u'' of sin(kx) sampled agrees with the diagonal action
    rng = np.random.default_rng(1)
    c = rng.standard_normal(32) / np.arange(1, 33) ** 3
    u = Field(line, c)
    x = line.nodes(0)
    ref = sum(ck * k**2 * np.sin(k * x) for k, ck in enumerate(c, start=1))
    np.testing.assert_allclose(apply_neg_laplacian(u).samples, ref, atol=1e-12)


@given(st.integers(0, 2**31 - 1), st.sampled_from([(1, 8), (1, 33), (2, 6)]))
def test_round_trip(seed, shape):
    dim, m = shape
    d = build_domain(dim, (math.pi, 1.5)[:dim], m)
    c = np.random.default_rng(seed).standard_normal(d.modes)
    back = samples_to_coeffs(d, coeffs_to_samples(d, c))
    assert np.linalg.norm(back - c) <= 1e-12 * np.linalg.norm(c)


def test_boundary_zero(rect):
    s = Field(rect, np.ones(rect.modes)).samples
    assert not np.any(s[0]) and not np.any(s[-1]) and not np.any(s[:, 0]) and not np.any(s[:, -1])


def test_sine_cube():
    d = build_domain(1, math.pi, 512)
    s = np.sin(d.nodes(0)) ** 3
    assert abs(integrate(d, s) - 4.0 / 3.0) <= 1e-10
    small = build_domain(1, math.pi, 4)
    assert abs(integrate(small, np.sin(small.nodes(0)) ** 3, rule="sine") - 4.0 / 3.0) <= 1e-14


def test_parseval(rect):
    rng = np.random.default_rng(3)
    u = Field(rect, rng.standard_normal(rect.modes))
    v = Field(rect, rng.standard_normal(rect.modes))
    grid = integrate(rect, u.samples * v.samples)
    assert grid == pytest.approx(inner(u, v), rel=1e-12, abs=1e-12)


def test_gradient(line, rect):
    x = line.nodes(0)
    (g,) = gradient_samples(line, Field.eigenmode(line, 4).coeffs)
    np.testing.assert_allclose(g, 4 * np.cos(4 * x), atol=1e-12)
    X, Y = rect.mesh()
    gx, gy = gradient_samples(rect, Field.eigenmode(rect, (1, 2)).coeffs)
    np.testing.assert_allclose(gx, np.cos(X) * np.sin(math.pi * Y), atol=1e-12)
    np.testing.assert_allclose(gy, math.pi * np.sin(X) * np.cos(math.pi * Y), atol=1e-12)


def test_mismatch(line, rect):
    other = build_domain(1, math.pi, 16)
    with pytest.raises(DomainMismatchError):
        Field.eigenmode(line, 1) + Field.eigenmode(other, 1)
    with pytest.raises(DomainMismatchError):
        inner(Field.zeros(line), Field.zeros(other))
    with pytest.raises(DomainMismatchError):
        Field(line, np.zeros(5))
    with pytest.raises(ConfigurationError):
        Field.eigenmode(line, 33)
