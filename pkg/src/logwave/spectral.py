"""Sine-spectral discretisation of intervals and rectangles.

Under the Navier conditions u = Δu = 0 the products of sin(k π x / L) are
simultaneously eigenfunctions of -Δ and Δ², so both operators act as
diagonal multipliers on the coefficient array.

Grid convention: axis i carries N_i + 1 equispaced nodes x_j = j L_i / N_i,
j = 0..N_i, boundary nodes included (samples there are zero for every Field).
The interior nodes are exactly the DST-I nodes of length N_i - 1, so the
collocation transform is a scaled DST-I and the composite trapezoid rule on
the full node set is the matching inner product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft


class ConfigurationError(ValueError):
    """Invalid domain or problem parameters."""


class DomainMismatchError(ValueError):
    """Two fields (or a field and an operator) live on different domains."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Domain:
    dim: int
    extents: tuple[float, ...]
    modes: tuple[int, ...]
    grid_points: tuple[int, ...]
    lambda_table: np.ndarray = field(repr=False)
    bilaplacian_table: np.ndarray = field(repr=False)
    lambda1: float

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of the coefficient array."""
        return self.modes

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.grid_points)

    @property
    def measure(self) -> float:
        return float(np.prod(self.extents))

    @property
    def norm_weight(self) -> float:
        """∫ φ_k² dx for every basis function φ_k (Parseval factor)."""
        return float(np.prod([L / 2.0 for L in self.extents]))

    def wavenumbers(self, axis: int) -> np.ndarray:
        k = np.arange(1, self.modes[axis] + 1)
        return k * np.pi / self.extents[axis]

    def nodes(self, axis: int) -> np.ndarray:
        return np.linspace(0.0, self.extents[axis], self.grid_points[axis] + 1)

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*[self.nodes(i) for i in range(self.dim)], indexing="ij"))

    def trapezoid_weights(self) -> np.ndarray:
        ws = []
        for L, n in zip(self.extents, self.grid_points):
            w = np.full(n + 1, L / n)
            w[0] = w[-1] = 0.5 * L / n
            ws.append(w)
        out = ws[0]
        for w in ws[1:]:
            out = np.multiply.outer(out, w)
        return out

    def same_as(self, other: "Domain") -> bool:
        return other is self or (
            self.dim == other.dim
            and self.extents == other.extents
            and self.modes == other.modes
            and self.grid_points == other.grid_points
            and np.array_equal(self.lambda_table, other.lambda_table)
            and np.array_equal(self.bilaplacian_table, other.bilaplacian_table)
        )


def _as_tuple(x, dim: int, name: str) -> tuple:
    if np.isscalar(x):
        return (x,) * dim
    t = tuple(x)
    if len(t) != dim:
        raise ConfigurationError(f"{name} must have {dim} entries, got {len(t)}")
    return t


def build_domain(
    dim: int,
    extents: float | Sequence[float],
    modes: int | Sequence[int],
    grid_points: int | Sequence[int] | None = None,
) -> Domain:
    if dim not in (1, 2):
        raise ConfigurationError(f"dim must be 1 or 2, got {dim}")
    ext = tuple(float(L) for L in _as_tuple(extents, dim, "extents"))
    mds = tuple(int(m) for m in _as_tuple(modes, dim, "modes"))
    if grid_points is None:
        grid_points = tuple(2 * m for m in mds)
    grd = tuple(int(n) for n in _as_tuple(grid_points, dim, "grid_points"))
    problems = []
    for i, (L, m, n) in enumerate(zip(ext, mds, grd)):
        if not np.isfinite(L) or L <= 0:
            problems.append(f"extents[{i}] = {L} must be a positive length")
        if m < 1:
            problems.append(f"modes[{i}] = {m} must be >= 1")
        if n < 2 * m:
            problems.append(f"grid_points[{i}] = {n} < 2*modes = {2 * m} (aliasing risk)")
    if problems:
        raise ConfigurationError("; ".join(problems))

    mu_axes = [(np.arange(1, m + 1) * np.pi / L) ** 2 for L, m in zip(ext, mds)]
    lam = mu_axes[0]
    for mu in mu_axes[1:]:
        lam = np.add.outer(lam, mu)
    lambda1 = float(sum((np.pi / L) ** 2 for L in ext))
    return Domain(
        dim=dim,
        extents=ext,
        modes=mds,
        grid_points=grd,
        lambda_table=_frozen(lam),
        bilaplacian_table=_frozen(lam**2),
        lambda1=lambda1,
    )


# --- transforms ----------------------------------------------------------

def coeffs_to_samples(domain: Domain, coeffs: np.ndarray) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.shape != domain.modes:
        raise DomainMismatchError(f"coefficient shape {c.shape} != modes {domain.modes}")
    pad = [(0, n - 1 - m) for n, m in zip(domain.grid_points, domain.modes)]
    interior = np.pad(c, pad)
    for ax in range(domain.dim):
        interior = 0.5 * fft.dst(interior, type=1, axis=ax)
    return np.pad(interior, [(1, 1)] * domain.dim)


def samples_to_coeffs(domain: Domain, samples: np.ndarray, truncate: bool = True) -> np.ndarray:
    """Interpolating sine coefficients of grid samples.

    With ``truncate`` the result is the L²-projection onto the retained modes
    (discrete orthogonality makes the two coincide on the grid).
    """
    s = np.asarray(samples, dtype=float)
    if s.shape != domain.grid_shape:
        raise DomainMismatchError(f"sample shape {s.shape} != grid shape {domain.grid_shape}")
    interior = s[(slice(1, -1),) * domain.dim]
    for ax, n in enumerate(domain.grid_points):
        interior = fft.dst(interior, type=1, axis=ax) / n
    if truncate:
        interior = interior[tuple(slice(0, m) for m in domain.modes)]
    return interior


def gradient_samples(domain: Domain, coeffs: np.ndarray) -> list[np.ndarray]:
    """Grid samples of each partial derivative of the sine series."""
    c = np.asarray(coeffs, dtype=float)
    out = []
    for axis in range(domain.dim):
        shape = [1] * domain.dim
        shape[axis] = -1
        a = c * domain.wavenumbers(axis).reshape(shape)
        for ax in range(domain.dim):
            n, m = domain.grid_points[ax], domain.modes[ax]
            width = [(0, 0)] * domain.dim
            if ax == axis:
                # cosine series on all N+1 nodes; index 0 is the k = 0 slot
                width[ax] = (1, n - m)
                a = 0.5 * fft.dct(np.pad(a, width), type=1, axis=ax)
            else:
                width[ax] = (0, n - 1 - m)
                a = 0.5 * fft.dst(np.pad(a, width), type=1, axis=ax)
                a = np.pad(a, [(1, 1) if k == ax else (0, 0) for k in range(domain.dim)])
        out.append(a)
    return out


def integrate(domain: Domain, samples: np.ndarray, rule: str = "trapezoid") -> float:
    """∫_Ω of a grid function.

    ``trapezoid`` is spectrally accurate for integrands whose even reflection
    across the boundary is smooth, which covers every product of two fields
    obeying the Navier conditions (u², u v, |u|^p ln|u|, |∇u|²).
    ``sine`` interpolates by the full sine series on the grid and integrates
    it exactly, so it is exact for sine polynomials of degree < N.
    """
    s = np.asarray(samples, dtype=float)
    if s.shape != domain.grid_shape:
        raise DomainMismatchError(f"sample shape {s.shape} != grid shape {domain.grid_shape}")
    if rule == "trapezoid":
        return float(np.sum(domain.trapezoid_weights() * s))
    if rule == "sine":
        c = samples_to_coeffs(domain, s, truncate=False)
        weights = None
        for L, n in zip(domain.extents, domain.grid_points):
            k = np.arange(1, n)
            w = L * (1.0 - (-1.0) ** k) / (k * np.pi)
            weights = w if weights is None else np.multiply.outer(weights, w)
        return float(np.sum(c * weights))
    raise ValueError(f"unknown quadrature rule {rule!r}")


# --- fields --------------------------------------------------------------

class Field:
    """Scalar function on a Domain held as sine coefficients.

    Grid samples are computed on first request and cached; a Field is treated
    as immutable once built.
    """

    __slots__ = ("domain", "_coeffs", "_samples")

    def __init__(self, domain: Domain, coeffs: np.ndarray):
        c = np.array(coeffs, dtype=float)
        if c.shape != domain.modes:
            raise DomainMismatchError(f"coefficient shape {c.shape} != modes {domain.modes}")
        c.setflags(write=False)
        self.domain = domain
        self._coeffs = c
        self._samples = None

    @classmethod
    def zeros(cls, domain: Domain) -> "Field":
        return cls(domain, np.zeros(domain.modes))

    @classmethod
    def from_samples(cls, domain: Domain, samples: np.ndarray) -> "Field":
        return cls(domain, samples_to_coeffs(domain, samples))

    @classmethod
    def eigenmode(cls, domain: Domain, k: int | Sequence[int], amplitude: float = 1.0) -> "Field":
        ks = _as_tuple(k, domain.dim, "mode index")
        c = np.zeros(domain.modes)
        idx = tuple(int(ki) - 1 for ki in ks)
        if any(i < 0 or i >= m for i, m in zip(idx, domain.modes)):
            raise ConfigurationError(f"mode {ks} outside retained modes {domain.modes}")
        c[idx] = amplitude
        return cls(domain, c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            s = coeffs_to_samples(self.domain, self._coeffs)
            s.setflags(write=False)
            self._samples = s
        return self._samples

    def _check(self, other: "Field") -> None:
        if not self.domain.same_as(other.domain):
            raise DomainMismatchError("fields live on different domains")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.domain, self._coeffs + other._coeffs)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.domain, self._coeffs - other._coeffs)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.domain, float(scalar) * self._coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.domain, -self._coeffs)

    def is_zero(self) -> bool:
        return not np.any(self._coeffs)

    def __repr__(self) -> str:
        return f"Field(modes={self.domain.modes}, max|c|={np.max(np.abs(self._coeffs)):.3g})"


def to_coeffs(u: Field) -> np.ndarray:
    return u.coeffs


def to_samples(u: Field) -> np.ndarray:
    return u.samples


def apply_neg_laplacian(u: Field) -> Field:
    return Field(u.domain, u.domain.lambda_table * u.coeffs)


def apply_bilaplacian(u: Field) -> Field:
    return Field(u.domain, u.domain.bilaplacian_table * u.coeffs)


def inner(u: Field, v: Field) -> float:
    """L² inner product evaluated in coefficient space."""
    u._check(v)
    return float(u.domain.norm_weight * np.sum(u.coeffs * v.coeffs))
