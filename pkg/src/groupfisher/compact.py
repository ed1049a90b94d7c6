"""Logistic compactification of R^k and smooth test-function bases on it.

Test functions are polynomials in the compactified coordinates
``u = 2 * logistic(x) - 1``.  Every such function extends continuously to
the two-point compactification of each axis, and all of its derivatives
carry a factor ``logistic'(x) ~ exp(-|x|)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import legendre
from scipy.special import expit, logit

#: |x_i| beyond which ``forward`` saturates; expit(-700) is still a normal double.
SATURATION = 700.0

#: Largest admissible number of basis functions.
MAX_BASIS_SIZE = 100_000


class BasisSizeError(ValueError):
    pass


def forward(x):
    """Componentwise logistic map R^k -> (0, 1)^k.

    Inputs are clipped to ``[-SATURATION, SATURATION]`` first, so the result
    never underflows to exactly 0.  On the upper side the double nearest to
    the true value is 1.0 already for x_i > 37.
    """
    x = np.asarray(x, dtype=float)
    return expit(np.clip(x, -SATURATION, SATURATION))


def backward(y):
    """Componentwise logit, the inverse of :func:`forward` on (0, 1)^k."""
    y = np.asarray(y, dtype=float)
    if np.any(~((y > 0.0) & (y < 1.0))):
        raise ValueError("backward is defined on the open unit cube only")
    return logit(y)


def forward_derivative(x):
    """Diagonal of the Jacobian of :func:`forward`, i.e. l(x)(1 - l(x))."""
    s = forward(x)
    return s * (1.0 - s)


@dataclass(frozen=True)
class CompactMap:
    """The compactification for a fixed dimension ``k``."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("dimension must be positive")

    def forward(self, x):
        return forward(self._check(x))

    def backward(self, y):
        return backward(self._check(y))

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.k:
            raise ValueError(f"expected trailing dimension {self.k}, got {v.shape}")
        return v


def graded_multi_indices(k: int, degree: int) -> list[tuple[int, ...]]:
    """Multi-indices of total degree <= ``degree``, graded then reverse-lex.

    The degree-d list is a prefix of the degree-(d+1) list.
    """
    out: list[tuple[int, ...]] = []
    for total in range(degree + 1):
        out.extend(_compositions(total, k))
    return out


def _compositions(total: int, k: int):
    if k == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class TestFunctionBasis:
    """Tensor Legendre polynomials in compactified coordinates.

    ``phi_a(x) = prod_i L_{a_i}(2 l(x_i) - 1)`` for all multi-indices with
    ``sum(a) <= degree``.  Values lie in [-1, 1] and gradients are bounded
    by ``degree * (degree + 1) / 4`` times the product of the other factors.
    """

    __test__ = False  # keep pytest from collecting this class

    k: int
    degree: int
    indices: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.indices)

    def _legendre_tables(self, x):
        # (n, k) points -> value and derivative tables of shape (n, k, degree + 1)
        x = np.asarray(x, dtype=float)
        u = 2.0 * forward(x) - 1.0
        eye = np.eye(self.degree + 1)
        vals = np.moveaxis(legendre.legval(u, eye), 0, -1)
        if self.degree > 0:
            der_coef = legendre.legder(eye, axis=0)
            ders = np.moveaxis(legendre.legval(u, der_coef), 0, -1)
        else:
            ders = np.zeros_like(vals)
        return vals, ders

    def values(self, x) -> np.ndarray:
        """Evaluate every basis function: (n, k) points -> (n, m)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        vals, _ = self._legendre_tables(x)
        idx = np.asarray(self.indices)  # (m, k)
        cols = np.arange(self.k)
        return np.prod(vals[:, cols, idx], axis=-1)

    def gradients(self, x) -> np.ndarray:
        """Evaluate every basis gradient: (n, k) points -> (n, m, k)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        vals, ders = self._legendre_tables(x)
        # d/dx_i L(2 l(x_i) - 1) = L'(u_i) * 2 l'(x_i)
        ders = ders * (2.0 * forward_derivative(x))[:, :, None]
        idx = np.asarray(self.indices)
        cols = np.arange(self.k)
        v = vals[:, cols, idx]  # (n, m, k)
        d = ders[:, cols, idx]
        out = np.empty_like(v)
        for i in range(self.k):
            factors = v.copy()
            factors[:, :, i] = d[:, :, i]
            out[:, :, i] = np.prod(factors, axis=-1)
        return out

    def values_and_gradients(self, x):
        return self.values(x), self.gradients(x)

    def prefix(self, degree: int) -> "TestFunctionBasis":
        """The nested sub-basis of lower total degree."""
        if degree > self.degree:
            raise ValueError("prefix degree exceeds basis degree")
        return make_basis(self.k, degree)


def basis_size(k: int, degree: int) -> int:
    return comb(degree + k, k)


def make_basis(k: int, degree: int) -> TestFunctionBasis:
    if k < 1 or degree < 0:
        raise ValueError("need k >= 1 and degree >= 0")
    m = basis_size(k, degree)
    if m > MAX_BASIS_SIZE:
        raise BasisSizeError(f"basis of size {m} exceeds {MAX_BASIS_SIZE}")
    return TestFunctionBasis(k, degree, tuple(graded_multi_indices(k, degree)))
