"""Exact Bernoulli numbers, Bernoulli polynomials and their periodic versions.

Everything here is computed in exact rational arithmetic (``fractions.Fraction``)
and only converted to floating point at the last moment, so that identities such
as the multiplication theorem hold exactly and the boundary weights of the
summation formulas carry no rounding error.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, floor
from typing import Union

import numpy as np

__all__ = [
    "BernoulliPolynomial",
    "bernoulli_number",
    "bernoulli_poly",
    "periodic_bernoulli",
    "periodic_bernoulli_values",
]

Exact = Union[int, Fraction]

# Memo table for the B_k recurrence.  Guarded by a lock so concurrent callers
# never observe a partially extended table.
_B_CACHE: list[Fraction] = [Fraction(1)]
_B_LOCK = threading.Lock()


def bernoulli_number(k: int) -> Fraction:
    """Return the Bernoulli number B_k (convention B_1 = -1/2) as a Fraction.

    Computed by the recurrence B_k = -sum_{j<k} C(k,j) B_j / (k-j+1) with
    memoization; cost is negligible for the small orders needed here.
    """
    if k < 0:
        raise ValueError("Bernoulli index must be non-negative")
    with _B_LOCK:
        while len(_B_CACHE) <= k:
            m = len(_B_CACHE)
            acc = Fraction(0)
            for j in range(m):
                acc += comb(m, j) * _B_CACHE[j] / (m - j + 1)
            _B_CACHE.append(-acc)
        return _B_CACHE[k]


@dataclass(frozen=True)
class BernoulliPolynomial:
    """The polynomial B_k(x), stored as exact coefficients of x^j at index j."""

    degree: int
    coefficients: tuple[Fraction, ...]

    def __call__(self, x: Union[Exact, float]) -> Union[Fraction, float]:
        """Evaluate B_k at x; exact for int/Fraction input, float otherwise."""
        if isinstance(x, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self.coefficients):
                acc = acc * x + c
            return acc
        acc_f = 0.0
        for c in reversed(self.coefficients):
            acc_f = acc_f * x + float(c)
        return acc_f

    def float_coefficients(self) -> np.ndarray:
        """Coefficients highest degree first, for numpy polynomial evaluation."""
        return np.array([float(c) for c in reversed(self.coefficients)])


@lru_cache(maxsize=None)
def bernoulli_poly(k: int) -> BernoulliPolynomial:
    """Return B_k(x) with exact coefficients: coeff of x^j is C(k,j) B_{k-j}."""
    if k < 0:
        raise ValueError("Bernoulli index must be non-negative")
    coeffs = tuple(comb(k, j) * bernoulli_number(k - j) for j in range(k + 1))
    return BernoulliPolynomial(degree=k, coefficients=coeffs)


def periodic_bernoulli(k: int, x: Union[Exact, float]) -> Union[Fraction, float]:
    """Evaluate the 1-periodic function B_k({x}) with {x} = x - floor(x).

    Exact when x is an int or Fraction, floating point otherwise.
    """
    if isinstance(x, (int, Fraction)):
        frac = Fraction(x) - floor(x)
        return bernoulli_poly(k)(frac)
    return bernoulli_poly(k)(x - floor(x))


def periodic_bernoulli_values(k: int, xs: np.ndarray) -> np.ndarray:
    """Vectorized B_k({x}) for a float array; used by quadrature weights."""
    fracs = xs - np.floor(xs)
    return np.polyval(bernoulli_poly(k).float_coefficients(), fracs)
