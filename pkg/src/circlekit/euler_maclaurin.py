"""One- and multi-dimensional Euler-MacLaurin summation.

The 1-D identity expresses a lattice sum over (a, b] as an integral plus
Bernoulli-weighted boundary derivatives plus a remainder integral against the
periodic Bernoulli weight.  The multi-dimensional version applies it per
coordinate, producing one term per partition of the coordinates into pinned
upper face / pinned lower face / integrated / remainder sets.

Functions are supplied with their derivatives: a 1-D function is a callable
``G(x, j)`` returning the j-th derivative on a float array, a multi-dimensional
one is ``g(points, kappa)`` with a derivative multi-index.  Builders for
polynomials and oscillating phases e(gamma*F) are provided below.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import ceil, factorial, floor, fsum
from typing import Callable, Sequence, Union

import numpy as np

from .bernoulli import periodic_bernoulli, periodic_bernoulli_values
from .errors import ConfigError
from .forms import HomogeneousForm, IntPolynomial, derivative_decomposition, diagonal_form
from .indexing import Box
from .quadrature import DEFAULT_QUAD, QuadratureSpec, integrate_1d, integrate_tensor

__all__ = [
    "em_sum_1d",
    "em_sum_multi",
    "direct_sum_1d",
    "direct_sum_multi",
    "poly_evaluator_1d",
    "phase_evaluator_1d",
    "poly_evaluator",
    "phase_evaluator",
    "self_check",
]

Real = Union[int, float, Fraction]
Function1D = Callable[[np.ndarray, int], np.ndarray]
FunctionND = Callable[[np.ndarray, tuple[int, ...]], np.ndarray]


def _integer_breaks(a: Real, b: Real) -> list[float]:
    return [float(k) for k in range(floor(a) + 1, ceil(b))]


def em_sum_1d(
    G: Function1D,
    a: Real,
    b: Real,
    K: int,
    quad: QuadratureSpec = DEFAULT_QUAD,
    freq_hint: float = 0.0,
) -> complex:
    """Evaluate the K-term Euler-MacLaurin expression for sum_{a < x <= b} G(x).

    The remainder integrand beta_K(x) G^(K)(x) is only piecewise smooth, so its
    panels always break at the integers in [a, b].
    """
    if K < 1:
        raise ConfigError("em_sum_1d needs K >= 1")
    if not a < b:
        raise ConfigError("em_sum_1d needs a < b")
    af, bf = float(a), float(b)
    integral, _ = integrate_1d(lambda x: G(x, 0), af, bf, quad, freq=freq_hint)
    boundary = 0.0 + 0.0j
    for kappa in range(1, K + 1):
        coef = Fraction((-1) ** kappa, factorial(kappa))
        beta_b = periodic_bernoulli(kappa, b)
        beta_a = periodic_bernoulli(kappa, a)
        gb = complex(G(np.array([bf]), kappa - 1)[0])
        ga = complex(G(np.array([af]), kappa - 1)[0])
        boundary += float(coef) * (float(beta_b) * gb - float(beta_a) * ga)
    remainder, _ = integrate_1d(
        lambda x: periodic_bernoulli_values(K, x) * G(x, K),
        af,
        bf,
        quad,
        freq=freq_hint,
        breaks=_integer_breaks(a, b),
    )
    return integral + boundary - float(Fraction((-1) ** K, factorial(K))) * remainder


def _em_multi_terms(g: FunctionND, box: Box, K: int, quad: QuadratureSpec, freq_hint: float):
    """Yield (assignment, kappas, value) for every term of the partition expansion.

    ``assignment[i]`` in {1, 2, 3, 4} sends coordinate i to the pinned-upper,
    pinned-lower, integrated or remainder role; ``kappas`` lists the Bernoulli
    orders chosen for the pinned coordinates (in coordinate order).
    """
    s = box.s
    for assign in itertools.product((1, 2, 3, 4), repeat=s):
        pinned = [i for i in range(s) if assign[i] in (1, 2)]
        free = [i for i in range(s) if assign[i] in (3, 4)]
        remainder_dims = [i for i in range(s) if assign[i] == 4]
        for kappas in itertools.product(range(1, K + 1), repeat=len(pinned)):
            coef = Fraction(1)
            kappa_vec = [0] * s
            for i in remainder_dims:
                coef *= Fraction((-1) ** (K + 1), factorial(K))
                kappa_vec[i] = K
            for i, kap in zip(pinned, kappas):
                kappa_vec[i] = kap - 1
                if assign[i] == 1:
                    coef *= Fraction((-1) ** kap, factorial(kap)) * periodic_bernoulli(
                        kap, box.b[i]
                    )
                else:
                    coef *= Fraction((-1) ** (kap + 1), factorial(kap)) * periodic_bernoulli(
                        kap, box.a[i]
                    )
            if coef == 0:
                yield assign, kappas, 0.0 + 0.0j
                continue
            pin_value = {
                i: float(box.b[i]) if assign[i] == 1 else float(box.a[i]) for i in pinned
            }
            kv = tuple(kappa_vec)
            if not free:
                point = np.array([[pin_value[i] for i in range(s)]])
                yield assign, kappas, float(coef) * complex(g(point, kv)[0])
                continue

            def integrand(pts: np.ndarray, _free=free, _pin=pin_value, _kv=kv) -> np.ndarray:
                full = np.empty((pts.shape[0], s))
                for col, i in enumerate(_free):
                    full[:, i] = pts[:, col]
                for i, v in _pin.items():
                    full[:, i] = v
                vals = g(full, _kv)
                for col, i in enumerate(_free):
                    if assign[i] == 4:
                        vals = vals * periodic_bernoulli_values(K, pts[:, col])
                return vals

            value, _ = integrate_tensor(
                integrand,
                [float(box.a[i]) for i in free],
                [float(box.b[i]) for i in free],
                quad,
                freqs=[freq_hint] * len(free),
                breaks=[
                    _integer_breaks(box.a[i], box.b[i]) if assign[i] == 4 else ()
                    for i in free
                ],
            )
            yield assign, kappas, float(coef) * value


def em_sum_multi(
    g: FunctionND,
    box: Box,
    K: int,
    quad: QuadratureSpec = DEFAULT_QUAD,
    freq_hint: float = 0.0,
) -> complex:
    """Evaluate the multi-dimensional Euler-MacLaurin expression for sum_{a < x <= b} g(x).

    Dimension is guarded at s <= 3: the partition expansion has (2K+2)^s terms.
    """
    if box.s > 3:
        raise ConfigError("em_sum_multi is desk-scale only (s <= 3)")
    if K < 1:
        raise ConfigError("em_sum_multi needs K >= 1")
    values = [v for _, _, v in _em_multi_terms(g, box, K, quad, freq_hint)]
    return complex(fsum(v.real for v in values), fsum(v.imag for v in values))


# -- direct-sum oracles ------------------------------------------------------


def lattice_range(a: Real, b: Real) -> range:
    """Integers x with a < x <= b, endpoint tests exact for rational inputs."""
    lo = floor(Fraction(a)) + 1
    hi = floor(Fraction(b))
    return range(lo, hi + 1)


def direct_sum_1d(G: Function1D, a: Real, b: Real) -> complex:
    xs = np.array(list(lattice_range(a, b)), dtype=float)
    if xs.size == 0:
        return 0.0 + 0.0j
    vals = G(xs, 0)
    return complex(fsum(np.real(vals)), fsum(np.imag(vals)))


def direct_sum_multi(g: FunctionND, box: Box) -> complex:
    grids = [list(lattice_range(box.a[i], box.b[i])) for i in range(box.s)]
    pts = np.array(list(itertools.product(*grids)), dtype=float)
    if pts.size == 0:
        return 0.0 + 0.0j
    vals = g(pts.reshape(-1, box.s), (0,) * box.s)
    return complex(fsum(np.real(vals)), fsum(np.imag(vals)))


# -- evaluator builders ------------------------------------------------------


def poly_evaluator_1d(coeffs: Sequence[Real]) -> Function1D:
    """1-D polynomial (coefficients low to high) with analytic derivatives."""
    base = [float(c) for c in coeffs]

    def G(x: np.ndarray, j: int) -> np.ndarray:
        cs = list(base)
        for _ in range(j):
            cs = [i * c for i, c in enumerate(cs)][1:]
        if not cs:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.polyval(list(reversed(cs)), np.asarray(x, dtype=float))

    return G


def phase_evaluator_1d(F: HomogeneousForm, gamma: float) -> Function1D:
    """G(x) = e(gamma*F(x)) for a univariate form, derivatives via the g_a decomposition."""
    if F.s != 1:
        raise ConfigError("phase_evaluator_1d needs a univariate form")
    nd = phase_evaluator(F, gamma)

    def G(x: np.ndarray, j: int) -> np.ndarray:
        return nd(np.asarray(x, dtype=float)[:, None], (j,))

    return G


def poly_evaluator(poly: IntPolynomial) -> FunctionND:
    """Multi-variate polynomial with analytic mixed partials."""
    derivs: dict[tuple[int, ...], IntPolynomial] = {(0,) * poly.nvars: poly}

    def g(pts: np.ndarray, kappa: tuple[int, ...]) -> np.ndarray:
        kappa = tuple(kappa)
        if kappa not in derivs:
            p = poly
            for i, k in enumerate(kappa):
                for _ in range(k):
                    p = p.derivative(i)
            derivs[kappa] = p
        return derivs[kappa].evaluate_points(pts).astype(complex)

    return g


def phase_evaluator(F: HomogeneousForm, gamma: float) -> FunctionND:
    """g(x) = e(gamma*F(x)) with mixed partials from the symbolic decomposition."""
    cache: dict[tuple[int, ...], object] = {}

    def g(pts: np.ndarray, kappa: tuple[int, ...]) -> np.ndarray:
        kappa = tuple(kappa)
        pts = np.asarray(pts, dtype=float)
        if sum(kappa) == 0:
            return np.exp(2j * np.pi * gamma * F.evaluate_points(pts))
        if kappa not in cache:
            cache[kappa] = derivative_decomposition(F, kappa)
        return cache[kappa].evaluate(F, gamma, pts)

    return g


def self_check(quad: QuadratureSpec = DEFAULT_QUAD) -> list[dict]:
    """Small battery comparing both summation formulas against direct sums."""
    checks = []

    def record(name: str, got: complex, want: complex, tol: float):
        checks.append(
            {
                "name": name,
                "got_re": got.real,
                "got_im": got.imag,
                "want_re": want.real,
                "want_im": want.imag,
                "abs_error": abs(got - want),
                "tol": tol,
                "ok": abs(got - want) <= tol,
            }
        )

    G_const = poly_evaluator_1d([1])
    record("constant on (0,7]", em_sum_1d(G_const, 0, 7, 2, quad), 7.0, 1e-10)
    G_sq = poly_evaluator_1d([0, 0, 1])
    record("x^2 on (0,10], K=3", em_sum_1d(G_sq, 0, 10, 3, quad), 385.0, 1e-10)
    F1, _ = diagonal_form(2, 1)
    Gosc = phase_evaluator_1d(F1, 0.1)
    record(
        "e(0.1 x^2) on (0,20], K=3",
        em_sum_1d(Gosc, 0, 20, 3, quad, freq_hint=0.1 * 2 * 20),
        direct_sum_1d(Gosc, 0, 20),
        1e-8,
    )
    box = Box((Fraction(0), Fraction(0)), (Fraction(3), Fraction(3)))
    g_xy = poly_evaluator(IntPolynomial(2, {(1, 1): 1}))
    record("xy on (0,3]^2, K=2", em_sum_multi(g_xy, box, 2, quad), 36.0, 1e-9)
    return checks
