"""Exact integer polynomials, homogeneous forms and phase-derivative data.

A form F is stored as a sparse map from exponent vectors to integer
coefficients.  The central symbolic operation is the decomposition of mixed
partials of the oscillating phase x -> e(gamma*F(x)) into the shape

    d^kappa e(gamma F) = sum_{a=1..|kappa|} gamma^a (2 pi i)^a g_a(x) e(gamma F),

where the g_a are integer-coefficient polynomials.  Keeping the (2 pi i)^a
factor symbolic means the g_a stay exact, which both the degree bookkeeping
and the modular-arithmetic consumers rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "IntPolynomial",
    "HomogeneousForm",
    "FormMetadata",
    "DerivativeDecomposition",
    "partial_derivative",
    "derivative_decomposition",
    "diagonal_form",
    "form_from_records",
    "form_to_records",
]

Exponents = tuple[int, ...]


class IntPolynomial:
    """Sparse polynomial with integer coefficients in ``nvars`` variables.

    Monomials are kept in a dict keyed by exponent tuples; zero coefficients
    are never stored.  Instances are treated as immutable.
    """

    __slots__ = ("nvars", "monomials")

    def __init__(self, nvars: int, monomials: Mapping[Exponents, int]):
        self.nvars = int(nvars)
        clean = {}
        for exps, coeff in monomials.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps} for {self.nvars} variables")
            coeff = int(coeff)
            if coeff != 0:
                clean[exps] = clean.get(exps, 0) + coeff
        self.monomials = {e: c for e, c in sorted(clean.items()) if c != 0}

    # -- algebra ----------------------------------------------------------

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        merged = dict(self.monomials)
        for exps, coeff in other.monomials.items():
            merged[exps] = merged.get(exps, 0) + coeff
        return IntPolynomial(self.nvars, merged)

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        prod: dict[Exponents, int] = {}
        for e1, c1 in self.monomials.items():
            for e2, c2 in other.monomials.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                prod[key] = prod.get(key, 0) + c1 * c2
        return IntPolynomial(self.nvars, prod)

    def scale(self, factor: int) -> "IntPolynomial":
        return IntPolynomial(self.nvars, {e: factor * c for e, c in self.monomials.items()})

    def derivative(self, i: int) -> "IntPolynomial":
        """Formal partial derivative with respect to variable i (0-based)."""
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range for {self.nvars} variables")
        out: dict[Exponents, int] = {}
        for exps, coeff in self.monomials.items():
            if exps[i] == 0:
                continue
            new = list(exps)
            new[i] -= 1
            out[tuple(new)] = out.get(tuple(new), 0) + coeff * exps[i]
        return IntPolynomial(self.nvars, out)

    # -- queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.monomials

    def total_degrees(self) -> set[int]:
        return {sum(e) for e in self.monomials}

    def is_homogeneous_of_degree(self, deg: int) -> bool:
        return self.is_zero() or self.total_degrees() == {deg}

    def key(self) -> tuple:
        """Hashable content key, used for caches."""
        return (self.nvars, tuple(self.monomials.items()))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IntPolynomial)
            and self.nvars == other.nvars
            and self.monomials == other.monomials
        )

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        if self.is_zero():
            return "IntPolynomial(0)"
        parts = []
        for exps, coeff in self.monomials.items():
            mono = "*".join(f"x{i}^{e}" for i, e in enumerate(exps) if e) or "1"
            parts.append(f"{coeff}*{mono}")
        return " + ".join(parts)

    # -- evaluation -------------------------------------------------------

    def evaluate_exact(self, x: Sequence[Union[int, Fraction]]):
        """Exact value at an integer or rational point."""
        if len(x) != self.nvars:
            raise ValueError(f"point has {len(x)} coordinates, expected {self.nvars}")
        total = 0
        for exps, coeff in self.monomials.items():
            term = coeff
            for xi, e in zip(x, exps):
                if e:
                    term *= xi**e
            total += term
        return total

    def evaluate_points(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized float evaluation on an (m, nvars) array of points."""
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        out = np.zeros(pts.shape[0])
        # Per-column power cache: exponents repeat heavily across monomials.
        powers: dict[tuple[int, int], np.ndarray] = {}
        for exps, coeff in self.monomials.items():
            term = np.full(pts.shape[0], float(coeff))
            for i, e in enumerate(exps):
                if e:
                    key = (i, e)
                    if key not in powers:
                        powers[key] = pts[:, i] ** e
                    term = term * powers[key]
            out += term
        return out


class HomogeneousForm(IntPolynomial):
    """Integer homogeneous form of degree d in s variables."""

    __slots__ = ("s", "d")

    def __init__(self, s: int, d: int, monomials: Mapping[Exponents, int]):
        if s < 1 or d < 1:
            raise ConfigError("a homogeneous form needs s >= 1 and d >= 1")
        super().__init__(s, monomials)
        for exps in self.monomials:
            if sum(exps) != d:
                raise ConfigError(f"monomial {exps} has total degree {sum(exps)}, expected {d}")
        self.s = s
        self.d = d

    def evaluate_integer(self, x: Sequence[int]) -> int:
        """Exact arbitrary-precision value F(x) at an integer point."""
        return self.evaluate_exact(x)

    def gradient(self) -> list[IntPolynomial]:
        return [self.derivative(i) for i in range(self.s)]

    def is_diagonal(self) -> bool:
        """True when every monomial involves a single variable (sum of c_i x_i^d)."""
        return all(sum(1 for e in exps if e) <= 1 for exps in self.monomials)

    def diagonal_coefficients(self) -> list[int]:
        """Coefficients c_i of a diagonal form sum c_i x_i^d (zero allowed)."""
        if not self.is_diagonal():
            raise ValueError("form is not diagonal")
        coeffs = [0] * self.s
        for exps, coeff in self.monomials.items():
            for i, e in enumerate(exps):
                if e:
                    coeffs[i] = coeff
        return coeffs

    def abs_bound(self, lo: Sequence[float], hi: Sequence[float]) -> float:
        """Crude upper bound for |F| on the box [lo, hi] (monomial-wise)."""
        total = 0.0
        for exps, coeff in self.monomials.items():
            term = abs(coeff)
            for i, e in enumerate(exps):
                term *= max(abs(lo[i]), abs(hi[i])) ** e
            total += term
        return total


@dataclass(frozen=True)
class FormMetadata:
    """User-supplied data about the form that is not derivable from it cheaply.

    ``singular_locus_dim`` is the affine dimension of the locus where all
    partials of F vanish; 0 means only the origin.  It enters hypothesis
    checks and diagnostics only, never the computed terms.
    """

    singular_locus_dim: int

    def __post_init__(self):
        if self.singular_locus_dim < -1:
            raise ConfigError("singular locus dimension must be >= -1")


def partial_derivative(F: IntPolynomial, i: int) -> IntPolynomial:
    """Exact formal partial derivative of F with respect to variable i (0-based)."""
    return F.derivative(i)


@dataclass(frozen=True)
class DerivativeDecomposition:
    """The polynomials g_a with d^kappa e(gamma F) = sum_a gamma^a (2 pi i)^a g_a e(gamma F).

    ``terms[a-1]`` is g_a for a = 1..|kappa|.  Nonzero g_a are homogeneous of
    degree a*d - |kappa|; g_a is identically zero whenever a*d < |kappa|.
    """

    kappa: tuple[int, ...]
    terms: tuple[IntPolynomial, ...]

    @property
    def weight(self) -> int:
        return sum(self.kappa)

    def evaluate(self, F: HomogeneousForm, gamma: float, pts: np.ndarray) -> np.ndarray:
        """Evaluate d^kappa e(gamma F) at float points of shape (m, s)."""
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        phase = np.exp(2j * np.pi * gamma * F.evaluate_points(pts))
        poly_part = np.zeros(pts.shape[0], dtype=complex)
        for a, g in enumerate(self.terms, start=1):
            if g.is_zero():
                continue
            poly_part += (gamma**a) * (2j * np.pi) ** a * g.evaluate_points(pts)
        return poly_part * phase


def derivative_decomposition(F: HomogeneousForm, kappa: Sequence[int]) -> DerivativeDecomposition:
    """Decompose d^kappa e(gamma F) by the one-step induction g_a <- d_j g_a + g_{a-1} dF/dx_j.

    Requires |kappa| >= 1.  The result does not depend on the order in which
    the multi-index is built up (mixed partials commute); we raise coordinates
    in ascending index order.
    """
    kappa = tuple(int(k) for k in kappa)
    if len(kappa) != F.s:
        raise ValueError(f"multi-index length {len(kappa)} does not match s={F.s}")
    if any(k < 0 for k in kappa):
        raise ValueError("multi-index entries must be non-negative")
    order: list[int] = []
    for j, k in enumerate(kappa):
        order.extend([j] * k)
    return _decompose_along(F, kappa, order)


def _decompose_along(
    F: HomogeneousForm, kappa: tuple[int, ...], order: Iterable[int]
) -> DerivativeDecomposition:
    """Build the decomposition by raising one derivative at a time, in ``order``."""
    order = list(order)
    if not order:
        raise ValueError("decomposition is defined for |kappa| >= 1")
    zero = IntPolynomial(F.s, {})
    grads = F.gradient()
    terms: list[IntPolynomial] = []
    for step, j in enumerate(order, start=1):
        new_terms = []
        for a in range(1, step + 1):
            g = terms[a - 1].derivative(j) if a <= len(terms) else zero
            if a >= 2:
                g = g + terms[a - 2] * grads[j]
            elif a == 1 and step == 1:
                g = grads[j]
            new_terms.append(g)
        terms = new_terms
    return DerivativeDecomposition(kappa=kappa, terms=tuple(terms))


def diagonal_form(d: int, s: int) -> tuple[HomogeneousForm, FormMetadata]:
    """The Waring form x_1^d + ... + x_s^d; its singular locus is the origin."""
    if d < 2 or s < 1:
        raise ConfigError("diagonal helper needs d >= 2 and s >= 1")
    monomials = {}
    for i in range(s):
        exps = [0] * s
        exps[i] = d
        monomials[tuple(exps)] = 1
    return HomogeneousForm(s, d, monomials), FormMetadata(singular_locus_dim=0)


def form_from_records(spec: Union[Mapping, Sequence[Mapping]]) -> HomogeneousForm:
    """Build a form from serialized records.

    Accepts either ``{"diagonal": {"d": ..., "s": ...}}`` or a list of
    ``{"exponents": [...], "coefficient": c}`` records (optionally wrapped in
    ``{"monomials": [...]}``).
    """
    if isinstance(spec, Mapping) and "diagonal" in spec:
        diag = spec["diagonal"]
        try:
            return diagonal_form(int(diag["d"]), int(diag["s"]))[0]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad diagonal form spec: {exc}") from exc
    if isinstance(spec, Mapping) and "monomials" in spec:
        spec = spec["monomials"]
    if not isinstance(spec, Sequence) or not spec:
        raise ConfigError("form spec must be a non-empty list of monomial records")
    monomials: dict[Exponents, int] = {}
    s = None
    for rec in spec:
        try:
            exps = tuple(int(e) for e in rec["exponents"])
            coeff = int(rec["coefficient"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad monomial record {rec!r}: {exc}") from exc
        if s is None:
            s = len(exps)
        elif len(exps) != s:
            raise ConfigError("monomial records disagree on the number of variables")
        monomials[exps] = monomials.get(exps, 0) + coeff
    degrees = {sum(e) for e in monomials}
    if len(degrees) != 1:
        raise ConfigError(f"monomials are not homogeneous: total degrees {sorted(degrees)}")
    return HomogeneousForm(s, degrees.pop(), monomials)


def form_to_records(F: HomogeneousForm) -> list[dict]:
    """Inverse of :func:`form_from_records` (always the explicit monomial list)."""
    return [{"exponents": list(e), "coefficient": c} for e, c in F.monomials.items()]
