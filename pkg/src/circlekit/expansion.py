"""Assembly of the multi-term expansion, exact counting oracles and projective counts.

The expansion approximates the number of lattice points x in the dilated box
P*B with F(x) = n by one term per index tuple: a truncated singular series
times a truncated singular integral times P^(s - |I1| - |I2| - |tau| - d).
Exact enumeration provides the ground truth; the projective counter combines
enumeration with Moebius inversion over the coordinate gcd.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor, fsum, gcd, prod
from typing import Callable, Sequence, Union

import numpy as np

from .errors import BudgetExceededError, CircleKitError, ConfigError
from .forms import HomogeneousForm
from .indexing import Box, IndexTuple, enumerate_index_set
from .quadrature import DEFAULT_QUAD, QuadratureSpec
from .singular_integrals import IntegralValue, J_gamma, truncated_singular_integral
from .singular_series import (
    DEFAULT_ENUM_BUDGET,
    SeriesValue,
    exp_sum,
    mobius_modified_series,
    mobius_sieve,
    truncated_singular_series,
    _phase_table,
)

__all__ = [
    "ExpansionTerm",
    "ExpansionResult",
    "brute_force_count",
    "lattice_ranges",
    "assemble_expansion",
    "major_arc_model",
    "rational_point_count",
    "comparison_report",
    "hypothesis_margin",
    "clear_caches",
]

RationalLike = Union[Fraction, int, str]

_COUNT_CACHE: dict = {}
_INTEGRAL_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()
_CACHE_HITS = {"counts": 0, "integrals": 0}


def clear_caches() -> None:
    with _CACHE_LOCK:
        _COUNT_CACHE.clear()
        _INTEGRAL_CACHE.clear()
        _CACHE_HITS["counts"] = 0
        _CACHE_HITS["integrals"] = 0


def lattice_ranges(box: Box, P: RationalLike) -> list[tuple[int, int]]:
    """Integer ranges [lo_i, hi_i] of the points with P a_i < x_i <= P b_i.

    Boundary membership is decided in exact rational arithmetic.
    """
    P = Fraction(P)
    if P <= 0:
        raise ConfigError("P must be positive")
    return [(floor(P * a) + 1, floor(P * b)) for a, b in zip(box.a, box.b)]


def _grid_values(F: HomogeneousForm, axes: list[np.ndarray]) -> np.ndarray:
    """F on the product grid of the given integer axes, via broadcasting."""
    shape = tuple(ax.size for ax in axes)
    out = np.zeros(shape, dtype=np.int64)
    for exps, coeff in F.monomials.items():
        term = np.int64(coeff)
        for i, e in enumerate(exps):
            if e:
                view = [1] * len(axes)
                view[i] = -1
                term = term * (axes[i].astype(np.int64) ** e).reshape(view)
        out += term
    return out


def _int64_safe(F: HomogeneousForm, ranges: Sequence[tuple[int, int]]) -> bool:
    bound = 0
    for exps, coeff in F.monomials.items():
        term = abs(coeff)
        for (lo, hi), e in zip(ranges, exps):
            term *= max(abs(lo), abs(hi)) ** e
        bound += term
    return bound < 2**62


def brute_force_count(
    F: HomogeneousForm,
    box: Box,
    P: RationalLike,
    n: int,
    budget: int = 10**10,
    threads: int = 1,
) -> int:
    """Exact number of integer points x in P*B (half-open) with F(x) = n.

    Chunked along the first coordinate; chunk counts are exact integers, so the
    reduction order is irrelevant and threading is safe.
    """
    if box.s != F.s:
        raise ConfigError("box and form disagree on the number of variables")
    ranges = lattice_ranges(box, P)
    if any(lo > hi for lo, hi in ranges):
        return 0
    total_points = prod(hi - lo + 1 for lo, hi in ranges)
    if total_points > budget:
        raise BudgetExceededError(
            f"enumeration of {total_points} lattice points exceeds budget {budget}"
        )
    key = (F.key(), tuple(ranges), n)
    with _CACHE_LOCK:
        if key in _COUNT_CACHE:
            _CACHE_HITS["counts"] += 1
            return _COUNT_CACHE[key]
    if not _int64_safe(F, ranges):
        count = _count_python(F, ranges, n)
    else:
        count = _count_numpy(F, ranges, n, threads)
    with _CACHE_LOCK:
        _COUNT_CACHE[key] = count
    return count


def _count_numpy(
    F: HomogeneousForm, ranges: Sequence[tuple[int, int]], n: int, threads: int
) -> int:
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in ranges]
    trailing = prod(ax.size for ax in axes[1:]) if len(axes) > 1 else 1
    block = max(1, 16_000_000 // max(1, trailing))
    starts = list(range(0, axes[0].size, block))

    def count_block(start: int) -> int:
        sub = [axes[0][start : start + block]] + axes[1:]
        return int(np.count_nonzero(_grid_values(F, sub) == n))

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(count_block, starts))
    return sum(count_block(s) for s in starts)


def _count_python(F: HomogeneousForm, ranges: Sequence[tuple[int, int]], n: int) -> int:
    import itertools

    count = 0
    for point in itertools.product(*(range(lo, hi + 1) for lo, hi in ranges)):
        if F.evaluate_integer(point) == n:
            count += 1
    return count


# -- expansion assembly --------------------------------------------------------


@dataclass(frozen=True)
class ExpansionTerm:
    tuple_label: IndexTuple
    series: SeriesValue | None
    integral: IntegralValue | None
    exponent: int
    term_value: float
    error: str | None = None

    def as_dict(self) -> dict:
        d = {
            "tuple": self.tuple_label.render(),
            "exponent": self.exponent,
            "term_value": self.term_value,
        }
        if self.series is not None:
            d.update(
                series_re=self.series.value.real,
                series_im=self.series.value.imag,
                series_tail=self.series.term_tail_estimate,
            )
        if self.integral is not None:
            d.update(
                integral_re=self.integral.value.real,
                integral_im=self.integral.value.imag,
                integral_tail=self.integral.tail_estimate,
                integral_flags=list(self.integral.flags),
            )
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass(frozen=True)
class ExpansionResult:
    terms: tuple[ExpansionTerm, ...]
    total: float
    P: Fraction
    n: int
    K: int
    Q_series: int
    Q_integral: float
    sigma: int | None = None
    exact_count: int | None = None
    residual: float | None = None
    warnings: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "P": str(self.P),
            "n": self.n,
            "K": self.K,
            "Q_series": self.Q_series,
            "Q_integral": self.Q_integral,
            "sigma": self.sigma,
            "total": self.total,
            "exact_count": self.exact_count,
            "residual": self.residual,
            "warnings": list(self.warnings),
            "diagnostics": self.diagnostics,
            "terms": [t.as_dict() for t in self.terms],
        }


def hypothesis_margin(F: HomogeneousForm, sigma: int, K: int) -> float:
    """Margin of the variable-count hypothesis: s - sigma - (d-1) 2^(d-1) (2K^2+2K-2).

    Positive means the expansion's proven range; desk-scale runs are usually
    far outside it, which is reported as a warning, never a refusal.
    """
    return F.s - sigma - (F.d - 1) * 2 ** (F.d - 1) * (2 * K * K + 2 * K - 2)


def _cached_integral(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    n_arg: float,
    Q: float,
    quad: QuadratureSpec,
) -> IntegralValue:
    key = (F.key(), t.key(), box.key(), float(n_arg), float(Q), quad)
    with _CACHE_LOCK:
        if key in _INTEGRAL_CACHE:
            _CACHE_HITS["integrals"] += 1
            return _INTEGRAL_CACHE[key]
    value = truncated_singular_integral(F, t, box, n_arg, Q, quad)
    with _CACHE_LOCK:
        _INTEGRAL_CACHE[key] = value
    return value


def assemble_expansion(
    F: HomogeneousForm,
    box: Box,
    P: RationalLike,
    n: int,
    K: int,
    Q_series: int,
    Q_integral: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
    sigma: int | None = None,
    with_exact: bool = False,
    skip_on_failure: bool = False,
    series_budget: int = DEFAULT_ENUM_BUDGET,
    count_budget: int = 10**10,
    threads: int = 1,
) -> ExpansionResult:
    """Evaluate every term of the K-level expansion of R_B(P, n).

    Per-term numerical failures are fatal by default (a silently dropped term
    corrupts residual analysis); with ``skip_on_failure`` the failing terms are
    recorded with their error and excluded from the total.
    """
    if K < 1:
        raise ConfigError("expansion order K must be >= 1")
    P = Fraction(P)
    if P <= 0:
        raise ConfigError("P must be positive")
    warnings: list[str] = []
    diagnostics: dict = {}
    if sigma is not None:
        margin = hypothesis_margin(F, sigma, K)
        if margin <= 0:
            warnings.append(
                f"variable-count hypothesis fails by {-margin}: "
                f"s - sigma = {F.s - sigma} needs to exceed "
                f"{(F.d - 1) * 2 ** (F.d - 1) * (2 * K * K + 2 * K - 2)}"
            )
        diagnostics["rho_upper_bounds"] = {
            t.render(): sigma + len(t.i1) + len(t.i2)
            for t in enumerate_index_set(F.s, K)
        }
    tuples = enumerate_index_set(F.s, K)
    n_arg = float(n) / float(P) ** F.d
    hits_before = _CACHE_HITS["integrals"]

    def build_term(t: IndexTuple) -> ExpansionTerm:
        exponent = F.s - t.weight - F.d
        try:
            series = truncated_singular_series(F, t, box, P, n, Q_series, series_budget)
            integral = _cached_integral(F, t, box, n_arg, Q_integral, quad)
        except CircleKitError as exc:
            if not skip_on_failure:
                raise
            return ExpansionTerm(t, None, None, exponent, 0.0, error=str(exc))
        value = series.value.real * integral.value.real * float(P) ** exponent
        return ExpansionTerm(t, series, integral, exponent, value)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            terms = list(pool.map(build_term, tuples))
    else:
        terms = [build_term(t) for t in tuples]
    total = fsum(term.term_value for term in terms if term.error is None)
    failed = [term.tuple_label.render() for term in terms if term.error is not None]
    if failed:
        warnings.append(f"terms skipped on failure: {', '.join(failed)}")
    diagnostics["integral_cache_hits"] = _CACHE_HITS["integrals"] - hits_before
    exact = residual = None
    if with_exact:
        exact = brute_force_count(F, box, P, n, budget=count_budget, threads=threads)
        residual = exact - total
    return ExpansionResult(
        terms=tuple(terms),
        total=total,
        P=P,
        n=n,
        K=K,
        Q_series=Q_series,
        Q_integral=float(Q_integral),
        sigma=sigma,
        exact_count=exact,
        residual=residual,
        warnings=tuple(warnings),
        diagnostics=diagnostics,
    )


def major_arc_model(
    F: HomogeneousForm,
    box: Box,
    P: RationalLike,
    n: int,
    r: int,
    q: int,
    gamma: float,
    K: int,
    quad: QuadratureSpec = DEFAULT_QUAD,
    budget: int = 10**9,
) -> tuple[complex, complex]:
    """Exact S(alpha) e(-alpha n) at alpha = r/q + gamma versus its model.

    The model is the tuple-indexed sum of q^(-|I3|+|tau|) S(P;r,q) e(-rn/q)
    P^(|I3|-|tau|) J(P^d gamma) e(-gamma n); both sides share the unimodular
    factor e(-alpha n), so the deviation does not depend on n.
    """
    if gcd(r, q) != 1:
        raise ConfigError("r and q must be coprime")
    P = Fraction(P)
    ranges = lattice_ranges(box, P)
    total_points = prod(hi - lo + 1 for lo, hi in ranges)
    if total_points > budget:
        raise BudgetExceededError(f"lattice sum over {total_points} points exceeds budget")
    if not _int64_safe(F, ranges):
        raise BudgetExceededError("lattice values overflow the fast path")
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in ranges]
    values = _grid_values(F, axes).ravel()
    table = _phase_table(q)
    phases = table[np.mod(r * np.mod(values, q), q)] * np.exp(
        2j * np.pi * gamma * values.astype(float)
    )
    alpha_n = table[(-r * n) % q] * np.exp(-2j * np.pi * gamma * n)
    exact = complex(np.sum(phases)) * alpha_n

    model_terms = []
    for t in enumerate_index_set(F.s, K):
        S = exp_sum(F, t, box, P, r, q)
        J = J_gamma(F, t, box, float(P) ** F.d * gamma, quad)
        scale = float(q) ** (-len(t.i3) + t.tau_weight) * float(P) ** (
            len(t.i3) - t.tau_weight
        )
        model_terms.append(scale * S * table[(-r * n) % q] * J * np.exp(-2j * np.pi * gamma * n))
    model = complex(
        fsum(v.real for v in model_terms), fsum(v.imag for v in model_terms)
    )
    return exact, model


# -- projective point counting ---------------------------------------------------


def _projective_count(F: HomogeneousForm, H: int, budget: int) -> int:
    """Projective rational points of height <= H: primitive vectors up to sign."""
    if H < 1:
        return 0
    if (2 * H + 1) ** F.s > budget:
        raise BudgetExceededError(f"projective enumeration (2H+1)^s exceeds budget {budget}")
    axes = [np.arange(-H, H + 1, dtype=np.int64) for _ in range(F.s)]
    values = _grid_values(F, axes)
    count = 0
    for idx in np.argwhere(values == 0):
        point = [int(axes[i][j]) for i, j in enumerate(idx)]
        g = 0
        for v in point:
            g = gcd(g, abs(v))
        if g != 1:
            continue
        first = next(v for v in point if v != 0)
        if first > 0:
            count += 1
    return count


def rational_point_count(
    F: HomogeneousForm,
    P: RationalLike,
    method: str = "exact",
    K: int = 2,
    Q_series: int = 12,
    Q_integral: float = 60.0,
    quad: QuadratureSpec = DEFAULT_QUAD,
    budget: int = 10**10,
) -> Union[int, float]:
    """Count rational points of height <= P on the projective hypersurface F = 0.

    Exact mode enumerates primitive vectors up to sign AND evaluates the
    Moebius-inverted combination (1/2) sum mu(e) (R(P/e, 0) - 1) over the box
    (-1, 1]^s, asserting integer equality of the two.  Expansion mode sums the
    Moebius-modified series against the singular integrals at 0.
    """
    P = Fraction(P)
    box = Box.symmetric(F.s)
    if method == "exact":
        if P < 1:
            return 0
        direct = _projective_count(F, floor(P), budget)
        mu = mobius_sieve(floor(P))
        acc = Fraction(0)
        for e in range(1, floor(P) + 1):
            if mu[e] == 0:
                continue
            acc += mu[e] * (brute_force_count(F, box, P / e, 0, budget=budget) - 1)
        moebius = acc / 2
        if moebius.denominator != 1 or moebius != direct:
            raise CircleKitError(
                f"Moebius identity violated: direct {direct} vs formula {moebius}"
            )
        return direct
    if method == "expansion":
        terms = []
        for t in enumerate_index_set(F.s, K):
            series = mobius_modified_series(F, t, box, P, Q_series, floor(P))
            integral = _cached_integral(F, t, box, 0.0, Q_integral, quad)
            exponent = F.s - t.weight - F.d
            terms.append(series * integral.value.real * float(P) ** exponent)
        return fsum(terms)
    raise ConfigError(f"unknown method {method!r}; use 'exact' or 'expansion'")


def comparison_report(
    F: HomogeneousForm,
    box: Box,
    n: Union[int, Callable[[Fraction], int]],
    P_grid: Sequence[RationalLike],
    K_list: Sequence[int],
    Q_series: int,
    Q_integral: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
    sigma: int | None = None,
    count_budget: int = 10**10,
    threads: int = 1,
) -> list[dict]:
    """Exact count vs expansion total over a (P, K) grid.

    The residual is also reported normalized by P^(s-d-K+1), the expected order
    of the first omitted term.
    """
    rows = []
    for P in P_grid:
        P = Fraction(P)
        n_val = n(P) if callable(n) else int(n)
        for K in K_list:
            result = assemble_expansion(
                F,
                box,
                P,
                n_val,
                K,
                Q_series,
                Q_integral,
                quad,
                sigma=sigma,
                with_exact=True,
                count_budget=count_budget,
                threads=threads,
            )
            normalizer = float(P) ** (F.s - F.d - K + 1)
            rows.append(
                {
                    "P": str(P),
                    "K": K,
                    "n": n_val,
                    "exact": result.exact_count,
                    "total": result.total,
                    "residual": result.residual,
                    "normalized_residual": result.residual / normalizer,
                }
            )
    return rows
