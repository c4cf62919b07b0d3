"""Generalized exponential sums, singular series and their arithmetic interpretations.

The exponential sum attached to an index tuple weights each residue vector z
mod q by a phase e(r F(z)/q) and, for every pinned coordinate, a periodic
Bernoulli factor evaluated at the exact rational (P*b_i - z_i)/q (upper face)
or (P*a_i - z_i)/q (lower face).  Phases are reduced modulo q in integer
arithmetic before any complex exponential is formed, and Bernoulli weights are
evaluated at exact rationals: q^s unit-modulus terms forgive no phase error.

Sums over residues run in row-major order, blocks in ascending q and r, so
floating results are bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, fsum, gcd
from typing import Iterable, Sequence, Union

import numpy as np

from .bernoulli import bernoulli_poly, periodic_bernoulli
from .errors import BudgetExceededError, ConfigError
from .forms import HomogeneousForm
from .indexing import Box, IndexTuple
from .singular_integrals import waring_gamma_closed_form

__all__ = [
    "SeriesValue",
    "exp_sum",
    "series_block",
    "truncated_singular_series",
    "series_over_divisors",
    "congruence_weighted_count",
    "r_count",
    "lifted_exp_sum_check",
    "waring_S",
    "waring_T",
    "waring_series_block",
    "waring_sigma_series",
    "waring_C",
    "mobius_sieve",
    "mobius_modified_series",
]

# Per-(r, q) residue enumeration guard for the general (non-diagonal) path.
DEFAULT_ENUM_BUDGET = 10**8
# Above this many residue vectors, switch from exact-fsum loops to numpy.
_NUMPY_CROSSOVER = 40_000


@dataclass(frozen=True)
class SeriesValue:
    """A truncated series with its convergence diagnostics.

    ``term_tail_estimate`` is the magnitude of the final q-block; ``converged``
    means the last three blocks were already below tolerance and the imaginary
    residual is consistent with a real limit.
    """

    value: complex
    imag_residual: float
    Q: int
    term_tail_estimate: float
    converged: bool


def _fsum_complex(vals: Iterable[complex]) -> complex:
    vals = list(vals)
    return complex(fsum(v.real for v in vals), fsum(v.imag for v in vals))


@lru_cache(maxsize=4096)
def _phase_table(q: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(q) / q)


def _pin_products(t: IndexTuple, box: Box, P: Fraction) -> dict[int, Fraction]:
    """P*b_i for i in I1 and P*a_i for i in I2, as exact rationals."""
    pins = {i: P * box.b[i] for i in t.i1}
    pins.update({i: P * box.a[i] for i in t.i2})
    return pins


def _weight_sign(kind: int, tau_i: int) -> Fraction:
    if kind == 1:
        return Fraction((-1) ** (tau_i + 1), factorial(tau_i + 1))
    return Fraction((-1) ** tau_i, factorial(tau_i + 1))


def _weight_table(kind: int, tau_i: int, pin: Fraction, q: int) -> list[Fraction]:
    """Exact weights for one pinned coordinate over a full residue system."""
    sign = _weight_sign(kind, tau_i)
    return [sign * periodic_bernoulli(tau_i + 1, Fraction(pin - z, q)) for z in range(q)]


def _validate(F: HomogeneousForm, t: IndexTuple, box: Box, P: Fraction) -> Fraction:
    if t.s != F.s or box.s != F.s:
        raise ConfigError("form, tuple and box disagree on the number of variables")
    P = Fraction(P)
    if P <= 0:
        raise ConfigError("P must be positive")
    return P

def _int_grid(q: int, s: int, budget: int) -> np.ndarray:
    if q**s > budget:
        raise BudgetExceededError(f"residue enumeration q^s = {q}^{s} exceeds budget {budget}")
    mesh = np.meshgrid(*([np.arange(q, dtype=np.int64)] * s), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _form_mod_grid(F: HomogeneousForm, grid: np.ndarray, q: int) -> np.ndarray:
    """F(z) mod q on an int64 residue grid, with an overflow pre-check."""
    bound = 0
    for exps, coeff in F.monomials.items():
        bound += abs(coeff) * (q - 1) ** sum(exps)
    if bound >= 2**62:
        out = np.empty(grid.shape[0], dtype=np.int64)
        for k, z in enumerate(grid):
            out[k] = F.evaluate_integer([int(v) for v in z]) % q
        return out
    acc = np.zeros(grid.shape[0], dtype=np.int64)
    powers: dict[tuple[int, int], np.ndarray] = {}
    for exps, coeff in F.monomials.items():
        term = np.full(grid.shape[0], coeff, dtype=np.int64)
        for i, e in enumerate(exps):
            if e:
                key = (i, e)
                if key not in powers:
                    powers[key] = grid[:, i] ** e
                term = term * powers[key]
        acc += term
    return np.mod(acc, q)


def _exp_sum_raw(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    P: Fraction,
    r: int,
    q: int,
    budget: int = DEFAULT_ENUM_BUDGET,
    force_general: bool = False,
) -> complex:
    """The sum over residues, without the coprimality precondition.

    Diagonal forms factor into one-dimensional residue sums, which is what
    makes desk-scale Waring runs affordable; the general path enumerates the
    full residue grid.
    """
    if q < 1:
        raise ConfigError("q must be >= 1")
    s = F.s
    pins = _pin_products(t, box, P)
    kinds = {i: 1 for i in t.i1}
    kinds.update({i: 2 for i in t.i2})
    table = _phase_table(q)

    if F.is_diagonal() and not force_general:
        coeffs = F.diagonal_coefficients()
        factors: dict[tuple, complex] = {}
        result = 1.0 + 0.0j
        for i in range(s):
            c = coeffs[i] % q
            key = (c, kinds.get(i), t.tau[i], pins.get(i))
            if key not in factors:
                idx = [(r * c * pow(z, F.d, q)) % q for z in range(q)]
                if i in kinds:
                    w = _weight_table(kinds[i], t.tau[i], pins[i], q)
                    factors[key] = _fsum_complex(
                        float(w[z]) * table[idx[z]] for z in range(q)
                    )
                else:
                    factors[key] = _fsum_complex(table[j] for j in idx)
            result *= factors[key]
        return result

    if q**s > budget:
        raise BudgetExceededError(f"residue enumeration q^s = {q}^{s} exceeds budget {budget}")
    weight_tables = {
        i: [float(w) for w in _weight_table(kinds[i], t.tau[i], pins[i], q)] for i in kinds
    }
    if q**s <= _NUMPY_CROSSOVER:
        terms = []
        for z in np.ndindex(*([q] * s)):
            idx = (r * F.evaluate_integer(z)) % q
            w = 1.0
            for i, wt in weight_tables.items():
                w *= wt[z[i]]
            terms.append(w * table[idx])
        return _fsum_complex(terms)
    grid = _int_grid(q, s, budget)
    idx = np.mod(r * _form_mod_grid(F, grid, q), q)
    vals = table[idx]
    for i, wt in weight_tables.items():
        vals = vals * np.asarray(wt)[grid[:, i]]
    return complex(np.sum(vals))


def exp_sum(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    P: Union[Fraction, int, str],
    r: int,
    q: int,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> complex:
    """The generalized exponential sum S_(I1,I2,tau)(P; r, q) for coprime r, q."""
    P = _validate(F, t, box, P)
    if not 1 <= r <= q:
        raise ConfigError("need 1 <= r <= q")
    if gcd(r, q) != 1:
        raise ConfigError(f"r and q must be coprime, got gcd({r},{q}) = {gcd(r, q)}")
    return _exp_sum_raw(F, t, box, P, r, q, budget)


def series_block(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    P: Union[Fraction, int, str],
    n: int,
    q: int,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> complex:
    """The single-q block q^(-|I3|+|tau|) sum_{(r,q)=1} S(P;r,q) e(-rn/q)."""
    P = _validate(F, t, box, P)
    table = _phase_table(q)
    terms = []
    for r in range(1, q + 1):
        if gcd(r, q) != 1:
            continue
        S = _exp_sum_raw(F, t, box, P, r, q, budget)
        terms.append(S * table[(-r * n) % q])
    scale = float(q) ** (-len(t.i3) + t.tau_weight)
    return scale * _fsum_complex(terms)


def truncated_singular_series(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    P: Union[Fraction, int, str],
    n: int,
    Q: int,
    budget: int = DEFAULT_ENUM_BUDGET,
    block_tol: float = 1e-8,
) -> SeriesValue:
    """Accumulate the singular series over q <= Q in canonical (q, r) order."""
    if Q < 1:
        raise ConfigError("series truncation Q must be >= 1")
    blocks = [series_block(F, t, box, P, n, q, budget) for q in range(1, Q + 1)]
    value = _fsum_complex(blocks)
    scale = max(1.0, abs(value))
    imag_residual = abs(value.imag)
    tail = abs(blocks[-1])
    converged = (
        len(blocks) >= 3
        and all(abs(b) <= block_tol * scale for b in blocks[-3:])
        and imag_residual <= 1e-8 * scale
    )
    return SeriesValue(
        value=value,
        imag_residual=imag_residual,
        Q=Q,
        term_tail_estimate=tail,
        converged=converged,
    )


def series_over_divisors(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    P: Union[Fraction, int, str],
    n: int,
    M: int,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> complex:
    """The divisor-restricted series sum_{q | M} of q-blocks (left side of the
    congruence interpretation)."""
    return _fsum_complex(
        series_block(F, t, box, P, n, q, budget) for q in range(1, M + 1) if M % q == 0
    )


def _rho_prefactor(t: IndexTuple) -> Fraction:
    rho = Fraction((-1) ** len(t.i2))
    for i in (*t.i1, *t.i2):
        rho *= Fraction((-1) ** (t.tau[i] + 1), factorial(t.tau[i] + 1))
    return rho


def congruence_weighted_count(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    P: Union[Fraction, int, str],
    n: int,
    M: int,
    budget: int = 10**9,
) -> float:
    """Bernoulli-weighted count of solutions of F(z) = n mod M.

    Equals the divisor-restricted series exactly; exposed separately so the
    identity can be checked from two independent directions.
    """
    P = _validate(F, t, box, P)
    if M < 1:
        raise ConfigError("modulus M must be >= 1")
    s = F.s
    if M**s > budget:
        raise BudgetExceededError(f"congruence enumeration M^s = {M}^{s} exceeds budget {budget}")
    pins = _pin_products(t, box, P)
    kinds = {i: 1 for i in t.i1}
    kinds.update({i: 2 for i in t.i2})
    rho = _rho_prefactor(t)
    exponent = -len(t.i3) + t.tau_weight + 1
    # The count is an exact rational; stay in Fractions when the grid is small.
    beta_tables = {
        i: [
            periodic_bernoulli(t.tau[i] + 1, Fraction(pins[i] - z, M)) for z in range(M)
        ]
        for i in kinds
    }
    if M**s <= 65536:
        total = Fraction(0)
        for z in np.ndindex(*([M] * s)):
            if (F.evaluate_integer(z) - n) % M != 0:
                continue
            w = rho
            for i in kinds:
                w *= beta_tables[i][z[i]]
            total += w
        return float(total * Fraction(M) ** exponent)
    grid = _int_grid(M, s, budget)
    mask = _form_mod_grid(F, grid, M) == (n % M)
    vals = np.full(grid.shape[0], float(rho))
    for i in kinds:
        vals = vals * np.asarray([float(x) for x in beta_tables[i]])[grid[:, i]]
    return float(M) ** exponent * float(np.sum(vals[mask]))


def r_count(
    F: HomogeneousForm, i0: int, z0: int, M: int, n: int, budget: int = 10**9
) -> int:
    """Exhaustive count of z (all coordinates but i0) with F(z, z_i0 = z0) = n mod M."""
    if not 0 <= i0 < F.s:
        raise ConfigError(f"coordinate index {i0} out of range")
    if M < 1:
        raise ConfigError("modulus M must be >= 1")
    free = [i for i in range(F.s) if i != i0]
    if M ** len(free) > budget:
        raise BudgetExceededError(f"r_count enumeration M^{len(free)} exceeds budget {budget}")
    count = 0
    for z in np.ndindex(*([M] * len(free))):
        point = [0] * F.s
        point[i0] = z0 % M
        for i, v in zip(free, z):
            point[i] = v
        if (F.evaluate_integer(point) - n) % M == 0:
            count += 1
    return count


def lifted_exp_sum_check(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    P: Union[Fraction, int, str],
    r: int,
    q: int,
    m: int,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> tuple[complex, complex]:
    """Both sides of the denominator-lifting identity: S at (m r, m q) should
    equal m^(|I3|-|tau|) S at (r, q)."""
    P = _validate(F, t, box, P)
    if gcd(r, q) != 1:
        raise ConfigError("r and q must be coprime")
    if m < 1:
        raise ConfigError("lift factor m must be >= 1")
    lifted = _exp_sum_raw(F, t, box, P, m * r, m * q, budget)
    scaled = float(m) ** (len(t.i3) - t.tau_weight) * _exp_sum_raw(F, t, box, P, r, q, budget)
    return lifted, scaled


# -- Waring specialization ----------------------------------------------------


def waring_S(q: int, a: int, d: int) -> complex:
    """S(q, a) = sum_{r=1}^q e(a r^d / q)."""
    if q < 1:
        raise ConfigError("q must be >= 1")
    table = _phase_table(q)
    return _fsum_complex(table[(a * pow(r, d, q)) % q] for r in range(1, q + 1))


def waring_T(q: int, a: int, d: int) -> complex:
    """T(q, a) = sum_{r=1}^q (1/2 - r/q) e(a r^d / q); identically -1/2 for even d."""
    if q < 1:
        raise ConfigError("q must be >= 1")
    table = _phase_table(q)
    return _fsum_complex(
        (0.5 - r / q) * table[(a * pow(r, d, q)) % q] for r in range(1, q + 1)
    )


def waring_series_block(s: int, j: int, n: int, d: int, q: int) -> complex:
    """One q-block of the diagonal-form series: sum over (a,q)=1 of
    (S(q,a)/q)^(s-j) T(q,a)^j e(-na/q)."""
    table = _phase_table(q)
    terms = []
    for a in range(1, q + 1):
        if gcd(a, q) != 1:
            continue
        Sv = waring_S(q, a, d) / q
        Tv = waring_T(q, a, d)
        terms.append(Sv ** (s - j) * Tv**j * table[(-a * n) % q])
    return _fsum_complex(terms)


def waring_sigma_series(s: int, j: int, n: int, d: int, Q: int) -> SeriesValue:
    """Truncated diagonal-form singular series, same diagnostics as the general one."""
    if not 0 <= j <= s:
        raise ConfigError("need 0 <= j <= s")
    if Q < 1:
        raise ConfigError("series truncation Q must be >= 1")
    blocks = [waring_series_block(s, j, n, d, q) for q in range(1, Q + 1)]
    value = _fsum_complex(blocks)
    scale = max(1.0, abs(value))
    converged = (
        len(blocks) >= 3
        and all(abs(b) <= 1e-8 * scale for b in blocks[-3:])
        and abs(value.imag) <= 1e-8 * scale
    )
    return SeriesValue(
        value=value,
        imag_residual=abs(value.imag),
        Q=Q,
        term_tail_estimate=abs(blocks[-1]),
        converged=converged,
    )


def waring_C(s: int, j: int, n: int, d: int, Q: int) -> float:
    """Coefficient of the j-th lower-order term for the diagonal form:
    C(s,j) * Gamma(1+1/d)^(s-j) / Gamma((s-j)/d) * series."""
    series = waring_sigma_series(s, j, n, d, Q)
    return comb(s, j) * waring_gamma_closed_form(d, s - j) * series.value.real


# -- Moebius machinery ---------------------------------------------------------


def mobius_sieve(E: int) -> list[int]:
    """mu(0..E) by a standard sieve (mu[0] is set to 0 for convenience)."""
    if E < 1:
        raise ConfigError("sieve bound must be >= 1")
    mu = [1] * (E + 1)
    mu[0] = 0
    is_prime = [True] * (E + 1)
    for p in range(2, E + 1):
        if not is_prime[p]:
            continue
        for k in range(p, E + 1, p):
            if k > p:
                is_prime[k] = False
            mu[k] = -mu[k]
        p2 = p * p
        for k in range(p2, E + 1, p2):
            mu[k] = 0
    return mu


def mobius_modified_series(
    F: HomogeneousForm,
    t: IndexTuple,
    box: Box,
    P: Union[Fraction, int, str],
    Q: int,
    E: int,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> float:
    """Moebius-weighted combination (1/2) sum_{e<=E} mu(e) e^-(s-w-d) series(P/e, 0; Q).

    This is the P-dependent series entering the projective-count expansion; the
    exact choice E = floor(P) recovers the finite sum used by the counting
    identity.
    """
    P = _validate(F, t, box, P)
    mu = mobius_sieve(E)
    exponent = F.s - t.weight - F.d
    terms = []
    for e in range(1, E + 1):
        if mu[e] == 0:
            continue
        series = truncated_singular_series(F, t, box, P / e, 0, Q, budget)
        terms.append(mu[e] * float(e) ** (-exponent) * series.value.real)
    return 0.5 * fsum(terms)
