"""Panel Gauss-Legendre quadrature tuned for oscillatory integrands.

The driving rule everywhere: a panel layout is chosen from an a-priori
frequency estimate (points per oscillation cycle), then the whole integral is
re-evaluated at doubled density until two levels agree within tolerance.  The
difference of the last two levels is the reported error estimate.

Mandatory break points (integers for periodic Bernoulli weights) are honored
exactly: no panel ever straddles a break.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceededError, ConfigError, QuadratureError

__all__ = ["QuadratureSpec", "integrate_1d", "integrate_tensor", "panels_for"]

# Below this, level differences are float noise; refining further is pointless.
_FLOAT_FLOOR = 1e-13


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs governing all oscillatory integration.

    ``panels_per_unit_frequency`` is the target number of quadrature points per
    oscillation cycle for inner (x-space) integrals; ``gamma_panels`` plays the
    same role for the outer gamma integral of the singular integrals.
    """

    base_order: int = 12
    panels_per_unit_frequency: float = 4.0
    gamma_panels: int = 4
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    max_refinements: int = 6

    def __post_init__(self):
        if self.base_order < 2 or self.panels_per_unit_frequency <= 0 or self.gamma_panels <= 0:
            raise ConfigError("quadrature orders and densities must be positive")
        if self.max_refinements < 1:
            raise ConfigError("max_refinements must be >= 1")
        for tol in (self.abs_tol, self.rel_tol):
            if not 0 < tol <= 1e-2:
                raise ConfigError("tolerances must lie in (0, 1e-2]")

    def tolerance(self, value: complex) -> float:
        return self.abs_tol + self.rel_tol * abs(value)


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=None)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panels_for(length: float, freq: float, quad: QuadratureSpec, per_cycle: float | None = None) -> int:
    """Panel count for an interval of given length and frequency (cycles/unit)."""
    per_cycle = quad.panels_per_unit_frequency if per_cycle is None else per_cycle
    baseline = max(1, ceil(0.5 * length))
    oscillation = ceil(length * freq * per_cycle / quad.base_order)
    return max(baseline, oscillation)


def build_edges(a: float, b: float, n_panels: int, breaks: Sequence[float] = ()) -> np.ndarray:
    """Panel edges on [a, b]: mandatory breaks first, then uniform subdivision."""
    pts = sorted({a, b, *(x for x in breaks if a < x < b)})
    per_unit = n_panels / (b - a)
    edges = [a]
    for lo, hi in zip(pts, pts[1:]):
        k = max(1, ceil((hi - lo) * per_unit - 1e-12))
        edges.extend(np.linspace(lo, hi, k + 1)[1:])
    return np.asarray(edges)


def _nodes_weights(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _leggauss(order)
    lo = edges[:-1]
    half = 0.5 * (edges[1:] - lo)
    nodes = (lo[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _eval_1d(f: Callable[[np.ndarray], np.ndarray], edges: np.ndarray, order: int) -> complex:
    nodes, weights = _nodes_weights(edges, order)
    return complex(np.sum(f(nodes) * weights))


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
    freq: float = 0.0,
    breaks: Sequence[float] = (),
    point_budget: int = 4_000_000,
) -> tuple[complex, float]:
    """Integrate f on [a, b]; returns (value, error estimate).

    Raises QuadratureError when doubling the panel density max_refinements
    times never brings two successive levels within tolerance.
    """
    if not a < b:
        raise ConfigError("integration interval needs a < b")
    base = panels_for(b - a, freq, quad)
    prev = None
    for level in range(quad.max_refinements + 1):
        n_panels = base * 2**level
        if n_panels * quad.base_order > point_budget:
            raise BudgetExceededError(
                f"1-D quadrature would need {n_panels * quad.base_order} points"
            )
        value = _eval_1d(f, build_edges(a, b, n_panels, breaks), quad.base_order)
        if prev is not None:
            err = abs(value - prev)
            if err <= quad.tolerance(value) or err <= _FLOAT_FLOOR * max(1.0, abs(value)):
                return value, err
        prev = value
    raise QuadratureError(
        f"1-D panel refinement exhausted on [{a}, {b}]", prev, abs(value - prev)
    )


def _eval_tensor(
    f: Callable[[np.ndarray], np.ndarray],
    nodes: list[np.ndarray],
    weights: list[np.ndarray],
    chunk: int = 2_000_000,
) -> complex:
    """Tensor-product evaluation, chunked along the first dimension."""
    dims = len(nodes)
    trailing = 1
    for n in nodes[1:]:
        trailing *= n.size
    block = max(1, chunk // max(1, trailing))
    total = 0.0 + 0.0j
    n0 = nodes[0].size
    for start in range(0, n0, block):
        sub = [nodes[0][start : start + block]] + nodes[1:]
        mesh = np.meshgrid(*sub, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        wsub = [weights[0][start : start + block]] + weights[1:]
        wmesh = np.meshgrid(*wsub, indexing="ij")
        wflat = np.ones(pts.shape[0])
        for wm in wmesh:
            wflat = wflat * wm.ravel()
        total += complex(np.sum(f(pts) * wflat))
    return total


def integrate_tensor(
    f: Callable[[np.ndarray], np.ndarray],
    los: Sequence[float],
    his: Sequence[float],
    quad: QuadratureSpec = DEFAULT_QUAD,
    freqs: Sequence[float] | None = None,
    breaks: Sequence[Sequence[float]] | None = None,
    point_budget: int = 12_000_000,
) -> tuple[complex, float]:
    """Tensor-product panel quadrature over a box; returns (value, error estimate).

    ``f`` maps an (m, dims) float array to an (m,) complex array.  ``freqs``
    gives per-dimension oscillation estimates in cycles per unit length.
    """
    dims = len(los)
    if dims == 0:
        raise ConfigError("tensor quadrature needs at least one dimension")
    freqs = [0.0] * dims if freqs is None else list(freqs)
    breaks = [()] * dims if breaks is None else list(breaks)
    base = [panels_for(hi - lo, fr, quad) for lo, hi, fr in zip(los, his, freqs)]
    prev = None
    for level in range(quad.max_refinements + 1):
        nodes, weights, n_points = [], [], 1
        for i in range(dims):
            edges = build_edges(los[i], his[i], base[i] * 2**level, breaks[i])
            nd, wt = _nodes_weights(edges, quad.base_order)
            nodes.append(nd)
            weights.append(wt)
            n_points *= nd.size
        if n_points > point_budget:
            if prev is not None:
                raise QuadratureError(
                    f"tensor refinement hit the {point_budget}-point budget",
                    prev,
                    float("nan"),
                )
            raise BudgetExceededError(
                f"tensor quadrature would need {n_points} points (budget {point_budget})"
            )
        value = _eval_tensor(f, nodes, weights)
        if prev is not None:
            err = abs(value - prev)
            if err <= quad.tolerance(value) or err <= _FLOAT_FLOOR * max(1.0, abs(value)):
                return value, err
        prev = value
    raise QuadratureError("tensor panel refinement exhausted", prev, abs(value - prev))
