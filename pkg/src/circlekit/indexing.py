"""Index tuples labelling expansion terms, the face selector and boxes.

An expansion term is labelled by (I1, I2, tau): I1 picks coordinates pinned to
the upper box face, I2 coordinates pinned to the lower face, and tau counts
extra derivatives per pinned coordinate.  Variable indices are 0-based
throughout the Python API.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .errors import ConfigError

__all__ = ["IndexTuple", "Box", "enumerate_index_set", "sigma_select", "dual_tuple"]


@dataclass(frozen=True)
class IndexTuple:
    """One label (I1, I2, tau); I1 and I2 are disjoint sorted index tuples."""

    i1: tuple[int, ...]
    i2: tuple[int, ...]
    tau: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "i1", tuple(sorted(self.i1)))
        object.__setattr__(self, "i2", tuple(sorted(self.i2)))
        object.__setattr__(self, "tau", tuple(int(t) for t in self.tau))
        if set(self.i1) & set(self.i2):
            raise ConfigError(f"I1 and I2 overlap: {self.i1} vs {self.i2}")
        pinned = set(self.i1) | set(self.i2)
        for i, t in enumerate(self.tau):
            if t < 0:
                raise ConfigError("tau entries must be non-negative")
            if t > 0 and i not in pinned:
                raise ConfigError(f"tau_{i} > 0 but {i} is not in I1 or I2")
        if any(i < 0 or i >= len(self.tau) for i in pinned):
            raise ConfigError("pinned index out of range for tau length")

    @property
    def s(self) -> int:
        return len(self.tau)

    @property
    def i3(self) -> tuple[int, ...]:
        pinned = set(self.i1) | set(self.i2)
        return tuple(i for i in range(self.s) if i not in pinned)

    @property
    def tau_weight(self) -> int:
        return sum(self.tau)

    @property
    def weight(self) -> int:
        return len(self.i1) + len(self.i2) + self.tau_weight

    def render(self) -> str:
        """Stable string form used in CSV output: "I1={...};I2={...};tau=(...)"."""
        fmt = lambda idx: "{" + ",".join(str(i) for i in idx) + "}"
        return f"I1={fmt(self.i1)};I2={fmt(self.i2)};tau=({','.join(str(t) for t in self.tau)})"

    def sort_key(self) -> tuple:
        return (self.weight, self.i1, self.i2, self.tau)

    def key(self) -> tuple:
        return (self.i1, self.i2, self.tau)

    @staticmethod
    def trivial(s: int) -> "IndexTuple":
        return IndexTuple((), (), (0,) * s)


@dataclass(frozen=True)
class Box:
    """Half-open box prod_i (a_i, b_i] with exact rational corners."""

    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(Fraction(x) for x in self.a))
        object.__setattr__(self, "b", tuple(Fraction(x) for x in self.b))
        if len(self.a) != len(self.b):
            raise ConfigError("box corner vectors have different lengths")
        for i, (lo, hi) in enumerate(zip(self.a, self.b)):
            if not lo < hi:
                raise ConfigError(f"box needs a_{i} < b_{i}, got {lo} >= {hi}")

    @property
    def s(self) -> int:
        return len(self.a)

    def a_float(self) -> list[float]:
        return [float(x) for x in self.a]

    def b_float(self) -> list[float]:
        return [float(x) for x in self.b]

    def volume(self) -> Fraction:
        vol = Fraction(1)
        for lo, hi in zip(self.a, self.b):
            vol *= hi - lo
        return vol

    def key(self) -> tuple:
        return (self.a, self.b)

    @staticmethod
    def unit(s: int) -> "Box":
        """The box (0, 1]^s."""
        return Box((Fraction(0),) * s, (Fraction(1),) * s)

    @staticmethod
    def symmetric(s: int) -> "Box":
        """The box (-1, 1]^s used for projective counting."""
        return Box((Fraction(-1),) * s, (Fraction(1),) * s)


def enumerate_index_set(s: int, K: int) -> list[IndexTuple]:
    """All tuples of weight |I1| + |I2| + |tau| < K, sorted (weight, lexicographic)."""
    if s < 1 or K < 1:
        raise ConfigError("enumerate_index_set needs s >= 1 and K >= 1")
    out: list[IndexTuple] = []
    indices = range(s)
    for n1 in range(min(s, K - 1) + 1):
        for i1 in itertools.combinations(indices, n1):
            rest = [i for i in indices if i not in i1]
            for n2 in range(min(len(rest), K - 1 - n1) + 1):
                for i2 in itertools.combinations(rest, n2):
                    pinned = sorted(i1 + i2)
                    slack = K - 1 - n1 - n2
                    for extra in _bounded_compositions(len(pinned), slack):
                        tau = [0] * s
                        for idx, t in zip(pinned, extra):
                            tau[idx] = t
                        out.append(IndexTuple(i1, i2, tuple(tau)))
    out.sort(key=IndexTuple.sort_key)
    return out


def _bounded_compositions(parts: int, limit: int):
    """All non-negative integer vectors of length ``parts`` with sum <= limit."""
    if parts == 0:
        yield ()
        return
    for head in range(limit + 1):
        for tail in _bounded_compositions(parts - 1, limit - head):
            yield (head,) + tail


def sigma_select(
    x: Sequence[Union[float, Fraction]], box: Box, t: IndexTuple
) -> list[Union[float, Fraction]]:
    """Pin coordinates in I1 to b_i and in I2 to a_i, pass the rest through."""
    if len(x) != box.s:
        raise ConfigError(f"point has {len(x)} coordinates, box has {box.s}")
    out = list(x)
    for i in t.i1:
        out[i] = box.b[i]
    for i in t.i2:
        out[i] = box.a[i]
    return out


def dual_tuple(t: IndexTuple) -> IndexTuple:
    """Swap the roles of I1 and I2, keeping tau."""
    return IndexTuple(t.i2, t.i1, t.tau)
