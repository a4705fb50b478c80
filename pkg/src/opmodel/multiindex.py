"""Graded multi-index enumeration and the combinatorial weights behind all model spaces.

For a multi-index ``alpha`` in N^n the two weight families are

    gamma(alpha)      = |alpha|! / alpha!
    rho(level, alpha) = (level + |alpha| - 1)! / (alpha! * (level - 1)!)

with ``rho(1, alpha) == gamma(alpha)``.  Every coefficient block in the
package is indexed in graded-lexicographic order: indices are sorted by
total order ``|alpha|`` first and within a grade by descending
lexicographic comparison of the tuples, so ``(1, 0)`` precedes ``(0, 1)``.
All weights are computed as exact Python integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

MultiIndex = tuple[int, ...]

#: Largest total order served by :func:`gamma` and :func:`rho`.  Beyond this
#: the exact integers no longer convert to finite doubles, so requests are
#: rejected instead of silently degrading.
MAX_ORDER = 120


def order(alpha: MultiIndex) -> int:
    """Total order ``|alpha|`` of a multi-index."""
    _validate(alpha)
    return sum(alpha)


def _validate(alpha) -> None:
    if len(alpha) == 0:
        raise ValueError("multi-index must have at least one entry")
    for a in alpha:
        if int(a) != a or a < 0:
            raise ValueError(f"multi-index entries must be nonnegative integers, got {alpha!r}")


def _grade(n: int, total: int):
    """Yield all alpha in N^n with |alpha| == total, descending lexicographic."""
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _grade(n - 1, total - first):
            yield (first,) + rest


def graded_indices(n: int, max_degree: int) -> list[MultiIndex]:
    """All multi-indices with ``|alpha| <= max_degree`` in graded-lex order.

    The result has ``binom(n + max_degree, n)`` entries and the ordering is
    stable across runs.
    """
    if n < 1:
        raise ValueError(f"need at least one variable, got n={n}")
    if max_degree < 0:
        raise ValueError(f"truncation degree must be nonnegative, got {max_degree}")
    out: list[MultiIndex] = []
    for k in range(max_degree + 1):
        out.extend(_grade(n, k))
    return out


def gamma(alpha: MultiIndex) -> int:
    """The multinomial weight ``|alpha|! / alpha!``, exactly."""
    _validate(alpha)
    k = sum(alpha)
    if k > MAX_ORDER:
        raise ValueError(f"multi-index order {k} exceeds supported maximum {MAX_ORDER}")
    value = math.factorial(k)
    for a in alpha:
        value //= math.factorial(a)
    return value


def rho(level: int, alpha: MultiIndex) -> int:
    """The shift weight ``(level + |alpha| - 1)! / (alpha! (level - 1)!)``, exactly."""
    if level < 1:
        raise ValueError(f"weight level must be a positive integer, got {level}")
    _validate(alpha)
    k = sum(alpha)
    if k + level - 1 > MAX_ORDER:
        raise ValueError(f"multi-index order {k} at level {level} exceeds supported maximum {MAX_ORDER}")
    value = math.factorial(level + k - 1) // math.factorial(level - 1)
    for a in alpha:
        value //= math.factorial(a)
    return value


def rho_single(level: int, degree: int) -> int:
    """``rho`` of the one-variable index ``(degree,)``; the radial weight."""
    return rho(level, (degree,))


@dataclass(frozen=True)
class WeightTable:
    """Precomputed ``rho`` and ``gamma`` values for all ``|alpha| <= max_degree``.

    Weights are stored as exact integers; :attr:`rho_floats` offers the
    double view used in inner products.  Instances are immutable and safe to
    share between threads.
    """

    n: int
    level: int
    max_degree: int
    indices: tuple[MultiIndex, ...]
    position: dict[MultiIndex, int] = field(repr=False)
    rho_values: tuple[int, ...] = field(repr=False)
    gamma_values: tuple[int, ...] = field(repr=False)

    @classmethod
    def build(cls, n: int, level: int, max_degree: int) -> "WeightTable":
        if level < 1:
            raise ValueError(f"weight level must be a positive integer, got {level}")
        idx = tuple(graded_indices(n, max_degree))
        return cls(
            n=n,
            level=level,
            max_degree=max_degree,
            indices=idx,
            position={a: i for i, a in enumerate(idx)},
            rho_values=tuple(rho(level, a) for a in idx),
            gamma_values=tuple(gamma(a) for a in idx),
        )

    def rho_of(self, alpha: MultiIndex) -> int:
        return self.rho_values[self.position[alpha]]

    def gamma_of(self, alpha: MultiIndex) -> int:
        return self.gamma_values[self.position[alpha]]

    @property
    def rho_floats(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.rho_values)
