"""Edge vectors: cross-row red-edge counts that classify generalized moment graphs.

Rows are labelled 1, 2, 3 (the O, P and Q rows). A graph of order ``n`` has
``2n`` vertices per row and one red edge per vertex; ``a12``, ``a13`` and
``a23`` count the red edges joining two different rows.
"""

from __future__ import annotations

from math import comb, factorial
from typing import NamedTuple

from .combinat import double_factorial

__all__ = [
    "EdgeVector",
    "InvalidEdgeVector",
    "is_valid",
    "check_valid",
    "enumerate_valid",
    "derived_counts",
    "graph_count",
]


class InvalidEdgeVector(ValueError):
    pass


class EdgeVector(NamedTuple):
    a12: int
    a13: int
    a23: int

    def mirrored(self) -> EdgeVector:
        """Relabel rows 1 <-> 3."""
        return EdgeVector(self.a23, self.a13, self.a12)

    def __str__(self) -> str:
        return f"({self.a12},{self.a13},{self.a23})"


def is_valid(a: tuple[int, int, int], n: int) -> bool:
    a12, a13, a23 = a
    if min(a12, a13, a23) < 0 or n < 0:
        return False
    for s in (a12 + a13, a12 + a23, a13 + a23):
        if s % 2 or s > 2 * n:
            return False
    return True


def check_valid(a: tuple[int, int, int], n: int) -> EdgeVector:
    """Return ``a`` as an :class:`EdgeVector` or raise with the violated constraint."""
    if n < 1:
        raise InvalidEdgeVector(f"order must be >= 1, got n={n}")
    a = EdgeVector(*a)
    if min(a) < 0:
        raise InvalidEdgeVector(f"{a}: entries must be nonnegative")
    for (name, s) in (("a12+a13", a.a12 + a.a13), ("a12+a23", a.a12 + a.a23), ("a13+a23", a.a13 + a.a23)):
        if s % 2:
            raise InvalidEdgeVector(f"{a}: {name}={s} must be even (parity of row degree)")
        if s > 2 * n:
            raise InvalidEdgeVector(f"{a}: {name}={s} exceeds 2n={2 * n}")
    return a


def enumerate_valid(n: int) -> list[EdgeVector]:
    """All valid edge vectors of order ``n`` (every permutation listed), sorted."""
    if n < 1:
        raise InvalidEdgeVector(f"order must be >= 1, got n={n}")
    out = []
    for a12 in range(2 * n + 1):
        for a13 in range(a12 % 2, 2 * n - a12 + 1, 2):
            for a23 in range(a12 % 2, 2 * n - max(a12, a13) + 1, 2):
                out.append(EdgeVector(a12, a13, a23))
    return out


def derived_counts(a: tuple[int, int, int], n: int) -> tuple[int, int, int]:
    """Same-row red-edge counts ``(a11, a22, a33)``."""
    a12, a13, a23 = check_valid(a, n)
    return (
        (2 * n - a12 - a13) // 2,
        (2 * n - a12 - a23) // 2,
        (2 * n - a13 - a23) // 2,
    )


def graph_count(n: int, a: tuple[int, int, int]) -> int:
    """Number of graphs of order ``n`` in class ``a`` (red matchings times 4**n black patterns)."""
    a12, a13, a23 = check_valid(a, n)
    m = 2 * n
    rows = (
        comb(m, a12) * comb(m - a12, a13)
        * comb(m, a12) * comb(m - a12, a23)
        * comb(m, a13) * comb(m - a13, a23)
    )
    crossings = factorial(a12) * factorial(a13) * factorial(a23)
    inner = (
        double_factorial(m - a12 - a13 - 1)
        * double_factorial(m - a12 - a23 - 1)
        * double_factorial(m - a13 - a23 - 1)
    )
    return rows * crossings * inner * 4**n

