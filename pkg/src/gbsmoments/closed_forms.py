"""Closed-form moments, coefficient identities and bounds used to cross-check the recursion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .combinat import double_factorial

__all__ = [
    "double_factorial",
    "first_moment",
    "first_moment_exact",
    "log_first_moment",
    "second_moment_k1",
    "c_2n",
    "c_2n_sum",
    "c_2n_minus_1",
    "c_2n_minus_1_sum",
    "c_1",
    "MomentBounds",
    "moment_bounds",
]


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")


def first_moment_exact(k: int, n: int) -> int:
    """``M1(k, n)`` for integer ``k``: ``(2n-1)!! * k(k+2)...(k+2n-2)``."""
    _check_n(n)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    out = double_factorial(2 * n - 1)
    for j in range(n):
        out *= k + 2 * j
    return out


def log_first_moment(k: float, n: int) -> float:
    _check_n(n)
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    return math.log(double_factorial(2 * n - 1)) + math.fsum(math.log(k + 2 * j) for j in range(n))


def first_moment(k: float, n: int) -> float:
    """``M1(k, n)`` for real ``k > 0`` via the product form (may overflow to inf for huge n, k)."""
    if isinstance(k, int):
        return float(first_moment_exact(k, n))
    return math.exp(log_first_moment(k, n))


def second_moment_k1(n: int) -> int:
    """``M2(1, n) = ((2n-1)!!)**4 * 4**n``."""
    _check_n(n)
    return double_factorial(2 * n - 1) ** 4 * 4**n


def c_2n(n: int) -> int:
    _check_n(n)
    return double_factorial(2 * n)


def c_2n_sum(n: int) -> int:
    """Leading coefficient counted by the number ``p`` of type-1 blocks."""
    _check_n(n)
    df = double_factorial
    return sum(comb(n, p) * df(2 * p - 1) * df(2 * (n - p) - 1) for p in range(n + 1))


def c_2n_minus_1(n: int) -> int:
    _check_n(n)
    return double_factorial(2 * n) * (3 * n - 2) * n


def _term(coef: int, *double_args: int) -> int:
    # a zero combinatorial prefactor means the configuration is impossible;
    # its double factorials may then have arguments below -1
    if coef == 0:
        return 0
    for m in double_args:
        coef *= double_factorial(m)
    return coef


def c_2n_minus_1_sum(n: int) -> int:
    """Subleading coefficient as a sum over the nine ways of losing one component."""
    _check_n(n)
    total = 0
    for p in range(n + 1):
        q = n - p
        inner = (
            _term(2 * comb(p, 2), 2 * p - 1, 2 * q - 1)
            + _term(2 * comb(q, 2), 2 * p - 1, 2 * q - 1)
            + _term(2 * p * comb(2 * q, 2), 2 * p - 1, 2 * (q - 1) - 1)
            + _term(2 * q * comb(2 * p, 2), 2 * (p - 1) - 1, 2 * q - 1)
            + _term(6 * comb(2 * p, 4), 2 * (p - 2) - 1, 2 * q - 1)
            + _term(6 * comb(2 * q, 4), 2 * p - 1, 2 * (q - 2) - 1)
            + _term(2 * comb(2 * p, 2) * comb(2 * q, 2), 2 * (p - 1) - 1, 2 * (q - 1) - 1)
        )
        total += comb(n, p) * inner
    # one top-to-bottom black edge joined to a type-1 and a type-4 vertical edge
    for p in range(n):
        q = n - p - 1
        total += _term(2 * n * comb(n - 1, p) * (2 * p + 1) * (2 * q + 1), 2 * p - 1, 2 * q - 1)
    # two top-to-bottom black edges closed into one 4-cycle
    for p in range(n - 1):
        total += _term(4 * comb(n, 2) * comb(n - 2, p), 2 * p + 1, 2 * (n - p - 2) + 1)
    return total


def c_1(n: int) -> int:
    """Coefficient of ``k`` (single-component graphs) as an Eulerian-circuit triple sum."""
    _check_n(n)
    total = Fraction(0)
    for p1 in range(n + 1):
        for p4 in range(n - p1 + 1):
            e13 = n - p1 - p4
            for w in range(-e13, e13 + 1, 2):
                num = (
                    comb(n - p1 + p4, (n - p1 + p4 + w) // 2)
                    * comb(n + p1 - p4, (n + p1 - p4 + w) // 2)
                    * (w * w + 3 * n * n - (p1 - p4) ** 2 - 2 * n * (p1 + p4))
                )
                if num:
                    den = factorial(p1) * factorial(p4) * factorial((e13 - w) // 2) * factorial((e13 + w) // 2)
                    total += Fraction(num, den)
    total *= factorial(n) * factorial(n - 1) ** 3 * Fraction(2) ** (n - 3)
    if total.denominator != 1:
        raise ArithmeticError(f"c_1({n}) is not integral: {total}")
    return int(total)


@dataclass(frozen=True)
class MomentBounds:
    upper: int
    lower_leading: int
    lower_count: int

    def contains(self, value: int) -> bool:
        return self.lower_leading <= value <= self.upper and self.lower_count <= value


def moment_bounds(k: int, n: int) -> MomentBounds:
    """Integer bounds on ``M2(k, n)`` for integer ``k >= 1``."""
    _check_n(n)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    count = second_moment_k1(n)
    return MomentBounds(upper=count * k ** (2 * n), lower_leading=factorial(2 * n) * k ** (2 * n), lower_count=count)
