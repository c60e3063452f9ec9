"""Small exact combinatorial helpers shared across modules."""

from __future__ import annotations

from functools import lru_cache
from math import comb

__all__ = ["double_factorial", "falling", "comb0"]


@lru_cache(maxsize=4096)
def double_factorial(m: int) -> int:
    """``m!!`` with the empty-product convention ``(-1)!! = 0!! = 1``."""
    if m < -1:
        raise ValueError(f"double factorial undefined for m={m} < -1")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def falling(x: int, m: int) -> int:
    """Falling factorial ``x (x-1) ... (x-m+1)``; zero when ``x < m``."""
    if x < m:
        return 0
    out = 1
    for i in range(m):
        out *= x - i
    return out


def comb0(n: int, k: int) -> int:
    """Binomial coefficient that is zero outside ``0 <= k <= n``."""
    if n < 0 or k < 0 or k > n:
        return 0
    return comb(n, k)
