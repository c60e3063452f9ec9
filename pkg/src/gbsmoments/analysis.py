"""Anticoncentration statistics on top of the exact second-moment polynomials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .closed_forms import log_first_moment
from .combinat import double_factorial
from .poly import IntPolynomial, poly_eval_log
from .recursion import MemoTable

__all__ = [
    "MissingMemoEntry",
    "SweepRecord",
    "log_second_moment",
    "m2",
    "ideal_xeb",
    "log_inv_stat",
    "symmetric_difference",
    "transition_delta",
    "bisect_root",
    "transition_sweep",
    "find_zero_crossing",
]


class MissingMemoEntry(LookupError):
    pass


def _same_row(memo: MemoTable, n: int) -> IntPolynomial:
    p = memo.get(n, (0, 0, 0))
    if p is None:
        raise MissingMemoEntry(f"memo has no entry for g({n}, (0,0,0)); compute it first")
    return p


def log_second_moment(k: float, n: int, memo: MemoTable) -> float:
    return math.log(double_factorial(2 * n - 1)) + poly_eval_log(_same_row(memo, n), k)


def m2(k: float, n: int, memo: MemoTable) -> float:
    """Normalized second moment ``M1**2 / M2``, evaluated in the log domain."""
    return math.exp(2 * log_first_moment(k, n) - log_second_moment(k, n, memo))


def ideal_xeb(k: float, n: int, memo: MemoTable) -> float:
    """Expected ideal linear cross-entropy score ``M2 / M1**2 - 1``."""
    return math.expm1(log_second_moment(k, n, memo) - 2 * log_first_moment(k, n))


def log_inv_stat(k: float, n: int, memo: MemoTable) -> float:
    """``log(1 / (m2 * sqrt(pi n)))``; tends to zero in the weakly anticoncentrated regime."""
    return log_second_moment(k, n, memo) - 2 * log_first_moment(k, n) - 0.5 * math.log(math.pi * n)


def symmetric_difference(values: Sequence[float]) -> list[float]:
    """``(f[i+1] - f[i-1]) / 2`` for interior indices; output is two shorter than the input."""
    if len(values) < 3:
        raise ValueError(f"need at least 3 consecutive values, got {len(values)}")
    return [(values[i + 1] - values[i - 1]) / 2 for i in range(1, len(values) - 1)]


@dataclass(frozen=True)
class SweepRecord:
    n: int
    a_exponent: float
    k: float
    log_inv: float
    delta: float | None


def transition_sweep(a_list: Sequence[float], n_max: int, memo: MemoTable) -> list[SweepRecord]:
    """Records for ``k = n**a`` over ``n = 1..n_max``, ordered by ``a`` then ``n``."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    for n in range(1, n_max + 1):
        _same_row(memo, n)
    out = []
    for a in a_list:
        ks = [float(n) ** a for n in range(1, n_max + 1)]
        stats = [log_inv_stat(k, n, memo) for n, k in zip(range(1, n_max + 1), ks)]
        deltas = [None] + symmetric_difference(stats) + [None] if n_max >= 3 else [None] * n_max
        for n in range(1, n_max + 1):
            out.append(SweepRecord(n, a, ks[n - 1], stats[n - 1], deltas[n - 1]))
    return out


def transition_delta(a: float, n: int, memo: MemoTable) -> float:
    """Symmetric difference in ``n`` of ``log_inv_stat(n**a, n)``."""
    return (log_inv_stat(float(n + 1) ** a, n + 1, memo) - log_inv_stat(float(n - 1) ** a, n - 1, memo)) / 2


def bisect_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-4) -> float:
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}")
    while hi - lo >= tol:
        mid = (lo + hi) / 2
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return (lo + hi) / 2


def find_zero_crossing(n_eval: int, a_lo: float, a_hi: float, memo: MemoTable, tol: float = 1e-4) -> float:
    """Exponent ``a`` where the transition delta at ``n_eval`` changes sign."""
    if n_eval < 2:
        raise ValueError(f"n_eval must be >= 2, got {n_eval}")
    return bisect_root(lambda a: transition_delta(a, n_eval, memo), a_lo, a_hi, tol)
