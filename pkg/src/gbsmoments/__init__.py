"""Exact second moments of Gaussian boson sampling output probabilities.

The core object is ``g(n, a)``, a polynomial in the number ``k`` of squeezed
modes obtained by a memoized recursion over moment graphs. Around it sit
closed-form coefficient checks, a brute-force and Monte Carlo oracle, and the
anticoncentration statistics built from ``M1`` and ``M2``.
"""

from .analysis import (
    SweepRecord,
    find_zero_crossing,
    ideal_xeb,
    log_inv_stat,
    m2,
    symmetric_difference,
    transition_sweep,
)
from .closed_forms import (
    MomentBounds,
    c_1,
    c_2n,
    c_2n_minus_1,
    c_2n_minus_1_sum,
    c_2n_sum,
    double_factorial,
    first_moment,
    first_moment_exact,
    moment_bounds,
    second_moment_k1,
)
from .edges import EdgeVector, InvalidEdgeVector, derived_counts, enumerate_valid, graph_count, is_valid
from .poly import IntPolynomial, poly_add, poly_eval_exact, poly_eval_log, poly_mul, poly_scale
from .recursion import MemoTable, base_case, g, load_memo, save_memo, second_moment_polynomial

__all__ = [
    "EdgeVector",
    "IntPolynomial",
    "InvalidEdgeVector",
    "MemoTable",
    "MomentBounds",
    "SweepRecord",
    "base_case",
    "c_1",
    "c_2n",
    "c_2n_minus_1",
    "c_2n_minus_1_sum",
    "c_2n_sum",
    "derived_counts",
    "double_factorial",
    "enumerate_valid",
    "find_zero_crossing",
    "first_moment",
    "first_moment_exact",
    "g",
    "graph_count",
    "ideal_xeb",
    "is_valid",
    "load_memo",
    "log_inv_stat",
    "m2",
    "moment_bounds",
    "poly_add",
    "poly_eval_exact",
    "poly_eval_log",
    "poly_mul",
    "poly_scale",
    "save_memo",
    "second_moment_polynomial",
    "second_moment_k1",
    "symmetric_difference",
    "transition_sweep",
]
