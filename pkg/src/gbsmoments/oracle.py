"""Independent ground truth: brute-force moment graphs and Monte Carlo hafnians."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .edges import EdgeVector
from .poly import IntPolynomial

__all__ = [
    "MomentGraph",
    "McEstimate",
    "black_edges",
    "graph_from_permutations",
    "vertex",
    "connected_components",
    "perfect_matchings",
    "enumerate_classes",
    "enumerate_same_row",
    "naive_hafnian",
    "permanent",
    "batched_hafnian",
    "mc_moment",
]

# Black-edge patterns on one column pair, as (row, column offset) endpoints.
# Rows 0, 1, 2 are O, P, Q.
_PATTERNS = {
    1: (((0, 0), (0, 1)), ((1, 0), (2, 0)), ((1, 1), (2, 1))),
    2: (((0, 0), (2, 1)), ((1, 0), (2, 0)), ((0, 1), (1, 1))),
    3: (((0, 1), (2, 0)), ((1, 0), (0, 0)), ((1, 1), (2, 1))),
    4: (((0, 0), (1, 0)), ((0, 1), (1, 1)), ((2, 0), (2, 1))),
}


def vertex(n: int, row: int, col: int) -> int:
    """Index of the vertex in ``row`` (0=O, 1=P, 2=Q) and column ``col`` (0-based)."""
    return row * 2 * n + col


@dataclass(frozen=True)
class MomentGraph:
    n: int
    z: tuple[int, ...]
    red_matching: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.z) != self.n or any(t not in _PATTERNS for t in self.z):
            raise ValueError(f"z must hold {self.n} black types in 1..4, got {self.z}")
        seen = sorted(v for e in self.red_matching for v in e)
        if seen != list(range(6 * self.n)):
            raise ValueError("red edges must form a perfect matching on the 6n vertices")

    def edge_vector(self) -> EdgeVector:
        counts = [0, 0, 0]
        for u, v in self.red_matching:
            ru, rv = sorted((u // (2 * self.n), v // (2 * self.n)))
            if ru != rv:
                counts[{(0, 1): 0, (0, 2): 1, (1, 2): 2}[(ru, rv)]] += 1
        return EdgeVector(*counts)


def graph_from_permutations(tau, alpha, beta, z) -> MomentGraph:
    """Graph induced by three permutations of ``1..2n`` (one per row) and black types ``z``.

    Columns ``l`` and ``l'`` of a row share a red edge when the row's permutation
    sends them to the same pair ``{2i-1, 2i}``.
    """
    n = len(z)
    red = []
    for row, perm in enumerate((tau, alpha, beta)):
        if sorted(perm) != list(range(1, 2 * n + 1)):
            raise ValueError(f"expected a permutation of 1..{2 * n}, got {perm}")
        slots: dict[int, list[int]] = defaultdict(list)
        for col, image in enumerate(perm):
            slots[(image + 1) // 2].append(vertex(n, row, col))
        red.extend(tuple(pair) for _, pair in sorted(slots.items()))
    return MomentGraph(n, tuple(z), tuple(red))


def black_edges(n: int, z: tuple[int, ...]) -> list[tuple[int, int]]:
    out = []
    for j, t in enumerate(z):
        for (r1, c1), (r2, c2) in _PATTERNS[t]:
            out.append((vertex(n, r1, 2 * j + c1), vertex(n, r2, 2 * j + c2)))
    return out


def _partner(edges, size: int) -> list[int]:
    p = [-1] * size
    for u, v in edges:
        p[u], p[v] = v, u
    return p


def _count_cycles(black: list[int], red: list[int]) -> int:
    seen = bytearray(len(black))
    count = 0
    for start in range(len(black)):
        if seen[start]:
            continue
        count += 1
        v = start
        while not seen[v]:
            seen[v] = 1
            w = black[v]
            seen[w] = 1
            v = red[w]
    return count


def connected_components(graph: MomentGraph) -> int:
    """Components of the black+red union; every vertex has one edge of each colour, so they are cycles."""
    size = 6 * graph.n
    return _count_cycles(_partner(black_edges(graph.n, graph.z), size), _partner(graph.red_matching, size))


def perfect_matchings(vertices: tuple[int, ...]):
    """All perfect matchings, always pairing the lowest remaining vertex first."""
    if not vertices:
        yield ()
        return
    first, rest = vertices[0], vertices[1:]
    for i, other in enumerate(rest):
        for m in perfect_matchings(rest[:i] + rest[i + 1 :]):
            yield ((first, other),) + m


def _accumulate(n: int, red_partners, classify) -> dict:
    out: dict = defaultdict(lambda: defaultdict(int))
    blacks = [_partner(black_edges(n, z), 6 * n) for z in product((1, 2, 3, 4), repeat=n)]
    for red in red_partners:
        key = classify(red)
        bucket = out[key]
        for black in blacks:
            bucket[_count_cycles(black, red)] += 1
    return out


def _to_poly(hist: dict[int, int]) -> IntPolynomial:
    coeffs = [0] * (max(hist) + 1)
    for c, m in hist.items():
        coeffs[c] = m
    return IntPolynomial(tuple(coeffs))


def enumerate_classes(n: int) -> dict[EdgeVector, IntPolynomial]:
    """``g(n, a)`` for every class by exhaustive enumeration of red matchings and black patterns."""
    if not 1 <= n <= 2:
        raise ValueError(f"exhaustive class enumeration supports n in 1..2, got {n}")
    size = 6 * n
    rows = [v // (2 * n) for v in range(size)]

    def classify(red):
        c = [0, 0, 0]
        for u in range(size):
            v = red[u]
            if u < v and rows[u] != rows[v]:
                c[rows[u] + rows[v] - 1] += 1
        return EdgeVector(*c)

    reds = (_partner(m, size) for m in perfect_matchings(tuple(range(size))))
    hist = _accumulate(n, reds, classify)
    return {a: _to_poly(h) for a, h in sorted(hist.items())}


def enumerate_same_row(n: int, max_n: int = 3) -> IntPolynomial:
    """``g(n, (0,0,0))`` by enumerating per-row matchings independently."""
    if not 1 <= n <= max_n:
        raise ValueError(f"same-row enumeration configured for n in 1..{max_n}, got {n}")
    size = 6 * n
    row_ms = [list(perfect_matchings(tuple(vertex(n, r, c) for c in range(2 * n)))) for r in range(3)]
    reds = (_partner(mo + mp + mq, size) for mo in row_ms[0] for mp in row_ms[1] for mq in row_ms[2])
    hist = _accumulate(n, reds, lambda red: None)
    return _to_poly(hist[None])


# ---------------------------------------------------------------------------
# Hafnians


def naive_hafnian(A) -> complex:
    """Hafnian by expansion along the first row; exponential time, small matrices only."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"hafnian needs a square matrix, got shape {A.shape}")
    if A.shape[0] % 2:
        raise ValueError(f"hafnian of an odd-dimensional ({A.shape[0]}) matrix is not supported")
    if A.shape[0] > 14:
        raise ValueError("naive hafnian limited to dimension <= 14")
    if A.size and np.max(np.abs(A - A.T)) >= 1e-12:
        raise ValueError("hafnian input must be symmetric")
    return _haf(A, tuple(range(A.shape[0])))


def _haf(A, idx: tuple[int, ...]) -> complex:
    if not idx:
        return 1.0 + 0j
    first, rest = idx[0], idx[1:]
    total = 0j
    for i, j in enumerate(rest):
        total += A[first, j] * _haf(A, rest[:i] + rest[i + 1 :])
    return total


def permanent(B) -> complex:
    """Permanent via Ryser's formula."""
    B = np.asarray(B, dtype=complex)
    m = B.shape[0]
    total = 0j
    for mask in range(1, 1 << m):
        cols = [j for j in range(m) if mask >> j & 1]
        total += (-1) ** len(cols) * np.prod(B[:, cols].sum(axis=1))
    return (-1) ** m * total


@lru_cache(maxsize=None)
def _matching_index(dim: int) -> tuple[np.ndarray, np.ndarray]:
    ms = np.array(list(perfect_matchings(tuple(range(dim)))), dtype=np.intp)
    return ms[:, :, 0], ms[:, :, 1]


def batched_hafnian(A: np.ndarray) -> np.ndarray:
    """Hafnians of a stack ``A[s]`` of symmetric ``2m x 2m`` matrices by summing over matchings."""
    batch, dim, _ = A.shape
    if dim == 0:
        return np.ones(batch, dtype=complex)
    rows, cols = _matching_index(dim)
    out = np.zeros(batch, dtype=complex)
    step = max(1, 4_000_000 // (batch * rows.shape[1]))
    for s in range(0, rows.shape[0], step):
        out += A[:, rows[s : s + step], cols[s : s + step]].prod(axis=2).sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int

    def z_score(self, exact: float) -> float:
        return (self.mean - exact) / self.stderr if self.stderr > 0 else math.inf


def _block_values(t: int, n: int, k: int, count: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    # unit-variance complex normal: E|x|^2 = 1
    X = (rng.standard_normal((count, k, 2 * n)) + 1j * rng.standard_normal((count, k, 2 * n))) / math.sqrt(2)
    A = np.einsum("sij,sil->sjl", X, X)
    return np.abs(batched_hafnian(A)) ** (2 * t)


def mc_moment(t: int, n: int, k: int, samples: int, seed: int, block_size: int = 10_000) -> McEstimate:
    """Estimate ``E|Haf(X^T X)|^(2t)`` over ``X`` with i.i.d. standard complex Gaussian entries.

    Samples are drawn in blocks of ``block_size`` from independent Philox streams
    spawned from ``seed``; the result is fixed by ``(seed, samples, block_size)``.
    """
    if t not in (1, 2):
        raise ValueError(f"t must be 1 or 2, got {t}")
    if not 1 <= n or 2 * n > 12:
        raise ValueError(f"need 1 <= n and 2n <= 12, got n={n}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    nblocks = -(-samples // block_size)
    children = np.random.SeedSequence(seed).spawn(nblocks)
    parts = []
    for b, child in enumerate(children):
        count = min(block_size, samples - b * block_size)
        parts.append(_block_values(t, n, k, count, child))
    values = np.concatenate(parts)
    return McEstimate(
        mean=float(values.mean()),
        stderr=float(values.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
        seed=seed,
    )
