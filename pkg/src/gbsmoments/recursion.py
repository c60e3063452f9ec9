"""Memoized column-collapse recursion for ``g(n, a12, a13, a23)``.

``g(n, a)`` sums ``k**C(G)`` over every order-``n`` moment graph whose red
matching has cross-row counts ``a``. Collapsing the first two columns (the
block ``O1 O2 P1 P2 Q1 Q2``) expresses it through order ``n-1`` classes.

Instead of transcribing per-case tables by hand, every block configuration is
instantiated and traced: for each red pattern on the block (which vertices
protrude, how the rest pair up), each of the four black-edge types and each
assignment of rows to the protruding edges' far endpoints, we follow the paths
through the block. Closed paths give loop factors of ``k``; open paths become
created red edges in the smaller graph, which fixes the shift ``b - a`` and a
combinatorial weight (which lower-order edges were the created ones). Those
traces are aggregated once into templates; evaluation then only needs the
templates and the previous level.
"""

from __future__ import annotations

import logging
import os
import re
import tempfile
import threading
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from pathlib import Path
from typing import Iterator, Mapping

from .combinat import double_factorial, falling
from .edges import EdgeVector, check_valid
from .poly import IntPolynomial, pack, unpack

__all__ = [
    "BASE_CASES",
    "BLACK_EDGES",
    "BlockTrace",
    "CaseContribution",
    "CacheFormatError",
    "MemoTable",
    "base_case",
    "block_traces",
    "case_loop_polynomial",
    "endpoint_shifts",
    "contrib_cases_1_4",
    "contrib_cases_5_12",
    "contrib_cases_13_16",
    "contrib_case_17",
    "g",
    "required_keys",
    "second_moment_polynomial",
    "save_memo",
    "load_memo",
    "load_entry",
    "templates",
    "STATS",
]

log = logging.getLogger(__name__)

# Block vertices: 0=O1 1=O2 2=P1 3=P2 4=Q1 5=Q2; row index = v // 2 (0,1,2 for rows 1,2,3).
BLACK_EDGES: dict[int, tuple[tuple[int, int], ...]] = {
    1: ((0, 1), (2, 4), (3, 5)),
    2: ((0, 5), (2, 4), (1, 3)),
    3: ((1, 4), (0, 2), (3, 5)),
    4: ((0, 2), (1, 3), (4, 5)),
}

BASE_CASES: dict[EdgeVector, IntPolynomial] = {
    EdgeVector(0, 0, 0): IntPolynomial((0, 2, 2)),
    EdgeVector(2, 0, 0): IntPolynomial((0, 4, 3, 1)),
    EdgeVector(0, 0, 2): IntPolynomial((0, 4, 3, 1)),
    EdgeVector(0, 2, 0): IntPolynomial((0, 6, 2)),
    EdgeVector(1, 1, 1): IntPolynomial((0, 16, 14, 2)),
}

# Slot order for multiplicities of created edges: same-row types, then cross-row.
_SLOTS = {(0, 0): 0, (1, 1): 1, (2, 2): 2, (0, 1): 3, (0, 2): 4, (1, 2): 5}
# Index into (a12, a13, a23) for a pair of distinct rows.
_CROSS = {(0, 1): 0, (0, 2): 1, (1, 2): 2}


class CacheFormatError(ValueError):
    pass


@dataclass
class _Stats:
    keys_computed: int = 0


STATS = _Stats()


# ---------------------------------------------------------------------------
# Block tracing


@dataclass(frozen=True)
class BlockTrace:
    """One red pattern on the block combined with one black-edge type.

    ``paths`` are the open paths as (start, end) block vertices, both
    protruding; ``loops`` counts closed cycles inside the block.
    """

    case_id: str
    protruding: tuple[int, ...]
    internal: tuple[tuple[int, int], ...]
    black_type: int
    paths: tuple[tuple[int, int], ...]
    loops: int


def _matchings(vertices: tuple[int, ...]) -> Iterator[tuple[tuple[int, int], ...]]:
    if not vertices:
        yield ()
        return
    first, rest = vertices[0], vertices[1:]
    for i, other in enumerate(rest):
        remaining = rest[:i] + rest[i + 1 :]
        for m in _matchings(remaining):
            yield ((first, other),) + m


def _case_id(protruding: tuple[int, ...], internal: tuple[tuple[int, int], ...]) -> str:
    cross = [0, 0, 0]
    for u, v in internal:
        if u // 2 != v // 2:
            cross[_CROSS[(u // 2, v // 2)]] += 1
    rows = sorted(v // 2 for v in protruding)
    if not protruding:
        return {(0, 0, 0): "1", (2, 0, 0): "2", (0, 0, 2): "2s", (0, 2, 0): "3", (1, 1, 1): "4"}[tuple(cross)]
    same_rest = not any(cross)
    has_same_row = any(u // 2 == v // 2 for u, v in internal)
    if len(protruding) == 2:
        if rows == [0, 0]:
            return "5" if same_rest else "6"
        if rows == [2, 2]:
            return "5s" if same_rest else "6s"
        if rows == [1, 1]:
            return "7" if same_rest else "8"
        if rows == [0, 1]:
            return "9" if has_same_row else "10"
        if rows == [1, 2]:
            return "9s" if has_same_row else "10s"
        return "11" if has_same_row else "12"
    if len(protruding) == 4:
        (u, v), = internal
        pair = (u // 2, v // 2)
        return {(2, 2): "13", (0, 0): "13s", (1, 1): "14", (0, 1): "15", (1, 2): "15s", (0, 2): "16"}[pair]
    return "17"


def _trace(protruding: tuple[int, ...], internal: tuple[tuple[int, int], ...], black_type: int):
    black = {}
    for u, v in BLACK_EDGES[black_type]:
        black[u], black[v] = v, u
    red = {}
    for u, v in internal:
        red[u], red[v] = v, u
    seen: set[int] = set()
    paths = []
    for start in protruding:
        if start in seen:
            continue
        seen.add(start)
        v = black[start]
        while v not in protruding:
            seen.add(v)
            w = red[v]
            seen.add(w)
            v = black[w]
        seen.add(v)
        paths.append((start, v))
    loops = 0
    for v0 in range(6):
        if v0 in seen:
            continue
        loops += 1
        v = v0
        while v not in seen:
            seen.add(v)
            w = black[v]
            seen.add(w)
            v = red[w]
    return tuple(paths), loops


@lru_cache(maxsize=None)
def block_traces() -> tuple[BlockTrace, ...]:
    """Every (red pattern, black type) on the block: 76 patterns times 4 types."""
    out = []
    for size in (0, 2, 4, 6):
        for prot in combinations(range(6), size):
            rest = tuple(v for v in range(6) if v not in prot)
            for internal in _matchings(rest):
                cid = _case_id(prot, internal)
                for t in (1, 2, 3, 4):
                    paths, loops = _trace(prot, internal, t)
                    out.append(BlockTrace(cid, prot, internal, t, paths, loops))
    return tuple(out)


def endpoint_shifts(case_id: str) -> dict[tuple[int, int], set[tuple[int, int, int]]]:
    """Vector shifts of a two-protrusion case by far-endpoint rows.

    Keys are ``(i, j)`` with rows numbered 1..3: the protruding edge leaving the
    upper block row lands in row ``i``, the other in row ``j``. Each value is
    the set of shifts seen over all placements and black types of the case.
    """
    out: dict[tuple[int, int], set[tuple[int, int, int]]] = defaultdict(set)
    for tr in block_traces():
        if tr.case_id != case_id:
            continue
        if len(tr.protruding) != 2:
            raise ValueError(f"case {case_id} does not have two protruding edges")
        top, bottom = tr.protruding
        for i, j in product(range(3), repeat=2):
            shift = [0, 0, 0]
            for u, v in tr.internal:
                if u // 2 != v // 2:
                    shift[_CROSS[(u // 2, v // 2)]] -= 1
            for v, r in ((top, i), (bottom, j)):
                if v // 2 != r:
                    shift[_CROSS[(min(v // 2, r), max(v // 2, r))]] -= 1
            if i != j:
                shift[_CROSS[(min(i, j), max(i, j))]] += 1
            out[(i + 1, j + 1)].add(tuple(shift))
    return dict(out)


def case_loop_polynomial(case_id: str) -> IntPolynomial:
    """Sum of ``k**loops`` over all block configurations of a case (all black types)."""
    coeffs = [0, 0, 0, 0]
    for tr in block_traces():
        if tr.case_id == case_id:
            coeffs[tr.loops] += 1
    return IntPolynomial(tuple(coeffs))


# ---------------------------------------------------------------------------
# Templates


@dataclass(frozen=True)
class CaseContribution:
    """Aggregated term of the recursion.

    ``g(n, a)`` receives ``count * 2**same_row * prod(falling(b_t, mult_t)) *
    k**loops * g(n-1, a + shift)`` where ``b`` is the shifted vector with its
    same-row counts computed at order ``n-1``.
    """

    group: int  # number of protruding edges: 0, 2, 4 or 6
    loops: int
    shift: tuple[int, int, int]
    mult: tuple[int, int, int, int, int, int]
    same_row: int
    count: int

    @property
    def loop_factor(self) -> IntPolynomial:
        return IntPolynomial.monomial(self.loops)

    def combinatorial_factor(self, b: tuple[int, int, int], order: int) -> int:
        """Weight for target ``b`` at order ``order``; clamps to zero when unavailable."""
        b12, b13, b23 = b
        full = (
            (2 * order - b12 - b13) // 2,
            (2 * order - b12 - b23) // 2,
            (2 * order - b13 - b23) // 2,
            b12,
            b13,
            b23,
        )
        w = self.count << self.same_row
        for x, m in zip(full, self.mult):
            if m:
                w *= falling(x, m)
                if not w:
                    return 0
        return max(w, 0)


@lru_cache(maxsize=None)
def templates() -> tuple[CaseContribution, ...]:
    acc: dict[tuple, int] = defaultdict(int)
    for tr in block_traces():
        base = [0, 0, 0]
        for u, v in tr.internal:
            ru, rv = u // 2, v // 2
            if ru != rv:
                base[_CROSS[(min(ru, rv), max(ru, rv))]] -= 1
        for rows in product(range(3), repeat=len(tr.protruding)):
            far = dict(zip(tr.protruding, rows))
            shift = list(base)
            for v, r in far.items():
                if v // 2 != r:
                    shift[_CROSS[(min(v // 2, r), max(v // 2, r))]] -= 1
            mult = [0] * 6
            same = 0
            for u, v in tr.paths:
                x, y = sorted((far[u], far[v]))
                mult[_SLOTS[(x, y)]] += 1
                if x == y:
                    same += 1
                else:
                    shift[_CROSS[(x, y)]] += 1
            acc[(len(tr.protruding), tr.loops, tuple(shift), tuple(mult), same)] += 1
    return tuple(
        CaseContribution(group, loops, shift, mult, same, count)
        for (group, loops, shift, mult, same), count in sorted(acc.items())
    )


@lru_cache(maxsize=None)
def _by_shift(groups: tuple[int, ...]) -> tuple[tuple[tuple[int, int, int], tuple[CaseContribution, ...]], ...]:
    d: dict[tuple[int, int, int], list[CaseContribution]] = defaultdict(list)
    for t in templates():
        if t.group in groups:
            d[t.shift].append(t)
    return tuple((s, tuple(ts)) for s, ts in sorted(d.items()))


ALL_GROUPS = (0, 2, 4, 6)


@lru_cache(maxsize=None)
def _kernel(groups: tuple[int, ...]):
    """Per shift: rows ``(mult, weights by loop count)`` with templates of equal ``mult`` merged."""
    out = []
    for shift, ts in _by_shift(groups):
        rows: dict[tuple[int, ...], list[int]] = defaultdict(lambda: [0, 0, 0, 0])
        for t in ts:
            rows[t.mult][t.loops] += t.count << t.same_row
        packed = tuple(
            (tuple((i, m) for i, m in enumerate(mult) if m), tuple(w)) for mult, w in sorted(rows.items())
        )
        out.append((shift, packed))
    return tuple(out)


def _terms(n: int, a: tuple[int, int, int], groups=ALL_GROUPS):
    """Yield ``(b, [c0, c1, c2, c3])`` with ``g(n,a) += sum_L c_L k**L g(n-1,b)``."""
    order = n - 1
    top = 2 * order
    a12, a13, a23 = a
    for (s12, s13, s23), rows in _kernel(groups):
        b12, b13, b23 = a12 + s12, a13 + s13, a23 + s23
        if b12 < 0 or b13 < 0 or b23 < 0:
            continue
        x, y, z = b12 + b13, b12 + b23, b13 + b23
        if x & 1 or y & 1 or x > top or y > top or z > top:
            continue
        full = ((top - x) >> 1, (top - y) >> 1, (top - z) >> 1, b12, b13, b23)
        c0 = c1 = c2 = c3 = 0
        for mult, (w0, w1, w2, w3) in rows:
            f = 1
            for i, m in mult:
                v = full[i]
                if v < m:
                    f = 0
                    break
                for j in range(m):
                    f *= v - j
            if f:
                c0 += w0 * f
                c1 += w1 * f
                c2 += w2 * f
                c3 += w3 * f
        if c0 or c1 or c2 or c3:
            yield EdgeVector(b12, b13, b23), [c0, c1, c2, c3]


# ---------------------------------------------------------------------------
# Memo table


class MemoTable:
    """Insert-once map ``(n, EdgeVector) -> IntPolynomial``; safe for concurrent use."""

    def __init__(self, entries: Mapping[tuple[int, EdgeVector], IntPolynomial] | None = None):
        self._data: dict[tuple[int, EdgeVector], IntPolynomial] = {}
        self._lock = threading.Lock()
        if entries:
            for (n, a), p in entries.items():
                self.put(n, a, p)

    def get(self, n: int, a: tuple[int, int, int]) -> IntPolynomial | None:
        return self._data.get((n, EdgeVector(*a)))

    def put(self, n: int, a: tuple[int, int, int], p: IntPolynomial) -> IntPolynomial:
        key = (n, EdgeVector(*a))
        with self._lock:
            old = self._data.get(key)
            if old is None:
                self._data[key] = p
                return p
        if old != p:
            raise RuntimeError(f"memo conflict at g{key}: stored value differs from recomputation")
        return old

    def __contains__(self, key) -> bool:
        n, a = key
        return (n, EdgeVector(*a)) in self._data

    def __len__(self) -> int:
        return len(self._data)

    def __iter__(self):
        return iter(sorted(self._data))

    def items(self):
        return ((key, self._data[key]) for key in sorted(self._data))

    def keys_at(self, n: int) -> list[EdgeVector]:
        return sorted(a for (m, a) in self._data if m == n)

    def __eq__(self, other) -> bool:
        return isinstance(other, MemoTable) and self._data == other._data


def _lookup(memo: MemoTable, n: int, b: EdgeVector) -> IntPolynomial:
    if n == 0:
        return IntPolynomial((1,))
    p = memo.get(n, b)
    if p is None:
        raise KeyError(f"g({n}, {b}) is not in the memo table")
    return p


def _contribution(n: int, a: tuple[int, int, int], memo: MemoTable, groups) -> IntPolynomial:
    a = check_valid(a, n)
    total = [0] * (3 * n + 1)
    for b, coeffs in _terms(n, a, groups):
        sub = _lookup(memo, n - 1, b).coeffs
        for L, c in enumerate(coeffs):
            if c:
                for i, x in enumerate(sub):
                    total[i + L] += c * x
    return IntPolynomial(tuple(total))


def base_case(a: tuple[int, int, int]) -> IntPolynomial:
    """``g(1, a)`` for the five valid order-1 vectors."""
    a = check_valid(a, 1)
    return BASE_CASES[a]


def contrib_cases_1_4(n: int, a: tuple[int, int, int], lookup: MemoTable) -> IntPolynomial:
    """Block with no protruding edges (cases 1, 2, 2s, 3, 4)."""
    return _contribution(n, a, lookup, (0,))


def contrib_cases_5_12(n: int, a: tuple[int, int, int], lookup: MemoTable) -> IntPolynomial:
    """Block with two protruding edges (cases 5 through 12 and mirrors)."""
    return _contribution(n, a, lookup, (2,))


def contrib_cases_13_16(n: int, a: tuple[int, int, int], lookup: MemoTable) -> IntPolynomial:
    """Block with four protruding edges."""
    return _contribution(n, a, lookup, (4,))


def contrib_case_17(n: int, a: tuple[int, int, int], lookup: MemoTable) -> IntPolynomial:
    """Block with all six vertices protruding."""
    return _contribution(n, a, lookup, (6,))


# ---------------------------------------------------------------------------
# Driver


def required_keys(n: int, a: tuple[int, int, int], memo: MemoTable | None = None) -> dict[int, set[EdgeVector]]:
    """Keys reachable from ``(n, a)`` that are missing from ``memo``, grouped by order."""
    a = check_valid(a, n)
    need: dict[int, set[EdgeVector]] = defaultdict(set)
    frontier = {a} if memo is None or (n, a) not in memo else set()
    level = n
    while frontier and level >= 1:
        need[level] |= frontier
        if level == 1:
            break
        nxt = set()
        for x in frontier:
            for b, _ in _terms(level, x):
                if memo is None or (level - 1, b) not in memo:
                    nxt.add(b)
        frontier = nxt
        level -= 1
    return dict(need)


def _slot_width(n: int) -> int:
    """Bytes per packed coefficient.

    A coefficient of g(m, a) counts graphs, so it never exceeds the number of
    all graphs of order m: (6m-1)!! red matchings times 4**m black patterns.
    That total increases with m, so the bound at n covers every level.
    """
    bits = (double_factorial(6 * n - 1) * 4**n).bit_length()
    return bits // 8 + 1


def _eval_packed(n: int, a: EdgeVector, prev: dict[EdgeVector, int], width: int, memo: MemoTable) -> int:
    acc = [0, 0, 0, 0]
    for b, coeffs in _terms(n, a):
        sub = prev.get(b)
        if sub is None:
            # computed by an earlier call and kept only in the memo
            sub = prev[b] = pack(_lookup(memo, n - 1, b), width)
        for L, c in enumerate(coeffs):
            if c:
                acc[L] += c * sub
    shift = 8 * width
    return acc[0] + (acc[1] << shift) + (acc[2] << 2 * shift) + (acc[3] << 3 * shift)


_FORK_STATE: dict = {}


def _level_worker(args):
    n, keys, width = args
    prev, memo = _FORK_STATE["prev"], _FORK_STATE["memo"]
    return [(a, _eval_packed(n, a, prev, width, memo)) for a in keys]


def g(n: int, a: tuple[int, int, int], memo: MemoTable | None = None, threads: int = 1) -> IntPolynomial:
    """Exact ``g(n, a)``; every key computed on the way is inserted into ``memo``."""
    a = check_valid(a, n)
    if memo is None:
        memo = MemoTable()
    hit = memo.get(n, a)
    if hit is not None:
        return hit
    need = required_keys(n, a, memo)
    width = _slot_width(n)
    prev: dict[EdgeVector, int] = {}
    for level in range(1, n + 1):
        keys = sorted(need.get(level, ()))
        if not keys:
            prev = {}
            continue
        if level == 1:
            for b in keys:
                memo.put(1, b, BASE_CASES[b])
            prev = {b: pack(BASE_CASES[b], width) for b in keys}
            continue
        results = _run_level(level, keys, prev, width, memo, threads)
        cur = {}
        for b, value in results:
            memo.put(level, b, unpack(value, width))
            cur[b] = value
        STATS.keys_computed += len(results)
        log.debug("order %d: %d keys", level, len(results))
        prev = cur
    return memo.get(n, a)


def _run_level(level, keys, prev, width, memo, threads):
    _FORK_STATE.update(prev=prev, memo=memo)
    try:
        if threads == 1 or len(keys) < 8:
            return _level_worker((level, keys, width))
        import multiprocessing as mp

        workers = threads if threads > 0 else (os.cpu_count() or 1)
        # fixed round-robin split so the output order (and hence memo insertion) is deterministic
        chunks = [keys[i::workers] for i in range(workers)]
        ctx = mp.get_context("fork")
        with ctx.Pool(workers) as pool:
            parts = pool.map(_level_worker, [(level, c, width) for c in chunks if c])
        return sorted((r for part in parts for r in part), key=lambda item: item[0])
    finally:
        _FORK_STATE.clear()


def second_moment_polynomial(n: int, memo: MemoTable | None = None, threads: int = 1) -> IntPolynomial:
    """``M2(k, n) = (2n-1)!! g(n, (0,0,0))``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return g(n, (0, 0, 0), memo, threads) * double_factorial(2 * n - 1)


# ---------------------------------------------------------------------------
# Persistent cache

_NAME = re.compile(r"^g_(\d+)_(\d+)_(\d+)_(\d+)\.txt$")


def _render(n: int, a: EdgeVector, p: IntPolynomial) -> str:
    return f"{n} {a.a12} {a.a13} {a.a23} {p.degree}\n" + p.to_text()


def save_memo(memo: MemoTable, directory: str | os.PathLike, overwrite: bool = False) -> int:
    """Write one file per key; each write goes to a temp file renamed into place."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = 0
    for (n, a), p in memo.items():
        target = d / f"g_{n}_{a.a12}_{a.a13}_{a.a23}.txt"
        if target.exists() and not overwrite:
            continue
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix=".txt")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_render(n, a, p))
        os.replace(tmp, target)
        written += 1
    return written


def _parse(path: Path) -> tuple[int, EdgeVector, IntPolynomial]:
    m = _NAME.match(path.name)
    try:
        lines = path.read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        head = [int(x) for x in lines[0].split(" ")]
        if len(head) != 5:
            raise ValueError("header must have five fields")
        n, a12, a13, a23, degree = head
        if m and (int(m[1]), int(m[2]), int(m[3]), int(m[4])) != (n, a12, a13, a23):
            raise ValueError("header does not match file name")
        body = lines[1:]
        if len(body) != degree + 1:
            raise ValueError(f"expected {degree + 1} coefficient lines, found {len(body)}")
        coeffs = []
        for line in body:
            if not re.fullmatch(r"-?\d+", line):
                raise ValueError(f"non-decimal coefficient {line!r}")
            coeffs.append(int(line))
        a = check_valid((a12, a13, a23), n)
        p = IntPolynomial(tuple(coeffs))
        if p.degree != degree:
            raise ValueError("degree does not match trimmed coefficients")
    except (ValueError, IndexError, UnicodeDecodeError) as exc:
        raise CacheFormatError(f"{path}: {exc}") from exc
    return n, a, p


def load_memo(directory: str | os.PathLike) -> MemoTable:
    memo = MemoTable()
    d = Path(directory)
    if not d.exists():
        return memo
    for path in sorted(d.iterdir()):
        if not _NAME.match(path.name):
            continue
        n, a, p = _parse(path)
        memo.put(n, a, p)
    return memo


def load_entry(directory: str | os.PathLike, n: int, a: tuple[int, int, int]) -> IntPolynomial | None:
    """Read a single cached key, or ``None`` when its file is absent."""
    a = EdgeVector(*a)
    path = Path(directory) / f"g_{n}_{a.a12}_{a.a13}_{a.a23}.txt"
    if not path.exists():
        return None
    return _parse(path)[2]
