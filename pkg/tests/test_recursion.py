from collections import defaultdict
from itertools import product
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbsmoments.combinat import falling
from gbsmoments.edges import EdgeVector, InvalidEdgeVector, enumerate_valid, graph_count
from gbsmoments.oracle import enumerate_classes, enumerate_same_row
from gbsmoments.poly import IntPolynomial
from gbsmoments.recursion import (
    STATS,
    CacheFormatError,
    MemoTable,
    base_case,
    block_traces,
    case_loop_polynomial,
    contrib_case_17,
    contrib_cases_1_4,
    contrib_cases_5_12,
    contrib_cases_13_16,
    endpoint_shifts,
    g,
    load_entry,
    load_memo,
    required_keys,
    save_memo,
    second_moment_polynomial,
    templates,
)

P = IntPolynomial

# Frozen from exhaustive enumeration (see test_oracle).
G2_SAME_ROW = P((0, 176, 184, 64, 8))
G3_SAME_ROW = P((0, 74880, 90336, 40752, 8976, 1008, 48))

LOOPS = {
    "1": (0, 2, 2),
    "2": (0, 4, 3, 1),
    "2s": (0, 4, 3, 1),
    "3": (0, 6, 2),
    "4": (0, 16, 14, 2),
    "5": (2, 2),
    "5s": (2, 2),
    "6": (4, 3, 1),
    "6s": (4, 3, 1),
    "7": (2, 2),
    "8": (6, 2),
    "9": (8, 6, 2),
    "9s": (8, 6, 2),
    "10": (16, 14, 2),
    "10s": (16, 14, 2),
    "11": (12, 4),
    "12": (16, 14, 2),
}

# Vector shifts (d12, d13, d23) by far-endpoint rows ij, in the order
# 11 12 13 21 22 23 31 32 33, for the two-protrusion cases.
_Z = (0, 0, 0)
SHIFT_TABLE = {
    "5": [_Z, _Z, _Z, _Z, (-2, 0, 0), (-1, -1, 1), _Z, (-1, -1, 1), (0, -2, 0)],
    "6": [(0, 0, -2)] * 4 + [(-2, 0, -2), (-1, -1, -1), (0, 0, -2), (-1, -1, -1), (0, -2, -2)],
    "7": [(-2, 0, 0), _Z, (-1, 1, -1), _Z, _Z, _Z, (-1, 1, -1), _Z, (0, 0, -2)],
    "8": [(-2, -2, 0), (0, -2, 0), (-1, -1, -1), (0, -2, 0), (0, -2, 0), (0, -2, 0), (-1, -1, -1), (0, -2, 0),
          (0, -2, -2)],
    "9": [(-2, 0, 0), _Z, (-1, 1, -1), (-2, 0, 0), (-2, 0, 0), (-2, 0, 0), (-2, 0, 0), (-1, -1, 1),
          (-1, -1, -1)],
    "10": [(-1, -1, -1), (1, -1, -1), (0, 0, -2), (-1, -1, -1), (-1, -1, -1), (-1, -1, -1), (-1, -1, -1),
           (0, -2, 0), (0, -2, -2)],
    "11": [(0, -2, 0), (1, -1, -1), _Z, (0, -2, 0), (-1, -1, -1), (-1, -1, 1), (0, -2, 0), (0, -2, 0),
           (0, -2, 0)],
    "12": [(-1, -1, -1), (0, 0, -2), (-1, 1, -1), (-1, -1, -1), (-2, 0, -2), (-2, 0, 0), (-1, -1, -1),
           (-1, -1, -1), (-1, -1, -1)],
}
ENDPOINTS = [(i, j) for i in (1, 2, 3) for j in (1, 2, 3)]


def _mirror_shift(s):
    return (s[2], s[1], s[0])


# ---------------------------------------------------------------------------
# Base cases and per-case structure


def test_base_cases():
    assert base_case((0, 0, 0)) == P((0, 2, 2))
    assert base_case((2, 0, 0)) == P((0, 4, 3, 1))
    assert base_case((0, 2, 0)) == P((0, 6, 2))
    assert base_case((0, 0, 2)) == P((0, 4, 3, 1))
    assert base_case((1, 1, 1)) == P((0, 16, 14, 2))
    with pytest.raises(InvalidEdgeVector):
        base_case((1, 0, 0))


def test_block_trace_inventory():
    traces = block_traces()
    assert len(traces) == 76 * 4
    by_size = defaultdict(int)
    for tr in traces:
        by_size[len(tr.protruding)] += 1
    assert dict(by_size) == {0: 15 * 4, 2: 15 * 3 * 4, 4: 15 * 4, 6: 4}


@pytest.mark.parametrize("case_id", sorted(LOOPS))
def test_loop_polynomials(case_id):
    assert case_loop_polynomial(case_id) == P(LOOPS[case_id])


def test_case_13_loop_counts_per_black_type():
    loops = defaultdict(list)
    for tr in block_traces():
        if tr.case_id == "13":
            loops[tr.protruding].append(tr.loops)
    assert loops == {(0, 1, 2, 3): [0, 0, 0, 1]}


def test_case_17_created_pairs():
    # protruding vertices in block order a=O1 b=O2 c=P1 d=P2 e=Q1 f=Q2
    name = dict(zip(range(6), "abcdef"))
    expected = {1: {"ab", "ce", "df"}, 2: {"af", "bd", "ce"}, 3: {"ac", "be", "df"}, 4: {"ac", "bd", "ef"}}
    for tr in block_traces():
        if tr.case_id == "17":
            assert tr.loops == 0
            assert {"".join(sorted(name[u] + name[v])) for u, v in tr.paths} == expected[tr.black_type]


@pytest.mark.parametrize("case_id", sorted(SHIFT_TABLE))
def test_two_protrusion_shifts_match_table(case_id):
    shifts = endpoint_shifts(case_id)
    for ij, expected in zip(ENDPOINTS, SHIFT_TABLE[case_id]):
        assert shifts[ij] == {expected}, (case_id, ij)


@pytest.mark.parametrize("case_id", ["5", "6", "9", "10"])
def test_symmetric_cases_are_row_relabels(case_id):
    plain, mirrored = endpoint_shifts(case_id), endpoint_shifts(case_id + "s")
    for (i, j), shifts in plain.items():
        # relabelling 1 <-> 3 swaps which protruding edge is the upper one
        assert {_mirror_shift(s) for s in shifts} == mirrored[(4 - j, 4 - i)]


def test_two_protrusion_combinatorial_factor():
    # 2*b_ii for same-row endpoints, b_ij otherwise
    for t in templates():
        if t.group != 2:
            continue
        assert sum(t.mult) == 1
        slot = t.mult.index(1)
        assert t.same_row == (1 if slot < 3 else 0)


def _factor_13_16(x, y, u, w, b):
    """Weight for created pairs {x,y} and {u,w} (rows 0..2) with lower-order counts ``b``."""
    same = (x == u and y == w) or (x == w and y == u)
    pre = 2 ** (x == y) * 2 ** (u == w)
    if same:
        return pre * 2 * comb(b[(x, y)], 2)
    return pre * b[(x, y)] * b[(u, w)]


def _factor_17(pairs, b):
    keys = [frozenset(p) for p in pairs]
    pre = 1
    for x, y in pairs:
        pre *= 2 ** (x == y)
    first, second, third = pairs
    if keys[0] == keys[1] == keys[2]:
        return pre * 6 * comb(b[first], 3)
    if keys[0] == keys[1]:
        return pre * 2 * comb(b[first], 2) * b[third]
    if keys[0] == keys[2]:
        return pre * 2 * comb(b[first], 2) * b[second]
    if keys[1] == keys[2]:
        return pre * 2 * comb(b[second], 2) * b[first]
    return pre * b[first] * b[second] * b[third]


def _counts(order, b):
    b12, b13, b23 = b
    out = {
        (0, 0): (2 * order - b12 - b13) // 2,
        (1, 1): (2 * order - b12 - b23) // 2,
        (2, 2): (2 * order - b13 - b23) // 2,
        (0, 1): b12, (0, 2): b13, (1, 2): b23,
    }
    out.update({(y, x): v for (x, y), v in list(out.items())})
    return out


def _shift(tr, far):
    shift = [0, 0, 0]
    index = {(0, 1): 0, (0, 2): 1, (1, 2): 2}
    for u, v in tr.internal:
        if u // 2 != v // 2:
            shift[index[tuple(sorted((u // 2, v // 2)))]] -= 1
    for v, r in far.items():
        if v // 2 != r:
            shift[index[tuple(sorted((v // 2, r)))]] -= 1
    for u, v in tr.paths:
        x, y = sorted((far[u], far[v]))
        if x != y:
            shift[index[(x, y)]] += 1
    return tuple(shift)


@pytest.mark.parametrize("group", [4, 6])
@pytest.mark.parametrize("order,b", [(3, (0, 0, 0)), (4, (2, 2, 0)), (5, (3, 1, 3)), (6, (4, 2, 2))])
def test_many_protrusion_weights_match_indicator_formulas(group, order, b):
    """Per shift, the generic template weights equal the explicit indicator-function factors."""
    counts = _counts(order, b)
    explicit = defaultdict(int)
    for tr in block_traces():
        if len(tr.protruding) != group:
            continue
        for rows in product(range(3), repeat=group):
            far = dict(zip(tr.protruding, rows))
            pairs = [(far[u], far[v]) for u, v in tr.paths]
            if group == 4:
                w = _factor_13_16(*pairs[0], *pairs[1], counts)
            else:
                w = _factor_17(pairs, counts)
            explicit[(_shift(tr, far), tr.loops)] += w
    generic = defaultdict(int)
    for t in templates():
        if t.group == group:
            generic[(t.shift, t.loops)] += t.combinatorial_factor(b, order)
    assert {k: v for k, v in explicit.items() if v} == {k: v for k, v in generic.items() if v}


def test_case_17_covers_every_row_assignment():
    assert sum(t.count for t in templates() if t.group == 6) == 4 * 3**6


# ---------------------------------------------------------------------------
# Contribution groups


def _seeded(order):
    """Memo holding every class of ``order``, as the contribution functions expect."""
    memo = MemoTable()
    for a in enumerate_valid(order):
        g(order, a, memo)
    return memo


def test_case_1_4_examples_at_order_two():
    memo = _seeded(1)
    # at a = 0 only case (1) has a valid target: (2k^2+2k) * g(1,0,0,0)
    assert contrib_cases_1_4(2, (0, 0, 0), memo) == P((0, 0, 4, 8, 4))
    # at a = (1,1,1) cases (1) and (4) both land on a base case
    loop1, loop4 = P((0, 2, 2)), P((0, 16, 14, 2))
    assert contrib_cases_1_4(2, (1, 1, 1), memo) == loop1 * base_case((1, 1, 1)) + loop4 * base_case((0, 0, 0))


@pytest.mark.parametrize("a", enumerate_valid(2))
def test_groups_sum_to_enumeration(a):
    memo = _seeded(1)
    truth = enumerate_classes(2)[a]
    parts = [
        contrib_cases_1_4(2, a, memo),
        contrib_cases_5_12(2, a, memo),
        contrib_cases_13_16(2, a, memo),
        contrib_case_17(2, a, memo),
    ]
    assert parts[0] + parts[1] + parts[2] + parts[3] == truth


def test_case_17_contributes_at_order_two():
    assert not contrib_case_17(2, (4, 0, 0), _seeded(1)).is_zero()


# ---------------------------------------------------------------------------
# Full recursion


def test_order_two_matches_enumeration_for_every_class():
    memo = MemoTable()
    for a, p in enumerate_classes(2).items():
        assert g(2, a, memo) == p


def test_order_three_same_row_matches_enumeration():
    assert g(3, (0, 0, 0)) == enumerate_same_row(3) == G3_SAME_ROW


def test_frozen_small_orders():
    assert g(2, (0, 0, 0)) == G2_SAME_ROW
    assert g(2, (0, 0, 0))(1) == 432


def test_second_moment_polynomial():
    assert second_moment_polynomial(1) == P((0, 2, 2))
    assert second_moment_polynomial(1)(1) == 4
    m2 = second_moment_polynomial(2)
    assert m2 == G2_SAME_ROW * 3
    assert m2[4] == 3 * 8
    with pytest.raises(ValueError):
        second_moment_polynomial(0)


@pytest.mark.parametrize("n", range(1, 13))
def test_structural_invariants(n):
    memo = MemoTable()
    p = g(n, (0, 0, 0), memo)
    assert p.degree == 2 * n
    assert p[0] == 0
    for (m, a), q in memo.items():
        assert q.degree <= 3 * m
        assert min(q.coeffs) >= 0
        assert q[0] == 0
        assert q(1) == graph_count(m, a)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=9), st.data())
def test_row_relabel_symmetry(n, data):
    a = data.draw(st.sampled_from(enumerate_valid(n)))
    assert g(n, a) == g(n, a.mirrored())


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.data())
def test_result_independent_of_memo_history(n, data):
    a = data.draw(st.sampled_from(enumerate_valid(n)))
    warm = MemoTable()
    g(n - 1, (0, 0, 0), warm)
    assert g(n, a, warm) == g(n, a, MemoTable())


def test_parallel_levels_are_bit_identical():
    serial, parallel = MemoTable(), MemoTable()
    g(9, (0, 0, 0), serial, threads=1)
    g(9, (0, 0, 0), parallel, threads=3)
    assert serial == parallel
    assert list(serial) == list(parallel)


def test_invalid_key_rejected():
    with pytest.raises(InvalidEdgeVector):
        g(2, (1, 0, 0))


def test_required_keys_skip_memo_hits():
    memo = MemoTable()
    g(3, (0, 0, 0), memo)
    assert required_keys(3, (0, 0, 0), memo) == {}
    need = required_keys(4, (0, 0, 0), memo)
    assert need[4] == {(0, 0, 0)}
    assert 1 not in need
    assert all((n, b) not in memo for n, keys in need.items() for b in keys)
    fresh = MemoTable()
    g(4, (0, 0, 0), fresh)
    assert sum(map(len, need.values())) == len(fresh) - len(memo)


def test_stats_count_only_fresh_keys():
    memo = MemoTable()
    before = STATS.keys_computed
    g(5, (0, 0, 0), memo)
    mid = STATS.keys_computed
    g(5, (0, 0, 0), memo)
    assert mid > before
    assert STATS.keys_computed == mid


# ---------------------------------------------------------------------------
# Memo table and cache


def test_memo_is_insert_once():
    memo = MemoTable()
    memo.put(1, (0, 0, 0), P((0, 2, 2)))
    memo.put(1, (0, 0, 0), P((0, 2, 2)))
    with pytest.raises(RuntimeError):
        memo.put(1, (0, 0, 0), P((0, 2, 3)))
    assert len(memo) == 1


def test_cache_round_trip(tmp_path):
    memo = MemoTable()
    g(6, (2, 2, 0), memo)
    written = save_memo(memo, tmp_path)
    assert written == len(memo)
    assert load_memo(tmp_path) == memo
    assert save_memo(memo, tmp_path) == 0


def test_cache_file_format(tmp_path):
    memo = MemoTable({(1, EdgeVector(0, 0, 0)): P((0, 2, 2))})
    save_memo(memo, tmp_path)
    raw = (tmp_path / "g_1_0_0_0.txt").read_bytes()
    assert raw == b"1 0 0 0 2\n0\n2\n2\n"
    assert load_entry(tmp_path, 1, (0, 0, 0)) == P((0, 2, 2))
    assert load_entry(tmp_path, 1, (2, 0, 0)) is None


def test_load_missing_or_empty_directory(tmp_path):
    assert len(load_memo(tmp_path)) == 0
    assert len(load_memo(tmp_path / "absent")) == 0


@pytest.mark.parametrize(
    "body",
    [
        "1 0 0 0 2\n0\nx2\n2\n",
        "1 0 0 0 2\n0\n2\n",
        "1 0 0 0\n0\n2\n2\n",
        "2 0 0 0 2\n0\n2\n2\n",
        "1 0 0 0 3\n0\n2\n2\n0\n",
    ],
)
def test_corrupt_file_reports_path(tmp_path, body):
    path = tmp_path / "g_1_0_0_0.txt"
    path.write_text(body)
    with pytest.raises(CacheFormatError, match="g_1_0_0_0.txt"):
        load_memo(tmp_path)


def test_falling_helper():
    assert falling(5, 2) == 20
    assert falling(1, 2) == 0
