"""Command-line front end: compute, inspect, sweep and verify moment polynomials.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 cache I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .analysis import MissingMemoEntry, transition_sweep
from .closed_forms import (
    c_1,
    c_2n,
    c_2n_minus_1,
    double_factorial,
    first_moment_exact,
    moment_bounds,
    second_moment_k1,
)
from .edges import EdgeVector, InvalidEdgeVector, check_valid, graph_count
from .oracle import enumerate_classes, enumerate_same_row, mc_moment
from .poly import poly_eval_log
from .recursion import CacheFormatError, MemoTable, g, load_entry, load_memo, save_memo

log = logging.getLogger("gbsmoments")

OK, VERIFY_FAILED, USAGE, IO_ERROR = 0, 1, 2, 3
DEFAULT_CACHE = "./moments-cache"


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    cache_dir: Path
    threads: int
    output_format: str
    seed: int


# ---------------------------------------------------------------------------
# Cache-backed memo


def _memo(cfg: RunConfig) -> MemoTable:
    return load_memo(cfg.cache_dir)


def _persist(cfg: RunConfig, memo: MemoTable) -> None:
    written = save_memo(memo, cfg.cache_dir)
    log.info("cache %s: %d new entries", cfg.cache_dir, written)


def _polynomial(cfg: RunConfig, n: int, a: EdgeVector, memo: MemoTable | None = None):
    """``g(n, a)`` from the in-process memo, then the on-disk cache, then the recursion."""
    if memo is not None and (hit := memo.get(n, a)) is not None:
        return hit, memo
    cached = load_entry(cfg.cache_dir, n, a)
    if cached is not None:
        log.info("g(%d, %s) served from cache", n, a)
        if memo is not None:
            memo.put(n, a, cached)
        return cached, memo
    if memo is None:
        memo = _memo(cfg)
    p = g(n, a, memo, threads=cfg.threads)
    _persist(cfg, memo)
    return p, memo


# ---------------------------------------------------------------------------
# Output


def _emit(cfg: RunConfig, doc: dict, rows: list[dict] | None = None) -> None:
    if cfg.output_format == "csv" and rows is not None:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")


def _parse_a(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--a expects three comma-separated integers, got {text!r}") from None
    if len(parts) != 3:
        raise UsageError(f"--a expects three comma-separated integers, got {text!r}")
    return parts


def _parse_k(text: str | None):
    if text is None:
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        k = float(text)
    except ValueError:
        raise UsageError(f"--k expects a number, got {text!r}") from None
    if not k > 0:
        raise UsageError(f"--k must be positive, got {text}")
    return k


def parse_a_grid(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(round((hi - lo) / step)) + 1
            return [round(lo + i * step, 12) for i in range(count)]
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--a expects lo:hi:step or a comma list, got {text!r}") from None


# ---------------------------------------------------------------------------
# Commands


def cmd_compute(cfg: RunConfig, args) -> int:
    try:
        a = check_valid(_parse_a(args.a), args.n)
    except InvalidEdgeVector as exc:
        raise UsageError(str(exc)) from None
    k = _parse_k(args.k)
    p, _ = _polynomial(cfg, args.n, a)
    doc = {"n": args.n, "a": list(a), "degree": p.degree, "coeffs": [str(c) for c in p.coeffs]}
    if isinstance(k, int):
        if k < 0:
            raise UsageError(f"--k must be nonnegative, got {k}")
        doc["k"] = k
        doc["eval"] = str(p(k))
    elif k is not None:
        doc["k"] = k
        doc["log_eval"] = poly_eval_log(p, k)
    rows = [{"power": i, "coefficient": str(c)} for i, c in enumerate(p.coeffs)]
    _emit(cfg, doc, rows)
    return OK


def _coefficient_checks(n: int, p) -> dict[str, dict]:
    """Each identity as ``{computed, expected, ok}``; all big integers as decimal strings."""
    pairs = {
        "c_2n": (p[2 * n], c_2n(n)),
        "c_2n_minus_1": (p[2 * n - 1], c_2n_minus_1(n)),
        "c_1": (p[1], c_1(n)),
        "sum": (p(1), double_factorial(2 * n - 1) ** 3 * 4**n),
    }
    return {name: {"computed": str(x), "expected": str(y), "ok": x == y} for name, (x, y) in pairs.items()}


def cmd_coeffs(cfg: RunConfig, args) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    p, _ = _polynomial(cfg, args.n, EdgeVector(0, 0, 0))
    checks = _coefficient_checks(args.n, p)
    doc = {
        "n": args.n,
        "coeffs": {str(i): str(p[i]) for i in range(1, 2 * args.n + 1)},
        "checks": checks,
    }
    rows = [{"i": i, "c_i": str(p[i])} for i in range(1, 2 * args.n + 1)]
    _emit(cfg, doc, rows)
    return OK if all(c["ok"] for c in checks.values()) else VERIFY_FAILED


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(x)


def cmd_sweep(cfg: RunConfig, args) -> int:
    if args.n_max < 1:
        raise UsageError(f"--n-max must be >= 1, got {args.n_max}")
    grid = parse_a_grid(args.a)
    memo = _memo(cfg)
    if memo.get(args.n_max, (0, 0, 0)) is None:
        g(args.n_max, (0, 0, 0), memo, threads=cfg.threads)
        _persist(cfg, memo)
    for n in range(1, args.n_max):
        if memo.get(n, (0, 0, 0)) is None:
            g(n, (0, 0, 0), memo, threads=cfg.threads)
    records = transition_sweep(grid, args.n_max, memo)
    if cfg.output_format == "json":
        doc = {
            "records": [
                {"n": r.n, "a_exponent": r.a_exponent, "k": r.k, "log_inv": r.log_inv, "delta": r.delta}
                for r in records
            ]
        }
        _emit(cfg, doc)
    else:
        out = ["n,a_exponent,k,log_inv,delta"]
        out += [f"{r.n},{_fmt(r.a_exponent)},{_fmt(r.k)},{_fmt(r.log_inv)},{_fmt(r.delta)}" for r in records]
        sys.stdout.write("\n".join(out) + "\n")
    return OK


def _verify_oracle(cfg: RunConfig, args) -> dict:
    n = args.n
    if not 1 <= n <= max(2, args.tier):
        raise UsageError(f"verify oracle supports 1 <= n <= {max(2, args.tier)} (see --tier), got {n}")
    memo = _memo(cfg)
    if n <= 2:
        truth = enumerate_classes(n)
    else:
        truth = {EdgeVector(0, 0, 0): enumerate_same_row(n, max_n=args.tier)}
    for a, expected in truth.items():
        got = g(n, a, memo, threads=cfg.threads)
        if got != expected:
            raise VerificationFailed(f"g({n}, {a}): recursion {got} != enumeration {expected}")
    _persist(cfg, memo)
    return {"mode": "oracle", "n": n, "classes": len(truth), "passed": True}


def _verify_mc(cfg: RunConfig, args) -> dict:
    n, k, t = args.n, args.k, args.t
    if k is None or k < 1:
        raise UsageError("verify mc needs --k >= 1")
    try:
        est = mc_moment(t, n, k, args.samples, cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if t == 1:
        exact = first_moment_exact(k, n)
    else:
        p, _ = _polynomial(cfg, n, EdgeVector(0, 0, 0))
        exact = double_factorial(2 * n - 1) * p(k)
    z = est.z_score(exact)
    rel = abs(est.mean - exact) / exact
    ok = abs(z) < args.z_max or (args.rel_tol is not None and rel <= args.rel_tol)
    doc = {
        "mode": "mc", "t": t, "n": n, "k": k, "samples": est.samples, "seed": est.seed,
        "mean": est.mean, "stderr": est.stderr, "exact": str(exact), "z": z, "relative_error": rel,
        "passed": ok,
    }
    if not ok:
        raise VerificationFailed(json.dumps(doc))
    return doc


def _verify_closed_forms(cfg: RunConfig, args) -> dict:
    memo = _memo(cfg)
    if memo.get(args.n_max, (0, 0, 0)) is None:
        g(args.n_max, (0, 0, 0), memo, threads=cfg.threads)
        _persist(cfg, memo)
    for n in range(1, args.n_max + 1):
        p = memo.get(n, (0, 0, 0)) or g(n, (0, 0, 0), memo)
        for name, check in _coefficient_checks(n, p).items():
            if not check["ok"]:
                raise VerificationFailed(
                    f"n={n} {name}: computed {check['computed']} != expected {check['expected']}"
                )
        m2_poly = p * double_factorial(2 * n - 1)
        if m2_poly(1) != second_moment_k1(n):
            raise VerificationFailed(f"n={n} M2(1,n): {m2_poly(1)} != {second_moment_k1(n)}")
        for k in range(1, args.k_max + 1):
            if not moment_bounds(k, n).contains(m2_poly(k)):
                raise VerificationFailed(f"n={n} k={k}: M2 outside bounds {moment_bounds(k, n)}")
    for (n, a), p in memo.items():
        if n <= args.n_max and p(1) != graph_count(n, a):
            raise VerificationFailed(f"g({n}, {a}) at k=1: {p(1)} != graph count {graph_count(n, a)}")
    return {"mode": "closed-forms", "n_max": args.n_max, "k_max": args.k_max, "passed": True}


def cmd_verify(cfg: RunConfig, args) -> int:
    runner = {"oracle": _verify_oracle, "mc": _verify_mc, "closed-forms": _verify_closed_forms}[args.mode]
    try:
        doc = runner(cfg, args)
    except VerificationFailed as exc:
        sys.stdout.write(json.dumps({"mode": args.mode, "passed": False, "failure": str(exc)}, indent=2) + "\n")
        return VERIFY_FAILED
    _emit(cfg, doc)
    return OK


# ---------------------------------------------------------------------------
# Argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--cache", help="cache directory (default: $MOMENTS_CACHE or ./moments-cache)")
    p.add_argument("--threads", type=int, default=1, help="worker processes per level, 0 = all cores")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="gbs-moments", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", parents=[common], help="exact g(n, a)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", default="0,0,0", help="a12,a13,a23")
    p.add_argument("--k", help="evaluate at k (exact for integers, log value otherwise)")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("coeffs", parents=[common], help="normalized coefficients with identity checks")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("sweep", parents=[common], help="transition statistic for k = n**a")
    p.add_argument("--a", required=True, help="lo:hi:step or comma list")
    p.add_argument("--n-max", type=int, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[common], help="cross-check the recursion")
    p.add_argument("mode", choices=("oracle", "mc", "closed-forms"))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--tier", type=int, default=3, help="largest n for same-row enumeration")
    p.add_argument("--k", type=int)
    p.add_argument("--t", type=int, choices=(1, 2), default=2, help="moment order for mc")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--z-max", type=float, default=5.0)
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--k-max", type=int, default=100)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    fmt = args.format or ("csv" if args.command == "sweep" else "json")
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return USAGE
    cfg = RunConfig(
        cache_dir=Path(args.cache or os.environ.get("MOMENTS_CACHE") or DEFAULT_CACHE),
        threads=args.threads,
        output_format=fmt,
        seed=args.seed,
    )
    try:
        return args.func(cfg, args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (CacheFormatError, OSError) as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return IO_ERROR
    except MissingMemoEntry as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
