import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import pytest

from gbsmoments.recursion import MemoTable, g, save_memo

ACCEPTANCE = pytest.StashKey[list]()
FULL_ORDER = 40


@dataclass
class FullTable:
    memo: MemoTable
    seconds: float
    cache_dir: Path
    cache_bytes: int


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture(scope="session")
def full_table(tmp_path_factory) -> FullTable:
    """Cold-cache computation of g(40, (0,0,0)), shared by every test that needs the big table."""
    memo = MemoTable()
    start = time.perf_counter()
    g(FULL_ORDER, (0, 0, 0), memo)
    seconds = time.perf_counter() - start
    cache_dir = tmp_path_factory.mktemp("cache40")
    save_memo(memo, cache_dir)
    size = sum(f.stat().st_size for f in cache_dir.iterdir())
    return FullTable(memo, seconds, cache_dir, size)


@pytest.fixture
def criterion(request):
    """Context manager that times an acceptance check and records its outcome for the summary."""
    results = request.config.stash[ACCEPTANCE]

    @contextmanager
    def run(number: int, title: str, budget: float | None = None):
        start = time.perf_counter()
        detail = ""
        ok = False
        try:
            yield
            elapsed = time.perf_counter() - start
            if budget is not None:
                assert elapsed < budget, f"took {elapsed:.1f} s, budget {budget:.0f} s"
            ok = True
        except BaseException as exc:
            detail = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            raise
        finally:
            results.append((number, title, ok, time.perf_counter() - start, detail))

    return run


def pytest_terminal_summary(terminalreporter, config):
    results = sorted(config.stash.get(ACCEPTANCE, []))
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, title, ok, seconds, detail in results:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title} ({seconds:.2f} s)"
        if detail:
            line += f"  -- {detail}"
        terminalreporter.write_line(line)
