import time

import pytest

RESULTS: list[str] = []


class Criterion:
    """Times one acceptance criterion and prints a single PASS/FAIL line."""

    def __init__(self, number: int, title: str, budget: float):
        self.number, self.title, self.budget = number, title, budget

    def __enter__(self):
        self.start = time.perf_counter()
        self.checks: list[tuple[bool, str]] = []
        return self

    def check(self, ok, detail: str) -> None:
        self.checks.append((bool(ok), detail))

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        self.check(elapsed < self.budget, f"runtime {elapsed:.2f}s < {self.budget:g}s")
        ok = exc_type is None and all(c for c, _ in self.checks)
        detail = "; ".join(d for _, d in self.checks)
        if exc_type is not None:
            detail = f"{exc_type.__name__}: {exc}; {detail}"
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {self.number:2d} {self.title}: {detail}"
        RESULTS.append(line)
        print("\n" + line)
        if exc_type is None:
            failed = [d for c, d in self.checks if not c]
            assert not failed, "; ".join(failed)
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
