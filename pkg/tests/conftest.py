from __future__ import annotations

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the test asserts on the returned flag."""

    def record(number: int, title: str, ok: bool, detail: str, seconds: float) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({detail}; {seconds:.2f} s)"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
