"""Collects one verdict line per acceptance criterion for the terminal summary."""

from __future__ import annotations

RESULTS: list[str] = []


def verdict(number: int, title: str, passed: bool, detail: str) -> None:
    """Record and print the criterion's line, then fail the test if it did not pass."""
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert passed, line
