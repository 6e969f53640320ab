import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from etcal import TraceSet  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def make_set(*traces):
    """Build a TraceSet from ``(confidences, correctness)`` pairs."""
    return TraceSet(
        np.array([c for c, _ in traces], dtype=float),
        np.array([b for _, b in traces], dtype=np.int8),
    )


@pytest.fixture
def record_criterion():
    def record(label: str, passed: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {label}  {detail}".rstrip())

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
