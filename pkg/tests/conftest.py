from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from selective_aoi.model import SourcePmf


def random_pmf(rng: np.random.Generator, n: int) -> SourcePmf:
    w = np.sort(rng.exponential(size=n) + 1e-3)[::-1]
    return SourcePmf(w / w.sum())


@st.composite
def pmfs(draw, max_n: int = 12) -> SourcePmf:
    n = draw(st.integers(1, max_n))
    w = draw(st.lists(st.floats(0.01, 10.0), min_size=n, max_size=n))
    w = np.sort(np.array(w))[::-1]
    return SourcePmf(w / w.sum())


@pytest.fixture
def pmf3() -> SourcePmf:
    return SourcePmf([0.5, 0.3, 0.2])


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(label: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
