from __future__ import annotations

import pytest

from qfunctor.groupoid import Bibundle, pair_groupoid


def point_equivalence(n: int = 2) -> Bibundle:
    """``n`` points over ``Pair(n)`` with the one-arrow groupoid acting on the right."""
    G, H = pair_groupoid(n), pair_groupoid(1)
    return Bibundle.from_maps(G, H, n, list(range(n)), [0] * n,
                              lambda g, m: G.tgt[g], lambda m, h: m)


@pytest.fixture
def equiv2() -> Bibundle:
    return point_equivalence(2)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
