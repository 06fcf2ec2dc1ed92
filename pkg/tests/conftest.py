import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pathdiv.torgraph import from_edges  # noqa: E402

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "pathdiv" / "data" / "fixture"

# micro graphs; P1=1, P2=2, A=3, B=4, D=5 (E=4 in G3)
G1_EDGES = [(1, 3, "c2p"), (3, 5, "p2c"), (2, 4, "c2p"), (4, 5, "p2c")]
G2_EDGES = [(1, 3, "c2p"), (2, 3, "c2p"), (3, 5, "p2c")]
G3_EDGES = [(1, 3, "p2c"), (3, 4, "c2p"), (4, 5, "p2c")]


@pytest.fixture
def g1():
    return from_edges(G1_EDGES)


@pytest.fixture
def g2():
    return from_edges(G2_EDGES)


@pytest.fixture
def g3():
    return from_edges(G3_EDGES)


@pytest.fixture
def fixture_files():
    return {
        "links": str(FIXTURE_DIR / "links.txt"),
        "freq": str(FIXTURE_DIR / "freq.txt"),
        "countries": str(FIXTURE_DIR / "countries.csv"),
        "paths": str(FIXTURE_DIR / "paths.txt"),
    }


_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_report():
    def report(criterion: str, ok: bool, detail: str = "") -> None:
        _ACCEPTANCE.append((criterion, ok, detail))
    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}  {detail}")
