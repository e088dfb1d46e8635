from __future__ import annotations

import pytest

from rtpolar.graph import RetweetGraph


def ugraph(edges, nodes=None, weights=None) -> RetweetGraph:
    """Undirected graph from an edge list of hashable ids (stringified, zero-padded)."""
    def name(x):
        return f"{x:03d}" if isinstance(x, int) else str(x)

    es = {}
    for idx, (u, v) in enumerate(edges):
        a, b = sorted((name(u), name(v)))
        es[(a, b)] = es.get((a, b), 0) + (1 if weights is None else weights[idx])
    ns = {name(x) for e in edges for x in e} | {name(x) for x in (nodes or [])}
    return RetweetGraph(frozenset(ns), es, directed=False)


def dgraph(edges, nodes=None) -> RetweetGraph:
    es = {}
    for u, v in edges:
        es[(u, v)] = es.get((u, v), 0) + 1
    ns = {x for e in edges for x in e} | set(nodes or [])
    return RetweetGraph(frozenset(ns), es, directed=True)


@pytest.fixture
def two_triangles():
    """Triangles {0,1,2} and {3,4,5} joined by the bridge 2-3 (L = 7)."""
    return ugraph([(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


@pytest.fixture
def triangle_groups():
    return {"000": 0, "001": 0, "002": 0, "003": 1, "004": 1, "005": 1}


_ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def report(number: int, name: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
