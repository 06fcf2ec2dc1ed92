"""Vertex-disjoint path selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .pathsearch import AsPath, SearchParams, search, search_from_device
from .torgraph import TorGraph

ORACLE_MAX_NODES = 14


@dataclass
class DisjointSet:
    paths: list[AsPath] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.paths)

    def used_nodes(self) -> set[int]:
        out: set[int] = set()
        for p in self.paths:
            out.update(p.intermediates)
        return out


def _check_endpoints(paths: Sequence[AsPath], endpoints: tuple[int, int]) -> None:
    s, d = endpoints
    for p in paths:
        if p.nodes[0] != s or p.nodes[-1] != d:
            raise ValueError(f"path {p} does not run from {s} to {d}")


def greedy_filter(paths: Iterable[AsPath], exclude_endpoints: tuple[int, int],
                  *, presorted: bool = False) -> DisjointSet:
    """Shortest-first greedy selection of intermediate-disjoint paths.

    Paths are visited in (length, lexicographic) order unless ``presorted``
    is set, in which case the given order is kept.  A path is accepted when
    none of its intermediate ASes is used by an earlier accepted path.
    """
    paths = list(paths)
    _check_endpoints(paths, exclude_endpoints)
    if not presorted:
        paths.sort(key=AsPath.sort_key)
    used: set[int] = set()
    accepted = []
    for p in paths:
        mid = p.intermediates
        if used.isdisjoint(mid):
            accepted.append(p)
            used.update(mid)
    return DisjointSet(accepted)


def max_disjoint_count(paths: Sequence[AsPath]) -> int:
    """Exact size of the largest family of intermediate-disjoint paths.

    Exhaustive branch and bound; exponential in the worst case, meant for
    small test instances.  Disjoint paths have pairwise distinct first (and
    last) intermediate ASes, which bounds each branch and is what the
    search branches on.
    """
    mids = {p.intermediates for p in paths}
    direct = 1 if () in mids else 0
    cands = [(m, frozenset(m)) for m in sorted(mids) if m]
    best = 0

    def bound(cs) -> int:
        return min(len({m[0] for m, _ in cs}), len({m[-1] for m, _ in cs}))

    def rec(cs, size: int) -> None:
        nonlocal best
        if not cs:
            best = max(best, size)
            return
        if size + bound(cs) <= best:
            return
        counts: dict[int, int] = {}
        for m, _ in cs:
            counts[m[0]] = counts.get(m[0], 0) + 1
        hop = min(counts, key=lambda h: (counts[h], h))
        for m, ms in cs:
            if m[0] == hop:
                rec([(n, ns) for n, ns in cs if ns.isdisjoint(ms)], size + 1)
        rec([(n, ns) for n, ns in cs if n[0] != hop], size)

    rec(cands, 0)
    return best + direct


def oracle_max_disjoint(graph: TorGraph, s, d: int, params: SearchParams = SearchParams()) -> int:
    """Exact maximum number of valid intermediate-disjoint paths from s to d.

    ``s`` is an AS or a pair of providers (for the artificial dual-homed
    source).  Paths come from an uncapped strict enumeration.
    """
    if graph.node_count > ORACLE_MAX_NODES:
        raise ValueError(f"oracle limited to {ORACLE_MAX_NODES} nodes, graph has {graph.node_count}")
    uncapped = SearchParams(tau=params.tau, engine="strict_enum", max_paths=10**9,
                            grammar=params.grammar, count_device_hop=params.count_device_hop)
    if isinstance(s, tuple):
        paths = search_from_device(graph, s, d, uncapped).paths
    else:
        paths = search(graph, s, d, uncapped).paths
    return max_disjoint_count(paths)
