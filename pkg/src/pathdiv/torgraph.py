"""Type-of-relationship (ToR) graph and the valley-free grammar."""

from __future__ import annotations

import enum
import os
from collections import defaultdict
from types import MappingProxyType
from typing import IO, Iterable, Mapping, Sequence

from .ingest import AsClass, DatasetError, RawLink, Relation

SNAPSHOT_MAGIC = "# pathdiv-torgraph"
SNAPSHOT_VERSION = 1


class Rel(enum.IntEnum):
    """Edge label as seen when walking from the first AS to the second."""

    P2C = -1
    P2P = 0
    C2P = 1

    def reverse(self) -> "Rel":
        return Rel(-self.value)

    def __str__(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "Rel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown relationship label {text!r}") from None


class ValleyState(enum.IntEnum):
    UPHILL = 0
    PEAK = 1
    DOWNHILL = 2
    INVALID = 3


class Grammar(str, enum.Enum):
    # STRICT: c2p* p2p? p2c*  (Gao, at most one peering hop)
    # PAPER_LITERAL: c2p* p2p* p2c*
    STRICT = "strict"
    PAPER_LITERAL = "paper_literal"


_U, _K, _D, _X = ValleyState.UPHILL, ValleyState.PEAK, ValleyState.DOWNHILL, ValleyState.INVALID


def _table(peer_after_peak: ValleyState):
    # rows: state, columns: label index (Rel + 1) -> P2C, P2P, C2P
    return (
        (_D, _K, _U),                  # UPHILL
        (_D, peer_after_peak, _X),     # PEAK
        (_D, _X, _X),                  # DOWNHILL
        (_X, _X, _X),                  # INVALID
    )


TRANSITIONS = {
    Grammar.STRICT: _table(_X),
    Grammar.PAPER_LITERAL: _table(_K),
}


def valley_step(state: ValleyState, next_label: Rel, mode: Grammar = Grammar.STRICT) -> ValleyState:
    return TRANSITIONS[Grammar(mode)][state][next_label + 1]


def validate_path(labels: Iterable[Rel], mode: Grammar = Grammar.STRICT) -> bool:
    table = TRANSITIONS[Grammar(mode)]
    state = ValleyState.UPHILL
    for label in labels:
        state = table[state][label + 1]
        if state is ValleyState.INVALID:
            return False
    return True


class TorGraph:
    """Immutable directed AS graph with labeled edges.

    Every link is stored in both directions with mirrored labels and
    adjacency lists are sorted by neighbor ASN.  Besides the full
    adjacency, per-node views restricted to downhill (p2c) and
    peer-or-downhill neighbors are kept for the path enumerator.
    """

    __slots__ = ("_adj", "_down", "_peer_down", "_labels", "_country", "_classes", "_nodes")

    def __init__(self, adjacency: Mapping[int, Sequence[tuple[int, Rel]]],
                 country: Mapping[int, str] | None = None,
                 classes: Mapping[int, AsClass] | None = None):
        adj = {}
        labels = {}
        for u, nbrs in adjacency.items():
            row = tuple(sorted((int(v), Rel(lab)) for v, lab in nbrs))
            for v, lab in row:
                if v == u:
                    raise ValueError(f"self-loop on AS{u}")
                if (u, v) in labels:
                    raise ValueError(f"duplicate edge {u}->{v}")
                labels[(u, v)] = lab
            adj[u] = row
        for (u, v), lab in labels.items():
            if labels.get((v, u)) is not lab.reverse():
                raise ValueError(f"edge {u}->{v} ({lab}) lacks its reverse")
        self._nodes = tuple(sorted(adj))
        self._adj = MappingProxyType(adj)
        self._labels = MappingProxyType(labels)
        self._down = MappingProxyType(
            {u: tuple(e for e in row if e[1] is Rel.P2C) for u, row in adj.items()})
        self._peer_down = MappingProxyType(
            {u: tuple(e for e in row if e[1] is not Rel.C2P) for u, row in adj.items()})
        self._country = MappingProxyType({n: country[n] for n in self._nodes if country and n in country})
        cls = classes or {}
        self._classes = MappingProxyType({n: cls.get(n, AsClass.UNKNOWN) for n in self._nodes})

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        """Directed edges (twice the number of links)."""
        return len(self._labels)

    @property
    def link_count(self) -> int:
        return len(self._labels) // 2

    @property
    def country(self) -> Mapping[int, str]:
        return self._country

    @property
    def classes(self) -> Mapping[int, AsClass]:
        return self._classes

    def __contains__(self, node) -> bool:
        return node in self._adj

    def __len__(self) -> int:
        return len(self._nodes)

    def neighbors(self, node: int) -> tuple[tuple[int, Rel], ...]:
        return self._adj[node]

    def down_neighbors(self, node: int) -> tuple[tuple[int, Rel], ...]:
        return self._down[node]

    def peer_down_neighbors(self, node: int) -> tuple[tuple[int, Rel], ...]:
        return self._peer_down[node]

    def label(self, u: int, v: int) -> Rel:
        return self._labels[(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._labels

    def edges(self) -> Iterable[tuple[int, int, Rel]]:
        for u in self._nodes:
            for v, lab in self._adj[u]:
                yield u, v, lab

    def providers(self, node: int) -> list[int]:
        return [v for v, lab in self._adj[node] if lab is Rel.C2P]

    def stats(self) -> dict:
        hist: dict[str, int] = defaultdict(int)
        for c in self._classes.values():
            hist[c.value] += 1
        ep = {n for n, c in self._classes.items() if c is AsClass.EDGE_PROVIDER}
        ep_links = sum(1 for (u, v) in self._labels if u < v and u in ep and v in ep)
        return {
            "nodes": self.node_count,
            "directed_edges": self.edge_count,
            "links": self.link_count,
            "average_degree": self.link_count / self.node_count if self._nodes else 0.0,
            "classes": {c.value: hist.get(c.value, 0) for c in AsClass},
            "edge_provider_nodes": len(ep),
            "edge_provider_links": ep_links,
            "mapped_to_country": len(self._country),
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, TorGraph):
            return NotImplemented
        return (dict(self._adj) == dict(other._adj) and dict(self._country) == dict(other._country)
                and dict(self._classes) == dict(other._classes))

    def __repr__(self) -> str:
        return f"TorGraph(nodes={self.node_count}, links={self.link_count})"

    def __reduce__(self):
        return (TorGraph, (dict(self._adj), dict(self._country), dict(self._classes)))


def build(links: Iterable[RawLink], country: Mapping[int, str] | None = None,
          classes: Mapping[int, AsClass] | None = None) -> TorGraph:
    """Materialize both directed edges for every (already filtered) link."""
    adj: dict[int, list[tuple[int, Rel]]] = defaultdict(list)
    for link in links:
        if link.relation is Relation.PROVIDER_CUSTOMER:
            fwd = Rel.P2C
        else:
            fwd = Rel.P2P
        adj[link.a].append((link.b, fwd))
        adj[link.b].append((link.a, fwd.reverse()))
    return TorGraph(adj, country, classes)


def from_edges(edges: Iterable[tuple[int, int, Rel | str]], country=None, classes=None) -> TorGraph:
    """Build from directed ``(u, v, label)`` triples, adding missing reverses.

    Convenient for hand-written test graphs.
    """
    labels: dict[tuple[int, int], Rel] = {}
    for u, v, lab in edges:
        lab = Rel.parse(lab) if isinstance(lab, str) else Rel(lab)
        for key, val in (((u, v), lab), ((v, u), lab.reverse())):
            if labels.setdefault(key, val) is not val:
                raise ValueError(f"conflicting labels for {key[0]}->{key[1]}")
    adj: dict[int, list[tuple[int, Rel]]] = defaultdict(list)
    for (u, v), lab in labels.items():
        adj[u].append((v, lab))
    return TorGraph(adj, country, classes)


# -- snapshots ----------------------------------------------------------------
#
# Text, line oriented:
#   # pathdiv-torgraph v1
#   N <asn> <country or -> <class>
#   E <u> <v> <c2p|p2c|p2p>      (every directed edge)

def dump_graph(graph: TorGraph, fh: IO[str]) -> None:
    fh.write(f"{SNAPSHOT_MAGIC} v{SNAPSHOT_VERSION}\n")
    for n in graph.nodes:
        fh.write(f"N {n} {graph.country.get(n, '-')} {graph.classes[n].value}\n")
    for u, v, lab in graph.edges():
        fh.write(f"E {u} {v} {lab}\n")


def load_graph(src) -> TorGraph:
    if isinstance(src, (str, os.PathLike)):
        with open(src, encoding="utf-8") as fh:
            return load_graph(fh)
    lines = iter(src)
    header = next(lines, "").strip()
    if header != f"{SNAPSHOT_MAGIC} v{SNAPSHOT_VERSION}":
        raise DatasetError(f"unsupported graph snapshot header {header!r}")
    country: dict[int, str] = {}
    classes: dict[int, AsClass] = {}
    adj: dict[int, list[tuple[int, Rel]]] = {}
    for lineno, line in enumerate(lines, 2):
        parts = line.split()
        if not parts:
            continue
        try:
            if parts[0] == "N" and len(parts) == 4:
                n = int(parts[1])
                adj.setdefault(n, [])
                if parts[2] != "-":
                    country[n] = parts[2]
                classes[n] = AsClass(parts[3])
            elif parts[0] == "E" and len(parts) == 4:
                adj.setdefault(int(parts[1]), []).append((int(parts[2]), Rel.parse(parts[3])))
            else:
                raise ValueError("unrecognised record")
        except ValueError as exc:
            raise DatasetError(str(exc), getattr(src, "name", None), lineno) from None
    return TorGraph(adj, country, classes)
