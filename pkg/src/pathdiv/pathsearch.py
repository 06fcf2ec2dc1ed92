"""Policy-compliant path enumeration between two ASes.

Two engines:

``strict_enum``
    Every simple valley-free path of at most ``tau`` hops, produced in
    (length, lexicographic) order and capped at ``max_paths``.  A reverse
    breadth-first pass over the (AS, valley state) product graph gives a
    lower bound on the remaining hops to the destination, which lets the
    depth-first enumeration skip branches that cannot finish in budget.

``paper_literal``
    The queue-driven search with a global visited set and per-call edge
    masking after p2c hops.  Each node is expanded once, so the result is
    usually a strict subset of what ``strict_enum`` finds.
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .torgraph import TRANSITIONS, Grammar, Rel, TorGraph, ValleyState

log = logging.getLogger(__name__)

#: Node id of the artificial dual-homed source (never a valid public ASN).
SYNTHETIC_SOURCE = 0

_INVALID = ValleyState.INVALID
_UPHILL = ValleyState.UPHILL


class Engine(str, enum.Enum):
    PAPER_LITERAL = "paper_literal"
    STRICT_ENUM = "strict_enum"


class QueueDiscipline(str, enum.Enum):
    FIFO = "fifo"
    LIFO = "lifo"


class UnknownNodeError(KeyError):
    pass


@dataclass(frozen=True)
class SearchParams:
    tau: int = 6
    engine: Engine = Engine.STRICT_ENUM
    max_paths: int = 10_000
    queue_discipline: QueueDiscipline = QueueDiscipline.FIFO
    grammar: Grammar = Grammar.STRICT
    # whether the synthetic source -> provider hop uses up one unit of tau
    count_device_hop: bool = False

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.max_paths < 1:
            raise ValueError("max_paths must be >= 1")
        object.__setattr__(self, "engine", Engine(self.engine))
        object.__setattr__(self, "queue_discipline", QueueDiscipline(self.queue_discipline))
        object.__setattr__(self, "grammar", Grammar(self.grammar))


@dataclass(frozen=True)
class AsPath:
    nodes: tuple[int, ...]
    labels: tuple[Rel, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.nodes) - 1:
            raise ValueError("a path of n nodes carries n-1 labels")

    @property
    def hops(self) -> int:
        return len(self.labels)

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def destination(self) -> int:
        return self.nodes[-1]

    @property
    def intermediates(self) -> tuple[int, ...]:
        return self.nodes[1:-1]

    def sort_key(self):
        return (len(self.nodes), self.nodes)

    def __str__(self) -> str:
        return " ".join(map(str, self.nodes))


@dataclass
class SearchResult:
    """Paths in (length, lexicographic) order; ``truncated`` if capped."""

    paths: list[AsPath] = field(default_factory=list)
    truncated: bool = False

    def __iter__(self) -> Iterator[AsPath]:
        return iter(self.paths)

    def __len__(self) -> int:
        return len(self.paths)

    def __getitem__(self, i):
        return self.paths[i]

    def node_lists(self) -> list[list[int]]:
        return [list(p.nodes) for p in self.paths]


def _check_node(graph: TorGraph, node: int) -> None:
    if node not in graph:
        raise UnknownNodeError(f"AS{node} is not in the graph")


def search(graph: TorGraph, s: int, d: int, params: SearchParams = SearchParams()) -> SearchResult:
    if s == d:
        raise ValueError("source and destination must differ")
    _check_node(graph, s)
    _check_node(graph, d)
    if params.engine is Engine.STRICT_ENUM:
        result = _strict_enum(graph, s, d, params.tau, params.grammar, params.max_paths)
    else:
        result = _alg1(graph, s, d, params.tau, params)
    if result.truncated:
        log.warning("path search %d -> %d truncated at %d paths", s, d, params.max_paths)
    return result


def search_from_device(graph: TorGraph, providers: tuple[int, int], d: int,
                       params: SearchParams = SearchParams()) -> SearchResult:
    """Search from an artificial source attached by c2p edges to two providers.

    Returned paths start with :data:`SYNTHETIC_SOURCE`.  The attachment hop
    is outside the ``tau`` budget unless ``params.count_device_hop``.
    """
    p1, p2 = providers
    if p1 == p2:
        raise ValueError("providers must be distinct")
    for p in providers:
        _check_node(graph, p)
        if p == d:
            raise ValueError("destination must not be one of the providers")
    _check_node(graph, d)
    budget = params.tau - 1 if params.count_device_hop else params.tau

    if params.engine is Engine.PAPER_LITERAL:
        first = tuple(sorted((p, Rel.C2P) for p in providers))
        result = _alg1(graph, SYNTHETIC_SOURCE, d, budget + 1, params, first_hops=first)
    else:
        subs = []
        if budget >= 1:
            subs = [_strict_enum(graph, p, d, budget, params.grammar, params.max_paths)
                    for p in sorted(providers)]
        result = merge_device_paths(subs, params.max_paths)
    if result.truncated:
        log.warning("device search %s -> %d truncated at %d paths", providers, d, params.max_paths)
    return result


def merge_device_paths(provider_results: Sequence[SearchResult], max_paths: int) -> SearchResult:
    """Prefix provider-rooted results with the synthetic source and merge them."""
    merged: list[AsPath] = []
    truncated = False
    for sub in provider_results:
        truncated |= sub.truncated
        merged.extend(AsPath((SYNTHETIC_SOURCE,) + q.nodes, (Rel.C2P,) + q.labels) for q in sub)
    merged.sort(key=AsPath.sort_key)
    if len(merged) > max_paths:
        del merged[max_paths:]
        truncated = True
    return SearchResult(merged, truncated)


# -- strict enumeration ----------------------------------------------------------

def _predecessor_states(grammar: Grammar):
    """pred[label_index][state] = states that move to ``state`` on that label."""
    table = TRANSITIONS[grammar]
    pred = [[[] for _ in range(3)] for _ in range(3)]
    for s in (ValleyState.UPHILL, ValleyState.PEAK, ValleyState.DOWNHILL):
        for li in range(3):
            t = table[s][li]
            if t is not _INVALID:
                pred[li][t].append(s)
    return pred


def distance_to(graph: TorGraph, d: int, grammar: Grammar, limit: int) -> list[dict[int, int]]:
    """Fewest valid hops from (node, state) to ``d``, explored up to ``limit``.

    Returns one dict per valley state; absent nodes are farther than
    ``limit`` or cannot reach ``d`` at all.  Simplicity is ignored, so the
    values are lower bounds for simple paths.
    """
    pred = _predecessor_states(grammar)
    dist: list[dict[int, int]] = [{d: 0}, {d: 0}, {d: 0}]
    frontier = [(d, s) for s in range(3)]
    k = 0
    while frontier and k < limit:
        k += 1
        nxt = []
        for v, sv in frontier:
            # incoming edge u -> v has the reverse of v's stored label toward u
            for u, lab_vu in graph.neighbors(v):
                for su in pred[1 - lab_vu][sv]:
                    du = dist[su]
                    if u not in du:
                        du[u] = k
                        nxt.append((u, su))
        frontier = nxt
    return dist


def _strict_enum(graph: TorGraph, s: int, d: int, tau: int, grammar: Grammar,
                 max_paths: int) -> SearchResult:
    table = TRANSITIONS[grammar]
    dist = distance_to(graph, d, grammar, tau)
    if s not in dist[_UPHILL]:
        return SearchResult([], False)
    literal = grammar is Grammar.PAPER_LITERAL
    adj_all = graph.neighbors
    adj_down = graph.down_neighbors
    adj_peer_down = graph.peer_down_neighbors
    big = tau + 1

    found: list[AsPath] = []
    nodes = [s]
    labels: list[Rel] = []
    on_path = {s}
    cap = max_paths + 1

    def expand(v: int, state: int, remaining: int) -> bool:
        if state == 0:
            nbrs = adj_all(v)
        elif state == 1 and literal:
            nbrs = adj_peer_down(v)
        else:
            nbrs = adj_down(v)
        row = table[state]
        for n, lab in nbrs:
            ns = row[lab + 1]
            if ns is _INVALID:
                continue
            if n == d:
                if remaining == 1:
                    found.append(AsPath(tuple(nodes) + (d,), tuple(labels) + (lab,)))
                    if len(found) >= cap:
                        return True
                continue
            if remaining == 1 or n in on_path or dist[ns].get(n, big) > remaining - 1:
                continue
            nodes.append(n)
            labels.append(lab)
            on_path.add(n)
            stop = expand(n, ns, remaining - 1)
            on_path.discard(n)
            labels.pop()
            nodes.pop()
            if stop:
                return True
        return False

    for length in range(dist[_UPHILL][s], tau + 1):
        if expand(s, 0, length):
            break
    truncated = len(found) > max_paths
    del found[max_paths:]
    return SearchResult(found, truncated)


# -- queue-driven search with visited set and edge masking -------------------------

def _alg1(graph: TorGraph, s: int, d: int, tau: int, params: SearchParams,
          first_hops: Sequence[tuple[int, Rel]] | None = None) -> SearchResult:
    """Queue search with a global visited set and per-call edge masking.

    Kept from the original procedure: each node is expanded at most once;
    after entering ``n`` over a p2c edge, all c2p and p2p edges leaving
    ``n`` are masked for the rest of the call; the neighbor loop breaks as
    soon as a candidate path reaches ``tau + 1`` nodes; the queue pops
    from the front (fifo) or the back (lifo).

    Added guards: a candidate is only recorded or queued when it is simple
    and its label sequence is valid in ``params.grammar``, and the
    destination is never expanded further.
    """
    table = TRANSITIONS[params.grammar]
    lifo = params.queue_discipline is QueueDiscipline.LIFO
    masked: set[tuple[int, int]] = set()
    visited: set[int] = set()
    valid: list[AsPath] = []

    def neighbors(v):
        if first_hops is not None and v == s:
            return first_hops
        return graph.neighbors(v)

    queue: deque = deque()
    queue.append(((s,), (), _UPHILL))
    while queue:
        path, labels, state = queue.pop() if lifo else queue.popleft()
        v = path[-1]
        if v in visited:
            continue
        for n, lab in neighbors(v):
            if (v, n) in masked:
                continue
            if n not in visited and lab is Rel.P2C:
                for x, lab_nx in neighbors(n):
                    if lab_nx is Rel.C2P or lab_nx is Rel.P2P:
                        masked.add((n, x))
            new_state = table[state][lab + 1]
            ok = new_state is not _INVALID and n not in path
            new_path = path + (n,)
            new_labels = labels + (lab,)
            if ok and n == d:
                valid.append(AsPath(new_path, new_labels))
            if len(new_path) == tau + 1:
                break
            if ok and n != d:
                queue.append((new_path, new_labels, new_state))
        visited.add(v)

    valid = sorted(set(valid), key=AsPath.sort_key)
    truncated = len(valid) > params.max_paths
    del valid[params.max_paths:]
    return SearchResult(valid, truncated)
