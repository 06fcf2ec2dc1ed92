"""Synthetic scale-free AS topologies for benchmarking and demos.

The topology is a Barabasi-Albert graph topped up with random peering
links to reach an exact link count.  Older nodes (lower index) provide
transit to newer ones, so customer-provider edges form a hierarchy
without cycles.  AS paths are sampled as collector-to-origin walks down
that hierarchy.
"""

from __future__ import annotations

import os
import random
from pathlib import Path

import networkx as nx

from .ingest import RawLink, Relation, dump_as_paths, dump_country_map, dump_frequencies, dump_links

# same scale as the published AS graph: 21469 nodes, 86983 links
DEFAULT_NODES = 21469
DEFAULT_LINKS = 86983


def scale_free_links(n_nodes: int = DEFAULT_NODES, n_links: int = DEFAULT_LINKS, m: int = 4,
                     peer_prob: float = 0.1, seed: int = 0) -> list[RawLink]:
    if n_links < m * (n_nodes - m):
        raise ValueError("n_links below what the preferential-attachment core produces")
    rng = random.Random(seed)
    g = nx.barabasi_albert_graph(n_nodes, m, seed=seed)
    degree = dict(g.degree())
    links = {}
    for u, v in g.edges():
        a, b = min(u, v), max(u, v)
        ratio = max(degree[a], degree[b]) / min(degree[a], degree[b])
        if ratio < 2 and rng.random() < peer_prob:
            links[(a, b)] = Relation.PEER
        else:
            links[(a, b)] = Relation.PROVIDER_CUSTOMER
    while len(links) < n_links:
        a = rng.randrange(n_nodes)
        # peers of comparable age
        b = min(n_nodes - 1, max(0, a + rng.randint(-50, 50)))
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        links.setdefault(key, Relation.PEER)
    return [RawLink(a + 1, b + 1, rel, days_seen=31) for (a, b), rel in sorted(links.items())]


def sample_as_paths(links: list[RawLink], n_paths: int, seed: int = 0) -> list[tuple[int, ...]]:
    """Provider chains from a random origin up to a top of the hierarchy."""
    rng = random.Random(seed)
    providers: dict[int, list[int]] = {}
    nodes = set()
    for link in links:
        nodes.update((link.a, link.b))
        if link.relation is Relation.PROVIDER_CUSTOMER:
            providers.setdefault(link.b, []).append(link.a)
    order = sorted(nodes)
    paths = []
    for _ in range(n_paths):
        node = rng.choice(order)
        chain = [node]
        while node in providers and len(chain) < 10:
            node = rng.choice(providers[node])
            chain.append(node)
        paths.append(tuple(reversed(chain)))
    return paths


def assign_countries(nodes, n_countries: int = 20, seed: int = 0) -> dict[int, str]:
    rng = random.Random(seed)
    codes = [chr(65 + i // 26) + chr(65 + i % 26) for i in range(n_countries)]
    return {n: rng.choice(codes) for n in sorted(nodes)}


def write_dataset(outdir: str | os.PathLike, n_nodes: int = DEFAULT_NODES, n_links: int = DEFAULT_LINKS,
                  n_countries: int = 20, n_paths: int = 50_000, seed: int = 0) -> dict[str, Path]:
    """Write links, frequency, country and AS-path files; return their paths."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    links = scale_free_links(n_nodes, n_links, seed=seed)
    nodes = {n for link in links for n in (link.a, link.b)}
    files = {
        "links": out / "links.txt",
        "freq": out / "freq.txt",
        "countries": out / "countries.csv",
        "paths": out / "paths.txt",
    }
    with open(files["links"], "w") as fh:
        dump_links(links, fh)
    with open(files["freq"], "w") as fh:
        dump_frequencies(links, fh)
    with open(files["countries"], "w") as fh:
        dump_country_map(assign_countries(nodes, n_countries, seed), fh)
    with open(files["paths"], "w") as fh:
        dump_as_paths(sample_as_paths(links, n_paths, seed), fh)
    return files
