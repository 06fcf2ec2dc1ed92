"""Source configurations and destination sets per country."""

from __future__ import annotations

import logging
import random
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Collection, Mapping

from .ingest import AsClass
from .torgraph import TorGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class SourceConfig:
    """A hypothetical device dual-homed to two edge providers of one country."""

    country: str
    providers: tuple[int, int]

    def __post_init__(self):
        p1, p2 = self.providers
        if p1 == p2:
            raise ValueError("providers must be distinct")
        if p1 > p2:
            object.__setattr__(self, "providers", (p2, p1))


@dataclass(frozen=True)
class DestinationSet:
    country: str
    destinations: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.destinations)

    def __iter__(self):
        return iter(self.destinations)


def edge_providers_by_country(classes: Mapping[int, AsClass], country_map: Mapping[int, str],
                              nodes: Collection[int] | None = None) -> dict[str, list[int]]:
    """Group edge-provider ASes by country, optionally restricted to ``nodes``."""
    groups: dict[str, list[int]] = defaultdict(list)
    for asn, cls in classes.items():
        if cls is not AsClass.EDGE_PROVIDER or asn not in country_map:
            continue
        if nodes is not None and asn not in nodes:
            continue
        groups[country_map[asn]].append(asn)
    return {cc: sorted(members) for cc, members in sorted(groups.items())}


def enumerate_sources(country: str, classes: Mapping[int, AsClass], country_map: Mapping[int, str],
                      nodes: Collection[int] | None = None) -> list[SourceConfig]:
    members = edge_providers_by_country(classes, country_map, nodes).get(country, [])
    if len(members) < 2:
        log.warning("skipping %s: %d edge provider(s), need at least 2", country, len(members))
        return []
    return [SourceConfig(country, pair) for pair in combinations(members, 2)]


def enumerate_destinations(country: str, classes: Mapping[int, AsClass], country_map: Mapping[int, str],
                           nodes: Collection[int] | None = None, *,
                           sample_size: int | None = None, seed: int = 0,
                           graph: TorGraph | None = None, single_homed: bool = False) -> DestinationSet:
    """Foreign edge providers, sorted.

    ``sample_size`` draws a seeded subsample.  ``single_homed`` (needs
    ``graph``) keeps only destinations with exactly one provider edge.
    """
    dests = [asn for cc, members in edge_providers_by_country(classes, country_map, nodes).items()
             if cc != country for asn in members]
    if single_homed:
        if graph is None:
            raise ValueError("single_homed filtering needs the graph")
        dests = [d for d in dests if d in graph and len(graph.providers(d)) == 1]
    dests.sort()
    if sample_size is not None and sample_size < len(dests):
        dests = sorted(random.Random(f"{seed}:{country}").sample(dests, sample_size))
    return DestinationSet(country, tuple(dests))


def pair_count(country: str, groups: Mapping[str, Collection[int]]) -> int:
    """|E_c| (|E_c| - 1) / 2 times the number of foreign edge providers."""
    n = len(groups.get(country, ()))
    foreign = sum(len(m) for cc, m in groups.items() if cc != country)
    return n * (n - 1) // 2 * foreign


def pair_count_preview(groups: Mapping[str, Collection[int]]) -> dict[str, int]:
    return {cc: pair_count(cc, groups) for cc in sorted(groups)}

