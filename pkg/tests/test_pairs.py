import logging
import random

import pytest

from pathdiv.ingest import AsClass
from pathdiv.pairs import (SourceConfig, edge_providers_by_country, enumerate_destinations,
                           enumerate_sources, pair_count)
from pathdiv.torgraph import from_edges

EP = AsClass.EDGE_PROVIDER


def world(groups):
    classes, cmap = {}, {}
    for cc, members in groups.items():
        for asn in members:
            classes[asn] = EP
            cmap[asn] = cc
    return classes, cmap


def test_sources_all_pairs():
    classes, cmap = world({"FR": [30, 10, 20]})
    configs = enumerate_sources("FR", classes, cmap)
    assert [c.providers for c in configs] == [(10, 20), (10, 30), (20, 30)]


def test_sources_skip_notice(caplog):
    classes, cmap = world({"FR": [10]})
    with caplog.at_level(logging.WARNING):
        assert enumerate_sources("FR", classes, cmap) == []
    assert "skipping FR" in caplog.text


def test_fifty_providers():
    classes, cmap = world({"FR": list(range(1, 51))})
    assert len(enumerate_sources("FR", classes, cmap)) == 1225


def test_destinations_are_foreign():
    classes, cmap = world({"FR": [10, 20], "DE": [30], "BR": [40, 50]})
    assert enumerate_destinations("FR", classes, cmap).destinations == (30, 40, 50)
    classes, cmap = world({"FR": [10, 20]})
    assert enumerate_destinations("FR", classes, cmap).destinations == ()


def test_pair_count_example():
    classes, cmap = world({"FR": [10, 20], "DE": [30], "BR": [40, 50]})
    groups = edge_providers_by_country(classes, cmap)
    assert pair_count("FR", groups) == 3


def test_non_edge_providers_ignored():
    classes, cmap = world({"FR": [10, 20]})
    classes[99] = AsClass.CARRIER
    cmap[99] = "DE"
    classes[98] = EP  # no country
    assert enumerate_destinations("FR", classes, cmap).destinations == ()


def test_source_config_normalises_order():
    assert SourceConfig("FR", (20, 10)).providers == (10, 20)
    with pytest.raises(ValueError):
        SourceConfig("FR", (10, 10))


def test_sampling_is_seeded_subset():
    classes, cmap = world({"FR": [1, 2], "DE": list(range(100, 160))})
    full = enumerate_destinations("FR", classes, cmap).destinations
    a = enumerate_destinations("FR", classes, cmap, sample_size=10, seed=7).destinations
    b = enumerate_destinations("FR", classes, cmap, sample_size=10, seed=7).destinations
    assert a == b and len(a) == 10 and set(a) <= set(full) and list(a) == sorted(a)


def test_single_homed_filter():
    classes, cmap = world({"FR": [1, 2], "DE": [10, 11]})
    g = from_edges([(10, 50, "c2p"), (11, 50, "c2p"), (11, 51, "c2p"), (1, 50, "c2p"), (2, 50, "c2p")])
    dests = enumerate_destinations("FR", classes, cmap, graph=g, single_homed=True)
    assert dests.destinations == (10,)


def test_eq1_identity_random_partitions():
    rng = random.Random(3)
    for _ in range(300):
        n_countries = rng.randint(1, 6)
        asn = iter(range(1, 10_000))
        groups = {f"C{i}": [next(asn) for _ in range(rng.randint(0, 7))] for i in range(n_countries)}
        classes, cmap = world(groups)
        by_cc = edge_providers_by_country(classes, cmap)
        for cc in by_cc:
            sources = enumerate_sources(cc, classes, cmap)
            dests = enumerate_destinations(cc, classes, cmap)
            emitted = [(s, d) for s in sources for d in dests]
            assert len(emitted) == pair_count(cc, by_cc)
            for s, d in emitted:
                assert d not in s.providers and cmap[d] != cc
