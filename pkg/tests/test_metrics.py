import io
import random

import pytest

from oracles import reference_boxplot
from pathdiv.metrics import (CountrySeries, Grouping, Position, RobustnessRecord, View, aggregate,
                             boxplot, build_series, device_view, ep_count_from, ep_view, evaluate_pair,
                             load_region_map, robustness)
from pathdiv.pairs import SourceConfig
from pathdiv.pathsearch import AsPath
from pathdiv.torgraph import Rel, from_edges

CFG = SourceConfig("FR", (1, 2))


def test_device_view_micrographs(g1, g2):
    assert device_view(g1, CFG, 5) == 2
    assert device_view(g2, CFG, 5) == 1


def test_ep_view_micrographs(g1, g2):
    assert ep_view(g1, CFG, 5) == 2
    assert ep_view(g2, CFG, 5) == 1


def test_unreachable_counts_zero():
    g = from_edges([(1, 3, "c2p"), (2, 3, "c2p"), (4, 5, "p2c")])
    rec, _ = evaluate_pair(g, CFG, 5)
    assert (rec.device_count, rec.ep_count, rec.differential) == (0, 0, 0)


def test_ep_one_side_empty():
    g = from_edges([(1, 5, "p2c"), (2, 3, "p2c")])
    assert ep_view(g, CFG, 5) == 1


def test_ep_overlap_discarded_from_second_provider():
    def p(*nodes):
        return AsPath(nodes, (Rel.C2P,) * (len(nodes) - 1))
    d1 = [p(1, 3, 9), p(1, 4, 9)]
    d2 = [p(2, 3, 9)]
    # 3 is shared -> 2 + 1 - 1
    assert ep_count_from(d1, d2, (1, 2), 9) == 2
    # a D1-avoiding alternative is preferred even if longer
    d2b = [p(2, 3, 9), p(2, 7, 8, 9)]
    assert ep_count_from(d1, d2b, (1, 2), 9) == 3


def test_ep_providers_are_trusted():
    def p(*nodes):
        return AsPath(nodes, (Rel.C2P,) * (len(nodes) - 1))
    # D1 transits the second provider; not counted as a shared hop
    assert ep_count_from([p(1, 2, 9)], [p(2, 9)], (1, 2), 9) == 2


def test_evaluate_pair_agrees_with_separate_views(g1, g2):
    for g in (g1, g2):
        rec, truncated = evaluate_pair(g, CFG, 5)
        assert rec.device_count == device_view(g, CFG, 5)
        assert rec.ep_count == ep_view(g, CFG, 5)
        assert not truncated


def test_record_invariants():
    rec = RobustnessRecord(CFG, 5, 1, 3)
    assert rec.differential == 2
    with pytest.raises(ValueError):
        RobustnessRecord(CFG, 5, 3, 3)
    with pytest.raises(ValueError):
        RobustnessRecord(CFG, 5, 1, 3, differential=1)


def test_robustness_mean(g1):
    assert robustness(g1, CFG, [5]) == 2.0
    g = from_edges([(1, 3, "c2p"), (2, 3, "c2p"), (4, 5, "p2c")])
    assert robustness(g, CFG, [5, 4]) == 0.0
    with pytest.raises(ValueError):
        robustness(g1, CFG, [])


def test_build_series_means():
    recs = [RobustnessRecord(CFG, d, c, c) for d, c in ((10, 2), (11, 1), (12, 1))]
    recs.append(RobustnessRecord(SourceConfig("FR", (1, 3)), 10, 2, 2))
    (series,) = build_series(recs, View.DEVICE)
    assert series.values == (4 / 3, 2.0)
    assert series.configs == (CFG, SourceConfig("FR", (1, 3)))


def test_robustness_of_constant_counts_is_exact():
    for c in (0, 1, 2):
        recs = [RobustnessRecord(CFG, d, c, c) for d in range(10, 17)]
        assert build_series(recs, View.DEVICE)[0].values == (float(c),)


def test_boxplot_simple():
    b = boxplot([1, 2, 3, 4, 5], 0)
    assert (b.min, b.q1, b.median, b.q3, b.max, b.mean) == (1, 2, 3, 4, 5, 3)
    assert b.outliers == ()


def test_boxplot_constant():
    for f in (0, 0.01, 0.3, 0.49):
        b = boxplot([2, 2, 2, 2], f)
        assert (b.min, b.q1, b.median, b.q3, b.max, b.mean) == (2, 2, 2, 2, 2, 2)
        assert b.outliers == ()


def test_boxplot_one_percent_of_thousand():
    rng = random.Random(11)
    xs = [rng.random() for _ in range(1000)]
    b = boxplot(xs, 0.01)
    assert len(b.outliers) == 10
    lo = [x for x in b.outliers if x < b.min]
    hi = [x for x in b.outliers if x > b.max]
    assert len(lo) == 5 and len(hi) == 5
    ref = reference_boxplot(xs, 0.01)
    assert sorted(b.outliers) == sorted(ref["outliers"])


def test_boxplot_errors():
    with pytest.raises(ValueError):
        boxplot([], 0.01)
    with pytest.raises(ValueError):
        boxplot([1], 0.5)


def test_boxplot_order_invariant_small_n():
    for n in range(1, 12):
        for f in (0.0, 0.1, 0.3, 0.49):
            b = boxplot([float(i) for i in range(n)], f)
            assert b.min <= b.q1 <= b.median <= b.q3 <= b.max


def test_aggregate_orders_by_mean():
    series = [CountrySeries("FR", View.DEVICE, (2.0, 2.0)), CountrySeries("DE", View.DEVICE, (1.0, 1.0))]
    assert [g for g, _ in aggregate(series)] == ["DE", "FR"]
    regions = {"FR": ("Western Europe", Position.COASTAL), "DE": ("Western Europe", Position.COASTAL)}
    ((name, stats),) = aggregate(series, regions, Grouping.MACRO_REGION)
    assert name == "Western Europe" and stats.n == 4 and stats.mean == 1.5


def test_aggregate_unmapped_country():
    series = [CountrySeries("ZZ", View.DEVICE, (1.0,))]
    with pytest.raises(KeyError, match="ZZ"):
        aggregate(series, {}, Grouping.POSITION)


def test_aggregate_position_and_monotone():
    rng = random.Random(2)
    regions = load_region_map()
    ccs = sorted(regions)[:40]
    series = [CountrySeries(cc, View.EDGE_PROVIDER, tuple(rng.uniform(0, 3) for _ in range(rng.randint(1, 9))))
              for cc in ccs]
    for grouping in Grouping:
        out = aggregate(series, regions, grouping)
        means = [s.mean for _, s in out]
        assert means == sorted(means)
    assert {g for g, _ in aggregate(series, regions, Grouping.POSITION)} <= {"coastal", "inland"}


def test_region_map_bundled_and_custom():
    regions = load_region_map()
    assert regions["FR"] == ("Western Europe", Position.COASTAL)
    assert regions["UZ"] == ("Central Asia", Position.INLAND)
    assert len(regions) > 190
    custom = load_region_map(io.StringIO("CC,macro_region,position\nFR,Europe,coastal\n"))
    assert custom == {"FR": ("Europe", Position.COASTAL)}
