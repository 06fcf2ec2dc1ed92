"""MITM-robustness views, per-country series and boxplot aggregation."""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from collections import defaultdict
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .disjoint import greedy_filter
from .pairs import SourceConfig
from .pathsearch import (SYNTHETIC_SOURCE, AsPath, Engine, SearchParams, SearchResult,
                         merge_device_paths, search, search_from_device)
from .torgraph import TorGraph

#: Reporting annotation only: a mean above this is read as "robust".
ROBUSTNESS_THRESHOLD = 1.5
COUNTRY_OUTLIER_FRACTION = 0.001
REGION_OUTLIER_FRACTION = 0.01


class View(str, enum.Enum):
    DEVICE = "device"
    EDGE_PROVIDER = "ep"
    DIFFERENTIAL = "diff"


class Grouping(str, enum.Enum):
    COUNTRY = "country"
    MACRO_REGION = "macro_region"
    POSITION = "position"


class Position(str, enum.Enum):
    COASTAL = "coastal"
    INLAND = "inland"


@dataclass(frozen=True, order=True)
class RobustnessRecord:
    config: SourceConfig
    destination: int
    device_count: int
    ep_count: int
    differential: int = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.differential is None:
            object.__setattr__(self, "differential", self.ep_count - self.device_count)
        if not 0 <= self.device_count <= 2:
            raise ValueError(f"device count {self.device_count} outside [0, 2]")
        if self.ep_count < 0:
            raise ValueError("negative edge-provider count")
        if self.differential != self.ep_count - self.device_count:
            raise ValueError("differential must equal ep_count - device_count")

    def count(self, view: View) -> int:
        view = View(view)
        if view is View.DEVICE:
            return self.device_count
        if view is View.EDGE_PROVIDER:
            return self.ep_count
        return self.differential

    def as_row(self) -> list:
        p1, p2 = self.config.providers
        return [self.config.country, p1, p2, self.destination,
                self.device_count, self.ep_count, self.differential]


RECORD_HEADER = ["country", "provider1", "provider2", "destination", "device", "ep", "diff"]


# -- per-pair views --------------------------------------------------------------

def device_count_from(device_paths: Iterable[AsPath], d: int) -> int:
    return greedy_filter(device_paths, (SYNTHETIC_SOURCE, d)).count


def ep_count_from(paths1: Sequence[AsPath], paths2: Sequence[AsPath],
                  providers: tuple[int, int], d: int) -> int:
    """Combine the disjoint sets seen from each provider.

    D1 is the greedy set from the first provider.  The second provider's
    paths are ranked so that those avoiding D1's ASes come first, then
    greedily filtered into D2.  D2 paths that still share an AS with D1
    are the overlap and are subtracted.  Both providers and the destination
    are trusted and never count as shared.
    """
    p1, p2 = providers
    d1 = greedy_filter(paths1, (p1, d))
    trusted = {p1, p2, d}
    used1 = d1.used_nodes() - trusted

    def shares(p: AsPath) -> bool:
        return not used1.isdisjoint(p.nodes) if used1 else False

    ranked = sorted(paths2, key=lambda p: (shares(p), len(p.nodes), p.nodes))
    d2 = greedy_filter(ranked, (p2, d), presorted=True)
    overlap = sum(1 for p in d2.paths if shares(p))
    return d1.count + d2.count - overlap


def _provider_searches(graph, config, d, params) -> tuple[SearchResult, SearchResult]:
    p1, p2 = config.providers
    return search(graph, p1, d, params), search(graph, p2, d, params)


def device_view(graph: TorGraph, config: SourceConfig, destination: int,
                params: SearchParams = SearchParams()) -> int:
    paths = search_from_device(graph, config.providers, destination, params)
    return device_count_from(paths, destination)


def ep_view(graph: TorGraph, config: SourceConfig, destination: int,
            params: SearchParams = SearchParams()) -> int:
    r1, r2 = _provider_searches(graph, config, destination, params)
    return ep_count_from(r1.paths, r2.paths, config.providers, destination)


def evaluate_pair(graph: TorGraph, config: SourceConfig, destination: int,
                  params: SearchParams = SearchParams()) -> tuple[RobustnessRecord, bool]:
    """Both views for one (configuration, destination) pair.

    Returns the record and whether any underlying search was truncated.
    """
    r1, r2 = _provider_searches(graph, config, destination, params)
    if params.engine is Engine.STRICT_ENUM and not params.count_device_hop:
        # the device search would repeat exactly these two enumerations
        dev = merge_device_paths((r1, r2), params.max_paths)
    else:
        dev = search_from_device(graph, config.providers, destination, params)
    record = RobustnessRecord(
        config, destination,
        device_count_from(dev, destination),
        ep_count_from(r1.paths, r2.paths, config.providers, destination),
    )
    return record, (r1.truncated or r2.truncated or dev.truncated)


def robustness(graph: TorGraph, config: SourceConfig, destinations: Sequence[int],
               params: SearchParams = SearchParams(), view: View = View.DEVICE) -> float:
    """Mean per-destination count; unreachable destinations count as 0."""
    if not destinations:
        raise ValueError("empty destination set")
    counts = [evaluate_pair(graph, config, d, params)[0].count(view) for d in destinations]
    return mean(counts)


def mean(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("mean of empty sequence")
    return math.fsum(values) / len(values)


# -- series ----------------------------------------------------------------------

@dataclass(frozen=True)
class CountrySeries:
    country: str
    view: View
    values: tuple[float, ...]
    configs: tuple[SourceConfig, ...] = ()


def build_series(records: Iterable[RobustnessRecord], view: View) -> list[CountrySeries]:
    """One robustness value per source configuration, grouped by country."""
    view = View(view)
    per_config: dict[SourceConfig, list[int]] = defaultdict(list)
    for rec in sorted(records):
        per_config[rec.config].append(rec.count(view))
    by_country: dict[str, list[tuple[SourceConfig, float]]] = defaultdict(list)
    for cfg in sorted(per_config):
        by_country[cfg.country].append((cfg, mean(per_config[cfg])))
    return [CountrySeries(cc, view, tuple(v for _, v in items), tuple(c for c, _ in items))
            for cc, items in sorted(by_country.items())]


# -- boxplots --------------------------------------------------------------------

@dataclass(frozen=True)
class BoxplotStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    outliers: tuple[float, ...] = ()
    outlier_fraction: float = 0.0
    n: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outliers"] = list(self.outliers)
        d["above_threshold"] = self.mean > ROBUSTNESS_THRESHOLD
        return d


def quantile(sorted_values: Sequence[float], p: float) -> float:
    """Linear interpolation between closest ranks (Hyndman-Fan type 7)."""
    h = (len(sorted_values) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = h - lo
    a, b = sorted_values[lo], sorted_values[hi]
    return a + frac * (b - a) if frac else a


def boxplot(values: Sequence[float], outlier_fraction: float = COUNTRY_OUTLIER_FRACTION) -> BoxplotStats:
    """Quartiles, mean and whiskers with a trimmed tail fraction.

    ``floor(n * outlier_fraction)`` extreme values (split between the two
    tails, the upper tail taking the odd one) are left out of the whiskers;
    neither tail is trimmed past its quartile.  Trimmed values that equal
    the whisker end are not reported as outliers.  Quartiles and mean use
    the full series.
    """
    if not values:
        raise ValueError("boxplot of an empty series")
    if not 0 <= outlier_fraction < 0.5:
        raise ValueError("outlier_fraction must be in [0, 0.5)")
    xs = sorted(float(v) for v in values)
    n = len(xs)
    k = math.floor(n * outlier_fraction + 1e-9)
    cap = math.floor(0.25 * (n - 1))
    n_low = min(k // 2, cap)
    n_high = min(k - k // 2, cap)
    lo, hi = xs[n_low], xs[n - 1 - n_high]
    outliers = tuple(x for x in xs[:n_low] if x < lo) + tuple(x for x in xs[n - n_high:] if x > hi)
    return BoxplotStats(
        min=lo, q1=quantile(xs, 0.25), median=quantile(xs, 0.5), q3=quantile(xs, 0.75), max=hi,
        mean=math.fsum(xs) / n, outliers=outliers, outlier_fraction=outlier_fraction, n=n,
    )


# -- regions ---------------------------------------------------------------------

RegionMap = Mapping[str, tuple[str, Position]]


def load_region_map(src=None) -> dict[str, tuple[str, Position]]:
    """Read ``CC,macro_region,position`` rows; defaults to the bundled table."""
    if src is None:
        text = resources.files("pathdiv.data").joinpath("regions.csv").read_text(encoding="utf-8")
        return load_region_map(io.StringIO(text))
    if isinstance(src, (str, os.PathLike)):
        with open(src, newline="", encoding="utf-8") as fh:
            return load_region_map(fh)
    regions: dict[str, tuple[str, Position]] = {}
    rows = (r for r in csv.reader(src) if r and not r[0].startswith("#"))
    for lineno, row in enumerate(rows, 1):
        if [c.strip() for c in row] == ["CC", "macro_region", "position"]:
            continue
        if len(row) != 3:
            raise ValueError(f"region row {lineno}: expected CC,macro_region,position")
        cc, region, pos = (c.strip() for c in row)
        regions[cc] = (region, Position(pos))
    return regions


def aggregate(series: Iterable[CountrySeries], regions: RegionMap | None = None,
              grouping: Grouping = Grouping.COUNTRY,
              outlier_fraction: float | None = None) -> list[tuple[str, BoxplotStats]]:
    """Boxplot per group, ordered by increasing mean.

    Region groups concatenate the raw per-configuration values of their
    member countries.
    """
    grouping = Grouping(grouping)
    if outlier_fraction is None:
        outlier_fraction = COUNTRY_OUTLIER_FRACTION if grouping is Grouping.COUNTRY else REGION_OUTLIER_FRACTION
    groups: dict[str, list[float]] = defaultdict(list)
    for s in series:
        if grouping is Grouping.COUNTRY:
            key = s.country
        else:
            if regions is None or s.country not in regions:
                raise KeyError(f"country {s.country} has no region mapping")
            region, pos = regions[s.country]
            key = region if grouping is Grouping.MACRO_REGION else Position(pos).value
        groups[key].extend(s.values)
    out = [(g, boxplot(v, outlier_fraction)) for g, v in groups.items() if v]
    out.sort(key=lambda item: (item[1].mean, item[0]))
    return out
