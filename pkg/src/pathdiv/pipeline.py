"""Batch pipeline: datasets -> graph -> pairs -> searches -> reports.

Work is split per source configuration (all destinations of one dual-homed
setup).  Finished configurations are appended to a checkpoint directory so
an interrupted run can resume; reports are always written from records
sorted by (country, providers, destination), which makes them independent
of worker count and completion order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .ingest import (DEFAULT_MIN_DAYS, DEFAULT_WINDOW_LENGTH, DatasetError, class_histogram,
                     classify, filter_stable, load_as_paths, load_country_map, load_links)
from .metrics import (COUNTRY_OUTLIER_FRACTION, RECORD_HEADER, REGION_OUTLIER_FRACTION,
                      ROBUSTNESS_THRESHOLD, Grouping, RobustnessRecord, View, aggregate, build_series,
                      evaluate_pair, load_region_map, quantile)
from .pairs import (SourceConfig, edge_providers_by_country, enumerate_destinations, enumerate_sources,
                    pair_count_preview)
from .pathsearch import SearchParams
from .torgraph import TorGraph, build

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


class ConfigError(ValueError):
    pass


class CheckpointMismatch(ConfigError):
    pass


@dataclass
class RunConfig:
    links: str
    countries: str
    paths: str
    out: str = "out"
    freq: str | None = None
    regions: str | None = None
    tau: int = 6
    min_days: int = DEFAULT_MIN_DAYS
    window_length: int = DEFAULT_WINDOW_LENGTH
    engine: str = "strict_enum"
    grammar: str = "strict"
    queue: str = "fifo"
    max_paths: int = 10_000
    count_device_hop: bool = False
    outlier_fraction: float = COUNTRY_OUTLIER_FRACTION
    region_outlier_fraction: float = REGION_OUTLIER_FRACTION
    workers: int = 1
    country_filter: Sequence[str] = ()
    sample_size: int | None = None
    sample_seed: int = 0
    single_homed: bool = False
    checkpoint_dir: str | None = None
    max_failures: int = 0

    def check(self) -> None:
        if self.tau < 1:
            raise ConfigError("tau must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.min_days < 0:
            raise ConfigError("min-days must be >= 0")
        for name in ("links", "countries", "paths", "freq", "regions"):
            path = getattr(self, name)
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"{name} file not found: {path}")
        self.search_params()

    def search_params(self) -> SearchParams:
        try:
            return SearchParams(tau=self.tau, engine=self.engine, max_paths=self.max_paths,
                                queue_discipline=self.queue, grammar=self.grammar,
                                count_device_hop=self.count_device_hop)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def dataset_files(self) -> dict[str, str]:
        names = ("links", "freq", "countries", "paths", "regions")
        return {n: getattr(self, n) for n in names if getattr(self, n) is not None}

    def fingerprint(self, hashes: dict[str, str]) -> str:
        """Hash of everything that changes the records or reports."""
        relevant = asdict(self)
        for key in ("out", "workers", "checkpoint_dir", "max_failures") + tuple(self.dataset_files()):
            relevant.pop(key, None)
        relevant["country_filter"] = sorted(self.country_filter)
        relevant["datasets"] = hashes
        blob = json.dumps(relevant, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Prepared:
    graph: TorGraph
    groups: dict[str, list[int]]
    link_counts: dict[str, int]
    classes: dict
    hashes: dict[str, str]
    regions: dict


def prepare(config: RunConfig) -> Prepared:
    """Parse every dataset and build the graph; raises before any search."""
    config.check()
    hashes = {name: sha256_file(path) for name, path in config.dataset_files().items()}
    raw = load_links(config.links, config.freq, config.window_length)
    stable = filter_stable(raw, config.min_days)
    cmap = load_country_map(config.countries)
    as_paths = load_as_paths(config.paths)
    if not as_paths:
        raise DatasetError("AS-path corpus is empty", config.paths)
    classes = classify(as_paths, stable)
    graph = build(stable, cmap, classes)
    groups = edge_providers_by_country(classes, cmap, graph)
    regions = load_region_map(config.regions)
    return Prepared(graph, groups, {"raw": len(raw), "stable": len(stable)}, classes, hashes, regions)


def validate(config: RunConfig) -> dict:
    """Dry run: dataset parse, graph statistics and pair-count preview."""
    prep = prepare(config)
    hist = class_histogram(prep.classes)
    total = sum(hist.values())
    preview = pair_count_preview(prep.groups)
    if config.country_filter:
        preview = {cc: n for cc, n in preview.items() if cc in set(config.country_filter)}
    return {
        "datasets": prep.hashes,
        "links": prep.link_counts,
        "graph": prep.graph.stats(),
        "class_histogram": hist,
        "class_fractions": {k: (v / total if total else 0.0) for k, v in hist.items()},
        "edge_providers_per_country": {cc: len(m) for cc, m in prep.groups.items()},
        "pair_count_preview": preview,
        "pair_count_total": sum(preview.values()),
    }


# -- workers -----------------------------------------------------------------------

_STATE: dict = {}


def _init_worker(graph: TorGraph, params: SearchParams) -> None:
    _STATE["graph"] = graph
    _STATE["params"] = params


def _evaluate_config(config: SourceConfig, destinations: Sequence[int]) -> dict:
    graph, params = _STATE["graph"], _STATE["params"]
    records, timings, failures = [], [], []
    truncated = 0
    for d in destinations:
        t0 = time.perf_counter()
        try:
            rec, trunc = evaluate_pair(graph, config, d, params)
        except Exception as exc:  # logged and counted, the run goes on
            failures.append(f"{config.country} {config.providers} -> {d}: {exc}")
            continue
        timings.append(time.perf_counter() - t0)
        records.append(rec)
        truncated += trunc
    return {"config": config, "records": records, "timings": timings,
            "failures": failures, "truncated": truncated}


# -- checkpoint --------------------------------------------------------------------

class Checkpoint:
    """Append-only progress log plus a partial records file.

    ``header.json`` holds the config hash; ``progress.jsonl`` gets one line
    per finished configuration with the byte offset that the records file
    had after its rows were flushed.  On reopening, both files are cut back
    to the last complete entry.
    """

    def __init__(self, directory: str, config_hash: str):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.header = self.dir / "header.json"
        self.progress = self.dir / "progress.jsonl"
        self.records_path = self.dir / "records.partial.csv"
        self.entries: list[dict] = []
        self.records: list[RobustnessRecord] = []
        if self.header.exists():
            stored = json.loads(self.header.read_text())
            if stored.get("config_hash") != config_hash:
                raise CheckpointMismatch(
                    f"checkpoint in {self.dir} was written for a different configuration "
                    f"({stored.get('config_hash', '?')[:12]} != {config_hash[:12]}); "
                    "use a fresh checkpoint directory")
            self._recover()
        else:
            tmp = self.header.with_suffix(".tmp")
            tmp.write_text(json.dumps({"version": CHECKPOINT_VERSION, "config_hash": config_hash}))
            os.replace(tmp, self.header)
            self.progress.write_text("")
            self.records_path.write_text("")

    def _recover(self) -> None:
        good = []
        size = 0
        if self.progress.exists():
            with open(self.progress, "rb") as fh:
                for raw in fh:
                    if not raw.endswith(b"\n"):
                        break
                    try:
                        good.append(json.loads(raw))
                    except json.JSONDecodeError:
                        break
                    size += len(raw)
        with open(self.progress, "r+b" if self.progress.exists() else "wb") as fh:
            fh.truncate(size)
        offset = good[-1]["offset"] if good else 0
        if not self.records_path.exists():
            self.records_path.write_text("")
        with open(self.records_path, "r+b") as fh:
            fh.truncate(offset)
        self.entries = good
        with open(self.records_path, newline="") as fh:
            self.records = [_record_from_row(row) for row in csv.reader(fh)]

    def completed(self) -> set[SourceConfig]:
        return {SourceConfig(e["country"], tuple(e["providers"])) for e in self.entries}

    def append(self, result: dict) -> None:
        with open(self.records_path, "a", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for rec in result["records"]:
                writer.writerow(rec.as_row())
            fh.flush()
            os.fsync(fh.fileno())
            offset = fh.tell()
        cfg = result["config"]
        entry = {"country": cfg.country, "providers": list(cfg.providers), "offset": offset,
                 "timings": result["timings"], "failures": result["failures"],
                 "truncated": result["truncated"]}
        with open(self.progress, "a") as fh:
            fh.write(json.dumps(entry) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.entries.append(entry)
        self.records.extend(result["records"])


def _record_from_row(row: list[str]) -> RobustnessRecord:
    cc, p1, p2, d, dev, ep, diff = row
    return RobustnessRecord(SourceConfig(cc, (int(p1), int(p2))), int(d), int(dev), int(ep), int(diff))


# -- run ---------------------------------------------------------------------------

@dataclass
class RunResult:
    status: int
    out: Path
    records: list[RobustnessRecord] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


def plan(prep: Prepared, config: RunConfig) -> list[tuple[SourceConfig, tuple[int, ...]]]:
    countries = sorted(prep.groups)
    if config.country_filter:
        wanted = set(config.country_filter)
        countries = [cc for cc in countries if cc in wanted]
    jobs = []
    nodes = prep.graph
    for cc in countries:
        dests = enumerate_destinations(
            cc, prep.classes, prep.graph.country, nodes, sample_size=config.sample_size,
            seed=config.sample_seed, graph=prep.graph, single_homed=config.single_homed)
        if not dests.destinations:
            log.warning("skipping %s: no foreign destination", cc)
            continue
        for src in enumerate_sources(cc, prep.classes, prep.graph.country, nodes):
            jobs.append((src, dests.destinations))
    return jobs


def run(config: RunConfig) -> RunResult:
    started = time.time()
    prep = prepare(config)
    params = config.search_params()
    config_hash = config.fingerprint(prep.hashes)
    jobs = plan(prep, config)
    log.info("graph: %s; %d source configurations", prep.graph, len(jobs))

    checkpoint = Checkpoint(config.checkpoint_dir, config_hash) if config.checkpoint_dir else None
    done = checkpoint.completed() if checkpoint else set()
    entries: list[dict] = list(checkpoint.entries) if checkpoint else []
    records: list[RobustnessRecord] = list(checkpoint.records) if checkpoint else []
    pending = [job for job in jobs if job[0] not in done]
    if done:
        log.info("resuming: %d configurations already done, %d to go", len(done), len(pending))

    progress = {"n": len(done)}

    def collect(result: dict) -> None:
        for msg in result["failures"]:
            log.error("pair failed: %s", msg)
        if checkpoint:
            checkpoint.append(result)
        else:
            entries.append({"timings": result["timings"], "failures": result["failures"],
                            "truncated": result["truncated"]})
            records.extend(result["records"])
        progress["n"] += 1
        if progress["n"] % 50 == 0 or progress["n"] == len(jobs):
            log.info("%d/%d configurations, %.1fs elapsed", progress["n"], len(jobs), time.time() - started)

    if config.workers == 1:
        _init_worker(prep.graph, params)
        for src, dests in pending:
            collect(_evaluate_config(src, dests))
    else:
        with ProcessPoolExecutor(config.workers, initializer=_init_worker,
                                 initargs=(prep.graph, params)) as pool:
            futures = [pool.submit(_evaluate_config, src, dests) for src, dests in pending]
            for fut in as_completed(futures):
                collect(fut.result())

    if checkpoint:
        entries, records = checkpoint.entries, checkpoint.records
    records.sort()
    timings = [t for e in entries for t in e["timings"]]
    failures = [f for e in entries for f in e["failures"]]
    truncated = sum(e["truncated"] for e in entries)

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    unmapped = write_reports(out, records, prep.regions, config)
    manifest = {
        "version": __version__,
        "config": _jsonable(asdict(config)),
        "config_hash": config_hash,
        "datasets": prep.hashes,
        "links": prep.link_counts,
        "graph": prep.graph.stats(),
        "search": {"tau": params.tau, "engine": params.engine.value, "grammar": params.grammar.value,
                   "queue": params.queue_discipline.value, "max_paths": params.max_paths,
                   "count_device_hop": params.count_device_hop},
        "source_configurations": len(jobs),
        "records": len(records),
        "expected_records": sum(len(d) for _, d in jobs),
        "failures": len(failures),
        "failure_messages": failures[:100],
        "truncated_pairs": truncated,
        "timing": timing_summary(timings),
        "elapsed_seconds": time.time() - started,
        "robustness_threshold": ROBUSTNESS_THRESHOLD,
        "region_aggregation": "raw per-configuration values of member countries are concatenated",
        "countries_without_region": unmapped,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    status = EXIT_PARTIAL if len(failures) > config.max_failures else EXIT_OK
    return RunResult(status, out, records, manifest)


def timing_summary(timings: Sequence[float]) -> dict:
    if not timings:
        return {"pairs": 0}
    xs = sorted(timings)
    return {"pairs": len(xs), "median_s": statistics.median(xs), "p95_s": quantile(xs, 0.95),
            "max_s": xs[-1], "total_s": math.fsum(xs)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_reports(out: Path, records: list[RobustnessRecord], regions: dict, config: RunConfig) -> list[str]:
    """Write records, series and boxplot files; return countries lacking a region."""
    with open(out / "records.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for rec in records:
            w.writerow(rec.as_row())

    series = {view: build_series(records, view) for view in View}
    with open(out / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country", "provider1", "provider2", "device", "ep", "diff"])
        rows = zip(*(series[v] for v in View))
        for per_view in rows:
            dev = per_view[0]
            for i, cfg in enumerate(dev.configs):
                w.writerow([cfg.country, *cfg.providers, *(repr(s.values[i]) for s in per_view)])
    (out / "series.json").write_text(json.dumps(
        {v.value: {s.country: list(s.values) for s in series[v]} for v in View}, indent=1) + "\n")

    countries = sorted({rec.config.country for rec in records})
    unmapped = [cc for cc in countries if cc not in regions]
    if unmapped:
        log.warning("no region mapping for %s; left out of region groupings", ", ".join(unmapped))
    for view in View:
        for grouping in Grouping:
            members = series[view]
            if grouping is Grouping.COUNTRY:
                fraction = config.outlier_fraction
            else:
                fraction = config.region_outlier_fraction
                members = [s for s in members if s.country in regions]
            groups = aggregate(members, regions, grouping, fraction)
            _write_boxplots(out / f"boxplot_{view.value}_{grouping.value}", groups)
    return unmapped


BOXPLOT_FIELDS = ["group", "n", "min", "q1", "median", "q3", "max", "mean",
                  "outlier_fraction", "outliers", "above_threshold"]


def _write_boxplots(stem: Path, groups) -> None:
    rows = []
    for name, stats in groups:
        d = stats.to_dict()
        d["group"] = name
        rows.append(d)
    with open(stem.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BOXPLOT_FIELDS)
        for d in rows:
            w.writerow([d["group"], d["n"], *(repr(d[k]) for k in ("min", "q1", "median", "q3", "max", "mean",
                                                                   "outlier_fraction")),
                        ";".join(repr(x) for x in d["outliers"]), int(d["above_threshold"])])
    stem.with_suffix(".json").write_text(
        json.dumps([{k: d[k] for k in BOXPLOT_FIELDS} for d in rows], indent=1) + "\n")
