"""Command-line entry point: ``pathdiv run | validate | synth``.

Settings come from flags only; environment variables are not consulted.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .ingest import DEFAULT_MIN_DAYS, DEFAULT_WINDOW_LENGTH, DatasetError
from .metrics import COUNTRY_OUTLIER_FRACTION, REGION_OUTLIER_FRACTION
from .pipeline import EXIT_CONFIG, ConfigError, RunConfig, run, validate

log = logging.getLogger("pathdiv")


def _dataset_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("datasets")
    g.add_argument("--links", required=True, help="AS relationship file (a|b|rel)")
    g.add_argument("--freq", help="link frequency file (a|b|days)")
    g.add_argument("--country-map", required=True, dest="countries", help="ASN,CC file")
    g.add_argument("--as-paths", required=True, dest="paths", help="AS-path corpus")
    g.add_argument("--regions", help="CC,macro_region,position file (default: bundled table)")
    g.add_argument("--min-days", type=int, default=DEFAULT_MIN_DAYS,
                   help="keep links seen on more than this many days (default %(default)s)")
    g.add_argument("--window-length", type=int, default=DEFAULT_WINDOW_LENGTH,
                   help="observation window in days (default %(default)s)")
    g.add_argument("--countries", type=lambda s: [c.strip() for c in s.split(",") if c.strip()],
                   default=[], dest="country_filter", help="comma separated country codes")


def _search_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("search")
    g.add_argument("--tau", type=int, default=6, help="maximum hops (default %(default)s)")
    g.add_argument("--engine", choices=["strict_enum", "paper_literal"], default="strict_enum")
    g.add_argument("--grammar", choices=["strict", "paper_literal"], default="strict")
    g.add_argument("--queue", choices=["fifo", "lifo"], default="fifo",
                   help="queue discipline of the paper_literal engine")
    g.add_argument("--max-paths", type=int, default=10_000)
    g.add_argument("--count-device-hop", action="store_true",
                   help="charge the device->provider hop against tau")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathdiv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="compute robustness records and reports")
    _dataset_args(p_run)
    _search_args(p_run)
    g = p_run.add_argument_group("execution")
    g.add_argument("--out", default="out", help="output directory")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--checkpoint-dir", help="resume from / record progress in this directory")
    g.add_argument("--outlier-fraction", type=float, default=COUNTRY_OUTLIER_FRACTION,
                   help="tail fraction left out of country whiskers (default %(default)s)")
    g.add_argument("--region-outlier-fraction", type=float, default=REGION_OUTLIER_FRACTION)
    g.add_argument("--sample-size", type=int, help="seeded destination subsample per country")
    g.add_argument("--sample-seed", type=int, default=0)
    g.add_argument("--single-homed", action="store_true",
                   help="only destinations with exactly one provider")
    g.add_argument("--max-failures", type=int, default=0,
                   help="pair failures tolerated before exiting with status 2")

    p_val = sub.add_parser("validate", help="parse datasets and preview the workload")
    _dataset_args(p_val)
    _search_args(p_val)

    p_syn = sub.add_parser("synth", help="write a synthetic scale-free dataset")
    p_syn.add_argument("--out", required=True)
    p_syn.add_argument("--nodes", type=int, default=21469)
    p_syn.add_argument("--links", type=int, default=86983)
    p_syn.add_argument("--n-countries", type=int, default=20)
    p_syn.add_argument("--n-paths", type=int, default=50_000)
    p_syn.add_argument("--seed", type=int, default=0)
    return parser


def _config_from(args: argparse.Namespace) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in vars(args).items() if k in fields})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.command == "synth":
        from .synth import write_dataset
        try:
            files = write_dataset(args.out, args.nodes, args.links, args.n_countries, args.n_paths, args.seed)
        except (ValueError, OSError) as exc:
            log.error("%s", exc)
            return EXIT_CONFIG
        print(json.dumps({k: str(v) for k, v in files.items()}, indent=2))
        return 0

    try:
        config = _config_from(args)
        if args.command == "validate":
            print(json.dumps(validate(config), indent=2, sort_keys=True))
            return 0
        result = run(config)
    except (ConfigError, DatasetError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    m = result.manifest
    print(f"{m['records']} records from {m['source_configurations']} configurations, "
          f"{m['failures']} failures; reports in {result.out}")
    return result.status


if __name__ == "__main__":
    sys.exit(main())
