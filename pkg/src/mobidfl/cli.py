"""Command line entry point: ``run``, ``sweep``, ``aggregate``, ``cluster-report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .config import SimulationConfig
from .errors import ConfigError, DatasetError, MobiDFLError, NumericalError
from .metrics import FORMATS, aggregate, read_metrics, write_metrics, write_summary
from .simulation import SWEEP_AXES, build_world, run_simulation, sweep

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATASET = 3
EXIT_NUMERICAL = 4


def _load_config(args: argparse.Namespace) -> SimulationConfig:
    cfg = SimulationConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.replace(master_seed=args.seed)
    return cfg.validate()


def parse_value(text: str) -> Any:
    text = text.strip()
    if text.lower() == "inf":
        return "inf"
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _sweep_path(out: Path, axis: str, value: Any) -> Path:
    return out.with_name(f"{out.stem}_{axis}-{value}{out.suffix}")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    records = run_simulation(cfg)
    write_metrics(records, args.out, args.format, num_clients=cfg.num_clients)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    values = [parse_value(v) for v in args.values.split(",") if v.strip()]
    result = sweep(cfg, args.axis, values)
    for value, records in result.outputs.items():
        path = _sweep_path(Path(args.out), args.axis, value)
        write_metrics(records, path, args.format, num_clients=cfg.num_clients)
        print(f"{args.axis}={value}: {path}")
    for value, exc in result.errors.items():
        print(f"{args.axis}={value}: rejected ({exc})", file=sys.stderr)
    return EXIT_OK if result.outputs else EXIT_CONFIG


def cmd_aggregate(args: argparse.Namespace) -> int:
    summaries = {str(p): aggregate(read_metrics(p)) for p in args.files}
    write_summary(summaries, args.out)
    return EXIT_OK


def cmd_cluster_report(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    # centers depend only on the static clients, so build the world as if running dcm
    world = build_world(cfg.replace(pattern="dcm", num_mobile=min(cfg.num_mobile, cfg.num_clients - 1)), args.run)
    centers = world.planner.centers
    print(f"grid {cfg.grid_size}x{cfg.grid_size}, comm_radius {cfg.comm_radius}, "
          f"{cfg.num_clients - len(world.mobile)} static clients, {len(centers)} centers")
    for n, (loc, ids) in enumerate(zip(centers.centers, centers.covered), start=1):
        print(f"center {n}: ({loc.p}, {loc.q}) covers {sorted(ids)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobidfl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out: bool = True) -> None:
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        if out:
            p.add_argument("--out", required=True, help="metrics output path")
            p.add_argument("--format", choices=FORMATS, default="csv")

    p = sub.add_parser("run", help="run one configuration")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a configuration over values of one parameter")
    common(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma separated, e.g. 1,2,3,4 or 5,inf")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("aggregate", help="mean and std across Monte Carlo runs")
    p.add_argument("files", nargs="+", help="metrics files written by run/sweep")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("cluster-report", help="print greedy cluster centers without training")
    common(p, out=False)
    p.add_argument("--run", type=int, default=0, help="Monte Carlo run index")
    p.set_defaults(func=cmd_cluster_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MobiDFLError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
