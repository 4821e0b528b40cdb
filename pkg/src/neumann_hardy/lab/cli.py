"""Command line entry point: ``lab list`` and ``lab run <experiment>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ExperimentConfig
from .experiments import default_config, list_experiments, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Neumann Laplacian numerical lab")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list registered experiments")
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment")
    run.add_argument("--config", help="JSON file laid over the experiment defaults")
    run.add_argument("--out", help="output directory (default: runs/<experiment>)")
    run.add_argument("--seed", type=int, help="seed for random inputs")
    show = sub.add_parser("defaults", help="print the default config of an experiment")
    show.add_argument("experiment")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        for name in list_experiments():
            print(name)
        return 0
    try:
        defaults = default_config(args.experiment)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    if args.command == "defaults":
        print(json.dumps(defaults, indent=2))
        return 0
    try:
        if args.config:
            cfg = ExperimentConfig.from_json(args.config, defaults)
        else:
            cfg = ExperimentConfig.from_dict({}, defaults)
        if cfg.experiment != args.experiment:
            raise ValueError(f"config names experiment {cfg.experiment!r}, command line {args.experiment!r}")
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.out = args.out or cfg.out or f"runs/{args.experiment}"
        report = run_experiment(cfg)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for m in report.metrics:
        verdict = "PASS" if m.passed else "FAIL"
        print(f"{verdict}  {m.criterion:4s} {m.name}: {m.value:.6g} {m.op} {m.tolerance:g}")
    print(f"{args.experiment}: {'all passed' if report.passed else 'FAILED'} ({report.wall_time:.1f}s) -> {cfg.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
