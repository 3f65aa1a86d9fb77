"""Command-line entry point.

Sub-commands: train, train-parallel, sweep, evaluate, synth-data, report.
Exit codes: 0 success, 1 usage error, 2 config/validation error,
3 runtime/training failure.  All outputs are confined to the --out
directory.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import reporting, trainer
from .config import RunConfig, load_config
from .drqn_agent import load_checkpoint
from .errors import ConfigError, DefectError, TrainingError, ValidationError
from .timeseries import SCENARIO_FILE_NAME, save_scenario, synthesize_scenario

log = logging.getLogger("cobess")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures raise instead of exiting 2."""

    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: {message}")


def build_parser() -> _Parser:
    parser = _Parser(prog="cobess",
                     description="Co-optimize market bidding and battery size.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: _Parser, config_required: bool = True) -> None:
        if config_required:
            p.add_argument("--config", required=True, help="run config (JSON)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's training seed")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("train", help="serial co-optimization run")
    common(p)

    p = sub.add_parser("train-parallel", help="multi-process run (workers from config)")
    common(p)

    p = sub.add_parser("sweep", help="fixed-design trainings over a capacity grid")
    common(p)
    p.add_argument("--grid", required=True,
                   help="comma-separated normalized capacities, e.g. 0.2,0.6,1.0")
    p.add_argument("--repeats", type=int, default=3,
                   help="independent runs per grid point (default 3)")

    p = sub.add_parser("evaluate", help="greedy evaluation of a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True, help="checkpoint .npz path")
    p.add_argument("--design", type=float, default=None,
                   help="normalized capacity (default: config fixed design or mu0)")

    p = sub.add_parser("synth-data", help="write a synthetic scenario CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slots", type=int, default=168)
    p.add_argument("--config", default=None,
                   help="optional config supplying the synthetic profile")
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("report", help="recompute summary tables from metrics")
    p.add_argument("--metrics", required=True, help="metrics directory to read")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")

    return parser


def _load(args) -> RunConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = replace(config,
                         training=replace(config.training, seed=args.seed))
    return config


def _cmd_train(args) -> int:
    config = _load(args)
    metrics = trainer.train(config, args.out)
    print(f"trained {len(metrics.episodes)} episodes in "
          f"{metrics.wall_seconds:.1f}s ({metrics.episodes_per_second:.1f}/s); "
          f"mu: {metrics.mu0} -> {metrics.final_mu}")
    return 0


def _cmd_train_parallel(args) -> int:
    config = _load(args)
    metrics = trainer.train_parallel(config, args.out)
    print(f"trained {len(metrics.episodes)} episodes on "
          f"{config.training.workers} workers in {metrics.wall_seconds:.1f}s "
          f"({metrics.episodes_per_second:.1f}/s); "
          f"mu: {metrics.mu0} -> {metrics.final_mu}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load(args)
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
    except ValueError as exc:
        raise _UsageError(f"--grid: {exc}") from exc
    result = trainer.sweep(config, grid, repeats=args.repeats, out_dir=args.out)
    print(f"swept {len(grid)} designs x {args.repeats} repeats; "
          f"best design {result.argmax_omega()}")
    return 0


def _cmd_evaluate(args) -> int:
    config = _load(args)
    network = load_checkpoint(args.checkpoint)
    design = args.design
    if design is None:
        design = (config.design.fixed_design
                  if config.design.fixed_design is not None
                  else config.design.mu0)
    data = config.load_scenario_data()
    battery = config.battery.spec(design * network.norm.design_reference)
    market = config.market.params(data.slot_duration_h)
    rng = np.random.default_rng([config.training.seed, 4, 0])
    result = trainer.evaluate(network, design, data, battery, market, rng,
                              config.training.initial_soc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    row = trainer.EvaluationRow(0, design, result.sum_reward,
                                result.baseline_revenue,
                                result.market_revenue, result.net_revenue,
                                result.deviation_penalty, result.degradation,
                                result.negative_flag)
    trainer._write_rows(out / trainer.EVAL_FILE,
                        trainer._CSV_HEADERS[trainer.EVAL_FILE], [row])
    print(f"design {design}: reward {result.sum_reward}, "
          f"net revenue {result.net_revenue} "
          f"(baseline {result.baseline_revenue})")
    return 0


def _cmd_synth_data(args) -> int:
    profile = None
    duration = None
    if args.config is not None:
        config = load_config(args.config)
        profile = config.synthetic_profile
        duration = config.scenario.slot_duration_h
    data = synthesize_scenario(args.seed, args.slots, profile, duration)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / SCENARIO_FILE_NAME
    save_scenario(data, path)
    print(f"wrote {len(data)} slots to {path}")
    return 0


def _cmd_report(args) -> int:
    result = reporting.report(args.metrics, args.out)
    gap = result.max_identity_gap
    print(f"report: {len(result.decomposition)} evaluations "
          f"(max identity gap {gap:.3e}), {len(result.quartiles)} sweep "
          f"designs, {len(result.mu_trajectory)} design updates; "
          f"tables: {', '.join(result.written)}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "train-parallel": _cmd_train_parallel,
    "sweep": _cmd_sweep,
    "evaluate": _cmd_evaluate,
    "synth-data": _cmd_synth_data,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:   # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s")
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, DefectError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
