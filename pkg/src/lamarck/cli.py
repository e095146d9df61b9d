"""Command line interface: ``lamarck run | compare | baseline | analyze | validate | budget | config``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import records
from .config import ConfigError, ExperimentConfig, load, to_ini
from .evolution import DARWINIAN, LAMARCKIAN


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file; flags given below override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=(LAMARCKIAN, DARWINIAN))
    p.add_argument("--generations", type=int)
    p.add_argument("--mu", type=int)
    p.add_argument("--lambda", dest="lam", type=int)
    p.add_argument("--out", help="parent directory for run folders")
    p.add_argument("--parallelism", type=int, help="worker processes (0 = all cores)")
    p.add_argument("--trace-trajectories", action="store_true", default=None,
                   help="write trajectory CSVs for the final population")


def _config_from(args) -> ExperimentConfig:
    cfg = load(args.config) if args.config else ExperimentConfig()
    evo = {k: v for k, v in (("seed", args.seed), ("mode", args.mode), ("generations", args.generations),
                             ("mu", args.mu), ("lam", args.lam)) if v is not None}
    if evo:
        try:
            cfg = cfg.with_evolution(**evo)
        except ValueError as exc:
            raise ConfigError(f"command line: {exc}") from exc
    top = {k: v for k, v in (("out", args.out), ("parallelism", args.parallelism),
                             ("trace_trajectories", args.trace_trajectories)) if v is not None}
    return replace(cfg, **top)


def _progress(rec) -> None:
    s = rec.stats
    print(f"  gen {rec.generation:3d}  mean {s.mean_fitness:+.4f}  max {s.max_fitness:+.4f}  "
          f"diversity {s.diversity:.3f}  delta {s.mean_learning_delta:+.4f}", flush=True)


def _cmd_run(args) -> int:
    from .experiment import resume_experiment, run_experiment

    if args.resume:
        record, run_dir = resume_experiment(args.resume, args.parallelism, progress=_progress)
    else:
        record, run_dir = run_experiment(_config_from(args), progress=_progress)
    print(f"run written to {run_dir} ({record.last_generation} generations)")
    return 0


def _cmd_baseline(args) -> int:
    from .experiment import fixed_body_baseline, learning_deltas

    record, run_dir = fixed_body_baseline(_config_from(args), progress=_progress)
    print(f"fixed-body baseline written to {run_dir}")
    print("learning delta per generation: " + ", ".join(f"{d:+.4f}" for d in learning_deltas(record)))
    return 0


def _cmd_compare(args) -> int:
    from .experiment import compare

    cfg = _config_from(args)
    first = cfg.seed
    summaries, path = compare(cfg, range(first, first + args.seeds), progress=None)
    for s in summaries:
        print(f"seed {s.seed}  {s.mode:<10}  final mean {s.final_mean_fitness:+.4f}  "
              f"fitness before (late) {s.late_fitness_before:+.4f}  diversity {s.final_diversity:.3f}")
    print(f"summary written to {path}")
    return 0


def _cmd_analyze(args) -> int:
    from .experiment import analyze, delta_of_delta_from_logs

    result = analyze(args.run_dir)
    s = result["summary"]
    print(f"{result['run']}: {result['generations']} generations, final mean fitness {s.final_mean_fitness:+.4f}, "
          f"final diversity {s.final_diversity:.3f}")
    print("learning delta per generation: " + ", ".join(f"{d:+.4f}" for d in result["learning_deltas"]))
    if result["mismatches"]:
        print(f"logged statistics disagree with the replay: {result['mismatches']}", file=sys.stderr)
        return 1
    print("logged statistics match the replay")
    if args.fixed:
        print(f"delta of delta (evolved - fixed): {delta_of_delta_from_logs(args.run_dir, args.fixed):+.6f}")
    return 0


def _cmd_validate(args) -> int:
    from .validate import run_all

    return 0 if run_all() else 1


def _cmd_budget(args) -> int:
    from .experiment import budget_report

    for key, value in budget_report(_config_from(args)).items():
        print(f"{key:34s} {value:>10,}")
    return 0


def _cmd_config(args) -> int:
    sys.stdout.write(to_ini(_config_from(args)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lamarck", description="Body-brain evolution with lifetime learning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment")
    _add_run_flags(p)
    p.add_argument("--resume", metavar="RUN_DIR", help="continue an interrupted run from its last generation")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("compare", help="paired Lamarckian/Darwinian runs over shared seeds")
    _add_run_flags(p)
    p.add_argument("--seeds", type=int, default=5, help="number of seeds, starting at --seed (default 0)")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("baseline", help="fixed-body control run")
    _add_run_flags(p)
    p.set_defaults(fn=_cmd_baseline)

    p = sub.add_parser("analyze", help="recompute metrics from a run's event log")
    p.add_argument("run_dir")
    p.add_argument("--fixed", metavar="RUN_DIR", help="fixed-body run for the delta-of-delta statistic")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("validate", help="run the invariant suite")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("budget", help="print the evaluation budget of a configuration")
    _add_run_flags(p)
    p.set_defaults(fn=_cmd_budget)

    p = sub.add_parser("config", help="print the effective configuration as INI")
    _add_run_flags(p)
    p.set_defaults(fn=_cmd_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except records.RecordError as exc:
        print(f"run record error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
