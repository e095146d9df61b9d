"""Experiment orchestration: single runs, paired comparisons, fixed-body baselines.

The orchestrator owns the generation barrier and is the only writer of a
run's event log; workers only learn and evaluate.
"""

from __future__ import annotations

import csv
import json
import math
import os
import platform
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import records
from .analysis import delta_of_delta, generation_stats, learning_delta
from .config import ExperimentConfig, to_ini
from .evolution import DARWINIAN, LAMARCKIAN, evolve
from .records import EventWriter, RunRecord
from .simulation import simulate


def resolve_parallelism(n: int) -> int:
    return n if n > 0 else (os.cpu_count() or 1)


def run_experiment(
    cfg: ExperimentConfig,
    run_dir: str | Path | None = None,
    tag: str = "",
    progress=None,
) -> tuple[RunRecord, Path]:
    """Run one experiment, streaming events into ``run_dir`` (a fresh subdirectory by default)."""
    evo = cfg.evolution
    run_dir = Path(run_dir) if run_dir else records.new_run_dir(cfg.out, evo.mode, evo.seed, tag)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.ini").write_text(to_ini(cfg))
    record = RunRecord(cfg)
    writer = EventWriter(run_dir / records.EVENTS)
    try:
        writer.write(next(record.events()))
        _drive(cfg, record, writer, run_dir, resume=None, progress=progress)
    except OSError as exc:
        raise records.RecordError(f"run {run_dir.name}: {exc}") from exc
    finally:
        writer.close()
    return record, run_dir


def resume_experiment(run_dir: str | Path, parallelism: int | None = None, progress=None) -> tuple[RunRecord, Path]:
    """Continue an interrupted run from its last generation barrier."""
    run_dir = Path(run_dir)
    log = run_dir / records.EVENTS
    record, barrier = records.read_events(log, allow_partial=True)
    cfg = record.config
    if (run_dir / "config.ini").exists():
        from .config import load as load_config

        saved = load_config(run_dir / "config.ini")
        cfg = replace(saved, parallelism=saved.parallelism if parallelism is None else parallelism)
        record.config = cfg
    if record.complete:
        return record, run_dir
    if not record.generations:
        raise records.RecordError(f"run {run_dir.name}: nothing to resume, the initial generation never finished")
    with open(log, "r+b") as fh:
        fh.truncate(barrier)
    writer = EventWriter(log, append=True)
    try:
        state = (record.population(), dict(record.individuals), record.last_generation)
        _drive(cfg, record, writer, run_dir, resume=state, progress=progress)
    finally:
        writer.close()
    return record, run_dir


def _drive(cfg, record: RunRecord, writer: EventWriter, run_dir: Path, resume, progress) -> None:
    started = time.time()

    def on_generation(rec, newborns):
        for ind in newborns:
            record.individuals[ind.id] = ind
            writer.write(records.individual_event(ind))
        record.generations.append(rec)
        writer.write(records.generation_event(rec))
        if progress:
            progress(rec)

    parallelism = resolve_parallelism(cfg.parallelism)
    evolve(cfg.evolution, parallelism=parallelism, on_generation=on_generation, resume=resume)
    record.complete = True
    writer.write({"event": "run_end", "generations": record.last_generation})
    records.write_summaries(record, run_dir)
    if cfg.trace_trajectories:
        write_trajectories(record, run_dir / "trajectories")
    meta = {
        "wall_time_s": time.time() - started,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "parallelism": parallelism,
        "python": platform.python_version(),
        "resumed_from_generation": resume[2] if resume else None,
    }
    (run_dir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def write_trajectories(record: RunRecord, folder: Path) -> None:
    """Trajectory CSV of every final-population robot driven by its learned weights."""
    folder.mkdir(parents=True, exist_ok=True)
    evo = record.config.evolution
    for ind in record.population():
        traj = simulate(ind.tree, ind.learned_weights, evo.task, evo.surrogate)
        traj.to_csv(folder / f"individual-{ind.id}.csv")


# -- summaries ----------------------------------------------------------------


@dataclass(frozen=True)
class RunSummary:
    seed: int
    mode: str
    final_mean_fitness: float
    final_max_fitness: float
    late_fitness_before: float  # newborn fitness before learning, second half of the run
    final_diversity: float  # population diversity over the last three generations
    mean_learning_delta: float

    def as_row(self) -> list:
        return [self.seed, self.mode, *(repr(float(v)) for v in (
            self.final_mean_fitness, self.final_max_fitness, self.late_fitness_before,
            self.final_diversity, self.mean_learning_delta))]


SUMMARY_HEADER = ["seed", "mode", "final_mean_fitness", "final_max_fitness",
                  "late_fitness_before", "final_diversity", "mean_learning_delta"]


def _nanmean(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    return float(np.mean(values)) if values else math.nan


def summarize(record: RunRecord) -> RunSummary:
    gens = record.generations
    last = gens[-1].generation
    pop = record.population()
    fit = [p.fitness_after for p in pop]
    newborn_gens = [g for g in gens if g.generation >= 1]
    late = [g.stats.mean_fitness_before for g in gens if g.generation >= max(1, last // 2)]
    deltas = [learning_delta(record.individuals[i]) for g in newborn_gens for i in g.newborns]
    return RunSummary(
        record.seed,
        record.config.evolution.mode,
        float(np.mean(fit)),
        float(np.max(fit)),
        _nanmean(late),
        float(np.mean([g.stats.diversity for g in gens[-3:]])),
        _nanmean(deltas),
    )


def compare(cfg: ExperimentConfig, seeds, out: str | Path | None = None, progress=None):
    """Paired Lamarckian/Darwinian runs with shared seeds; writes ``summary.csv``."""
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for seed in seeds:
        for mode in (LAMARCKIAN, DARWINIAN):
            run_cfg = replace(cfg.with_evolution(mode=mode, seed=seed), out=str(out))
            record, _ = run_experiment(run_cfg, progress=progress)
            summaries.append(summarize(record))
    path = out / "summary.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for s in summaries:
            w.writerow(s.as_row())
    return summaries, path


def fixed_body_baseline(cfg: ExperimentConfig, run_dir=None, progress=None) -> tuple[RunRecord, Path]:
    """Same loop with bodies frozen to the initial population's bodies."""
    return run_experiment(cfg.with_evolution(freeze_bodies=True), run_dir, tag="fixed", progress=progress)


# -- log replay ---------------------------------------------------------------


def replay_stats(record: RunRecord):
    """Recompute every generation's statistics from the logged individuals alone."""
    return [
        generation_stats(rec.generation, record.population(k), record.newborns(k), record.individuals)
        for k, rec in enumerate(record.generations)
    ]


def learning_deltas(record: RunRecord) -> list[float]:
    """Mean learning delta of each generation's newborns, from the log."""
    return [
        float(np.mean([learning_delta(record.individuals[i]) for i in rec.newborns]))
        for rec in record.generations
    ]


def delta_of_delta_from_logs(evolved_dir, fixed_dir) -> float:
    evolved = records.load(evolved_dir)
    fixed = records.load(fixed_dir)
    return delta_of_delta(learning_deltas(evolved), learning_deltas(fixed))


def _same(a: float, b: float) -> bool:
    return a == b or (math.isnan(a) and math.isnan(b))


def analyze(run_dir: str | Path) -> dict:
    """Recompute metrics from a run's event log and check them against the logged values."""
    run_dir = Path(run_dir)
    record = records.load(run_dir)
    replayed = replay_stats(record)
    mismatches = [
        (rec.generation, name)
        for rec, stats in zip(record.generations, replayed)
        for name in stats.__dataclass_fields__
        if not _same(getattr(rec.stats, name), getattr(stats, name))
    ]
    fields_ = list(replayed[0].__dataclass_fields__)
    with open(run_dir / "analysis.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields_)
        for s in replayed:
            w.writerow([repr(getattr(s, f)) if isinstance(getattr(s, f), float) else getattr(s, f) for f in fields_])
    return {
        "run": run_dir.name,
        "generations": len(replayed),
        "summary": summarize(record),
        "learning_deltas": learning_deltas(record),
        "mismatches": mismatches,
    }


# -- budget -------------------------------------------------------------------


def budget_report(cfg: ExperimentConfig) -> dict:
    evo = cfg.evolution
    return {
        "evolution_evaluations": evo.evaluations,
        "learning_assessments_per_newborn": evo.learning.budget,
        "assessments_per_run": evo.assessments,
        "assessments_paired_comparison": 2 * evo.assessments,
    }
