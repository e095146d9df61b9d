"""Run records: newline-delimited JSON event log plus CSV summaries.

Layout of one run directory::

    events.ndjson     run_start, individual*, generation, ..., run_end
    generations.csv   per-generation statistics
    traits.csv        eight body traits per individual
    config.ini        the full configuration, runtime knobs included
    meta.json         wall time and host facts (the only non-deterministic file)

Each event is one JSON object per line written with sorted keys, so the log
is a pure function of (config, seed). Individuals are written when they pass
a generation barrier and never change afterwards.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import TRAIT_NAMES, GenerationStats, traits
from .brain import BrainGenotype
from .config import ExperimentConfig, from_plain, to_plain
from .cppn import CppnGenome
from .evolution import GenerationRecord, Individual
from .morphology import ModuleTree

FORMAT = 1
EVENTS = "events.ndjson"


class RecordError(RuntimeError):
    """Problem reading or writing a run record; the message names the run."""


class RecordCorruptError(RecordError):
    pass


class RecordVersionError(RecordError):
    pass


def _dumps(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


def individual_event(ind: Individual) -> dict:
    return {
        "event": "individual",
        "id": ind.id,
        "parents": list(ind.parents),
        "generation_born": ind.generation_born,
        "body": ind.body.to_dict(),
        "brain": ind.brain.to_dict(),
        "tree": ind.tree.to_dict(),
        "fitness_before": ind.fitness_before,
        "fitness_after": ind.fitness_after,
        "learned_weights": [float(w) for w in ind.learned_weights],
        "history": [[int(i), float(r)] for i, r in ind.history],
    }


def individual_from_event(ev: dict) -> Individual:
    ind = Individual(
        int(ev["id"]),
        tuple(int(p) for p in ev["parents"]),
        CppnGenome.from_dict(ev["body"]),
        BrainGenotype.from_dict(ev["brain"]),
        ModuleTree.from_dict(ev["tree"]),
        int(ev["generation_born"]),
    )
    ind.fitness_before = float(ev["fitness_before"])
    ind.fitness_after = float(ev["fitness_after"])
    ind.learned_weights = np.array(ev["learned_weights"], dtype=float)
    ind.history = [(int(i), float(r)) for i, r in ev["history"]]
    return ind


def generation_event(rec: GenerationRecord) -> dict:
    return {
        "event": "generation",
        "generation": rec.generation,
        "population": list(rec.population),
        "newborns": list(rec.newborns),
        "stats": rec.stats.as_dict(),
    }


def generation_from_event(ev: dict) -> GenerationRecord:
    return GenerationRecord(
        int(ev["generation"]),
        tuple(ev["population"]),
        tuple(ev["newborns"]),
        GenerationStats(**ev["stats"]),
    )


@dataclass
class RunRecord:
    config: ExperimentConfig
    individuals: dict[int, Individual] = field(default_factory=dict)
    generations: list[GenerationRecord] = field(default_factory=list)
    complete: bool = False

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def last_generation(self) -> int:
        return self.generations[-1].generation if self.generations else -1

    def population(self, generation: int | None = None) -> list[Individual]:
        rec = self.generations[-1] if generation is None else self.generations[generation]
        return [self.individuals[i] for i in rec.population]

    def newborns(self, generation: int) -> list[Individual]:
        return [self.individuals[i] for i in self.generations[generation].newborns]

    def events(self):
        yield {"event": "run_start", "format": FORMAT, "config": to_plain(self.config), "seed": self.seed}
        for rec in self.generations:
            for i in rec.newborns:
                yield individual_event(self.individuals[i])
            yield generation_event(rec)
        if self.complete:
            yield {"event": "run_end", "generations": self.last_generation}

    def lines(self) -> list[str]:
        return [_dumps(e) for e in self.events()]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunRecord):
            return NotImplemented
        return self.lines() == other.lines()


class EventWriter:
    """Single writer for a run's event log."""

    def __init__(self, path: Path, append: bool = False):
        self.path = Path(path)
        self._fh = open(self.path, "a" if append else "w", encoding="utf-8", newline="\n")

    def write(self, event: dict) -> None:
        self._fh.write(_dumps(event) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def read_events(path: str | Path, allow_partial: bool = False):
    """Parse an event log into ``(record, barrier_offset)``.

    ``barrier_offset`` is the byte offset just past the last generation event,
    where a resumed run continues writing. Unless ``allow_partial`` is set, a
    log that stops mid-line or without ``run_end`` is reported as corrupt.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise RecordError(f"cannot read run log {path}: {exc}") from exc

    record: RunRecord | None = None
    pending: dict[int, Individual] = {}
    offset = 0
    barrier = 0
    while offset < len(raw):
        end = raw.find(b"\n", offset)
        if end < 0:
            if allow_partial:
                break
            raise RecordCorruptError(f"{path}: truncated event at byte offset {offset} (no line terminator)")
        try:
            ev = json.loads(raw[offset:end].decode("utf-8"))
            kind = ev["event"]
        except (ValueError, KeyError, TypeError) as exc:
            if allow_partial and record is not None:
                break
            raise RecordCorruptError(f"{path}: unreadable event at byte offset {offset}: {exc}") from exc

        try:
            if record is None:
                if kind != "run_start":
                    raise RecordCorruptError(f"{path}: first event at byte offset {offset} is {kind!r}, expected run_start")
                if ev.get("format") != FORMAT:
                    raise RecordVersionError(f"{path}: log format {ev.get('format')!r}, this version reads {FORMAT}")
                record = RunRecord(from_plain(ev["config"]))
            elif kind == "individual":
                ind = individual_from_event(ev)
                pending[ind.id] = ind
            elif kind == "generation":
                rec = generation_from_event(ev)
                if rec.generation != record.last_generation + 1:
                    raise RecordCorruptError(f"{path}: generation {rec.generation} out of order at byte offset {offset}")
                missing = [i for i in rec.newborns if i not in pending]
                if missing:
                    raise RecordCorruptError(f"{path}: generation {rec.generation} lists unknown individuals {missing}")
                record.individuals.update(pending)
                pending = {}
                record.generations.append(rec)
                barrier = end + 1
            elif kind == "run_end":
                record.complete = True
                barrier = end + 1
            else:
                raise RecordCorruptError(f"{path}: unknown event {kind!r} at byte offset {offset}")
        except RecordError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise RecordCorruptError(f"{path}: malformed {kind!r} event at byte offset {offset}: {exc}") from exc
        offset = end + 1

    if record is None:
        raise RecordCorruptError(f"{path}: empty log (byte offset 0)")
    if not allow_partial and not record.complete:
        raise RecordCorruptError(f"{path}: log ends at byte offset {len(raw)} without run_end")
    return record, barrier


def load(run_dir: str | Path) -> RunRecord:
    record, _ = read_events(Path(run_dir) / EVENTS)
    return record


def persist(record: RunRecord, run_dir: str | Path) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    writer = EventWriter(run_dir / EVENTS)
    try:
        for ev in record.events():
            writer.write(ev)
    finally:
        writer.close()
    write_summaries(record, run_dir)
    return run_dir


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def write_summaries(record: RunRecord, run_dir: str | Path) -> None:
    run_dir = Path(run_dir)
    fields_ = list(GenerationStats.__dataclass_fields__)
    with open(run_dir / "generations.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields_)
        for rec in record.generations:
            w.writerow([_cell(getattr(rec.stats, f)) for f in fields_])
    with open(run_dir / "traits.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "generation_born", "fitness_after", *TRAIT_NAMES])
        for i in sorted(record.individuals):
            ind = record.individuals[i]
            tv = traits(ind.tree, record.config.evolution.max_modules)
            w.writerow([ind.id, ind.generation_born, _cell(ind.fitness_after), *(_cell(v) for v in tv.as_tuple())])


def new_run_dir(out: str | Path, mode: str, seed: int, tag: str = "") -> Path:
    """Fresh subdirectory ``<mode>[-tag]-seed<seed>[-n]`` under ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{mode}{'-' + tag if tag else ''}-seed{seed}"
    candidate, n = out / stem, 1
    while True:
        try:
            candidate.mkdir()
            return candidate
        except FileExistsError:
            n += 1
            candidate = out / f"{stem}-{n}"
