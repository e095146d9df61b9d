"""Outer evolutionary loop with lifetime learning and switchable inheritance.

Random streams are derived from the run seed and a fixed key per use
(generation, role, index), so results do not depend on how many worker
processes learn newborns in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import cppn
from .analysis import GenerationStats, generation_stats
from .brain import BrainGenotype, express, mutate_brain, writeback
from .learner import RevDeConfig, learn
from .morphology import MAX_MODULES, ModuleTree, develop
from .simulation import Evaluator, SurrogateParams, TaskSpec

LAMARCKIAN = "lamarckian"
DARWINIAN = "darwinian"

# stream roles
_VARIATION, _LEARNING, _INIT = 0, 1, 2


@dataclass(frozen=True)
class EvolutionConfig:
    mu: int = 50
    lam: int = 25
    generations: int = 30
    tournament_size: int = 2
    mode: str = LAMARCKIAN
    seed: int = 0
    crossover_rate: float = 0.8
    brain_mutation_rate: float = 0.8
    brain_mutation_sigma: float = 0.5
    body_mutation: cppn.MutationRates = cppn.MutationRates()
    max_modules: int = MAX_MODULES
    learning: RevDeConfig = RevDeConfig()
    learning_enabled: bool = True
    freeze_bodies: bool = False
    task: TaskSpec = TaskSpec()
    surrogate: SurrogateParams = SurrogateParams()

    def __post_init__(self) -> None:
        if self.mode not in (LAMARCKIAN, DARWINIAN):
            raise ValueError(f"mode must be {LAMARCKIAN!r} or {DARWINIAN!r}, got {self.mode!r}")
        if not 1 <= self.lam <= self.mu:
            raise ValueError("lambda must satisfy 1 <= lambda <= mu")
        if self.tournament_size < 2:
            raise ValueError("tournament_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")

    @property
    def evaluations(self) -> int:
        """Evolution-level evaluations: one per newborn, initial population excluded."""
        return self.lam + self.lam * self.generations

    @property
    def assessments(self) -> int:
        return self.evaluations * self.learning.budget


@dataclass
class Individual:
    id: int
    parents: tuple[int, ...]
    body: cppn.CppnGenome
    brain: BrainGenotype
    tree: ModuleTree
    generation_born: int
    fitness_before: float = math.nan
    fitness_after: float = math.nan
    learned_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    history: list = field(default_factory=list)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def select_parents(population, rng: np.random.Generator, tournament_size: int = 2):
    """Two independent tournaments with replacement on ``fitness_after``."""

    def tournament():
        draws = rng.integers(len(population), size=tournament_size)
        winner = population[draws[0]]
        for d in draws[1:]:
            if population[d].fitness_after > winner.fitness_after:
                winner = population[d]
        return winner

    return tournament(), tournament()


def reproduce(parent_a: Individual, parent_b: Individual, rng, cfg: EvolutionConfig, new_id: int, generation: int) -> Individual:
    """Build a newborn: sexual body, asexual brain from the better parent."""
    fitter = "a" if parent_a.fitness_after >= parent_b.fitness_after else "b"
    donor = parent_a if fitter == "a" else parent_b
    if cfg.freeze_bodies:
        body, tree = donor.body, donor.tree
    else:
        if rng.random() < cfg.crossover_rate:
            body = cppn.crossover(parent_a.body, parent_b.body, fitter, rng)
        else:
            body = donor.body
        body = cppn.mutate(body, rng, cfg.body_mutation)
        tree = develop(body, cfg.max_modules)
    brain = mutate_brain(donor.brain, rng, cfg.brain_mutation_rate, cfg.brain_mutation_sigma)
    child = Individual(new_id, (parent_a.id, parent_b.id), body, brain, tree, generation)
    child.fitness_before = Evaluator(tree, cfg.task, cfg.surrogate)(brain)
    return child


def _learn_one(args) -> tuple:
    """Worker task: lifetime learning for one individual (pure given its inputs)."""
    tree, brain, fitness_before, cfg, seed, key = args
    evaluator = Evaluator(tree, cfg.task, cfg.surrogate)
    inherited = express(brain, tree).weights
    if not cfg.learning_enabled:
        return inherited, [], fitness_before
    best, history = learn(inherited, evaluator, cfg.learning, stream(seed, *key))
    return best, history, evaluator(best)


class _Pool:
    def __init__(self, parallelism: int):
        self.parallelism = max(1, int(parallelism))
        self._exec = ProcessPoolExecutor(self.parallelism) if self.parallelism > 1 else None

    def map(self, fn, items):
        if self._exec is None:
            return [fn(x) for x in items]
        return list(self._exec.map(fn, items))

    def close(self) -> None:
        if self._exec is not None:
            self._exec.shutdown()


def _learn_all(individuals, cfg: EvolutionConfig, generation: int, pool: _Pool) -> None:
    jobs = [
        (ind.tree, ind.brain, ind.fitness_before, cfg, cfg.seed, (generation, _LEARNING, k))
        for k, ind in enumerate(individuals)
    ]
    for ind, (best, history, fit_after) in zip(individuals, pool.map(_learn_one, jobs)):
        ind.learned_weights = np.asarray(best, dtype=float)
        ind.history = list(history)
        ind.fitness_after = fit_after
        if cfg.mode == LAMARCKIAN:
            ind.brain = writeback(ind.brain, ind.tree, ind.learned_weights)


def initial_population(cfg: EvolutionConfig, pool: _Pool | None = None) -> list[Individual]:
    """Random bodies and brains, evaluated and then put through learning."""
    pop = []
    for i in range(cfg.mu):
        rng = stream(cfg.seed, 0, _INIT, i)
        body = cppn.CppnGenome.random(rng)
        brain = BrainGenotype.random(rng)
        tree = develop(body, cfg.max_modules)
        ind = Individual(i, (), body, brain, tree, 0)
        ind.fitness_before = Evaluator(tree, cfg.task, cfg.surrogate)(brain)
        pop.append(ind)
    _learn_all(pop, cfg, 0, pool or _Pool(1))
    return pop


def survivors(parents, newborns, mu: int) -> list[Individual]:
    """(mu + lambda) truncation; on equal fitness older individuals are kept."""
    pool = list(parents) + list(newborns)
    order = sorted(range(len(pool)), key=lambda k: -pool[k].fitness_after)
    return [pool[k] for k in order[:mu]]


def run_generation(population, cfg: EvolutionConfig, generation: int, next_id: int, pool: _Pool | None = None):
    """One loop iteration; returns ``(new population, newborns)``."""
    if len(population) != cfg.mu:
        raise ValueError(f"population has {len(population)} members, expected {cfg.mu}")
    rng = stream(cfg.seed, generation, _VARIATION)
    newborns = []
    for k in range(cfg.lam):
        a, b = select_parents(population, rng, cfg.tournament_size)
        newborns.append(reproduce(a, b, rng, cfg, next_id + k, generation))
    _learn_all(newborns, cfg, generation, pool or _Pool(1))
    return survivors(population, newborns, cfg.mu), newborns


@dataclass
class GenerationRecord:
    generation: int
    population: tuple[int, ...]
    newborns: tuple[int, ...]
    stats: GenerationStats


def evolve(
    cfg: EvolutionConfig,
    parallelism: int = 1,
    on_generation: Callable | None = None,
    resume: tuple | None = None,
):
    """Run the whole loop, calling ``on_generation(record, newborns)`` after each barrier.

    ``resume`` is ``(population, individuals_by_id, last_generation)`` from a
    partial run; the streams are keyed by generation so a resumed run is
    identical to an uninterrupted one.
    """
    pool = _Pool(parallelism)
    try:
        if resume is None:
            population = initial_population(cfg, pool)
            lookup = {ind.id: ind for ind in population}
            rec = GenerationRecord(
                0, tuple(i.id for i in population), tuple(i.id for i in population),
                generation_stats(0, population, population, lookup),
            )
            records = [rec]
            if on_generation:
                on_generation(rec, population)
            start = 1
        else:
            population, lookup, last = resume
            records = []
            start = last + 1
        next_id = max(lookup) + 1
        for g in range(start, cfg.generations + 1):
            population, newborns = run_generation(population, cfg, g, next_id, pool)
            next_id += len(newborns)
            lookup.update({c.id: c for c in newborns})
            rec = GenerationRecord(
                g, tuple(i.id for i in population), tuple(c.id for c in newborns),
                generation_stats(g, population, newborns, lookup),
            )
            records.append(rec)
            if on_generation:
                on_generation(rec, newborns)
        return population, lookup, records
    finally:
        pool.close()


def with_overrides(cfg: EvolutionConfig, **changes) -> EvolutionConfig:
    return replace(cfg, **changes)
