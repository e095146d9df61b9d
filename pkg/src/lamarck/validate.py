"""Quick invariant suite behind ``lamarck validate``.

Every check is cheap (the whole suite takes a few seconds) and independent;
a failing check reports what it saw instead of raising.
"""

from __future__ import annotations

import math
import tempfile
from typing import Callable

import numpy as np

from .analysis import diversity, tree_edit_distance
from .brain import BrainGenotype, express, layout_for, writeback
from .config import ExperimentConfig, from_ini, to_ini
from .controller import CpgLayout, CpgNetwork
from .cppn import CppnGenome
from .evolution import DARWINIAN, EvolutionConfig, evolve
from .learner import RevDeConfig, learn, revde_mutate
from .morphology import develop
from .simulation import TaskSpec, Trajectory, evaluate, fitness

CHECKS: list[tuple[str, Callable[[], str | None]]] = []


def check(name: str):
    def register(fn):
        CHECKS.append((name, fn))
        return fn

    return register


def _robots(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    return rng, [develop(CppnGenome.random(rng)) for _ in range(n)]


@check("writeback is the inverse of expression")
def _writeback():
    rng, trees = _robots(100)
    for tree in trees:
        g = BrainGenotype.random(rng)
        learned = rng.normal(0, 2, size=layout_for(tree).n_weights)
        if not np.array_equal(express(writeback(g, tree, learned), tree).weights, learned):
            return "expressed weights differ after writeback"
    return None


@check("single oscillator follows sin(t + pi/4)")
def _oscillator():
    net = CpgNetwork(CpgLayout((1,), ((0, 1),), ((0, 0),), (0,), ()), np.array([1.0]))
    err = 0.0
    for k in range(1, 8001):
        net.step(0.005)
        err = max(err, abs(net.state[0] - math.sin(k * 0.005 + math.pi / 4)))
    drift = abs(np.sum(net.state**2) - 1.0)
    if err >= 1e-6 or drift >= 1e-6:
        return f"max error {err:.2e}, energy drift {drift:.2e}"
    return None


@check("ideal path scores 2.54, stationary robot scores 0")
def _fitness():
    pts = np.array([(k / 100, -k / 100) for k in range(101)] + [(1 - k / 100, -1 - k / 100) for k in range(1, 101)])
    ideal = fitness(Trajectory(np.arange(len(pts)) * 0.2, pts), TaskSpec())
    still = fitness(Trajectory(np.arange(201) * 0.2, np.zeros((201, 2))), TaskSpec())
    if abs(ideal - 2.54) > 0.01 or still != 0.0:
        return f"ideal {ideal:.4f}, stationary {still}"
    return None


@check("learning spends exactly 280 assessments")
def _budget():
    _, hist = learn(np.zeros(3), lambda w: 0.0, RevDeConfig(), np.random.default_rng(0))
    v = revde_mutate([0.0], [1.0], [0.0], 0.5)
    if len(hist) != 280 or [x[0] for x in v] != [0.5, 0.75, -0.125]:
        return f"{len(hist)} assessments, triplet {[x[0] for x in v]}"
    return None


@check("tree edit distance is symmetric and obeys the triangle inequality")
def _metric():
    rng, trees = _robots(25, seed=1)
    d = np.array([[tree_edit_distance(a, b) for b in trees] for a in trees])
    if not np.array_equal(d, d.T):
        return "asymmetric distance"
    i, j, k = rng.integers(len(trees), size=(3, 2000))
    if np.any(d[i, k] > d[i, j] + d[j, k]):
        return "triangle inequality violated"
    if diversity([trees[0]] * 3) != 0.0:
        return "clone population has nonzero diversity"
    return None


@check("evaluation is deterministic and bounded")
def _determinism():
    rng, trees = _robots(30, seed=2)
    for tree in trees:
        g = BrainGenotype.random(rng)
        f1, f2 = evaluate(tree, g), evaluate(tree, g)
        if f1 != f2 or f1 > 2 * math.sqrt(2):
            return f"evaluations {f1} and {f2}"
    return None


@check("budget arithmetic 775 / 280 / 434000")
def _arith():
    cfg = EvolutionConfig()
    got = (cfg.evaluations, cfg.learning.budget, 2 * cfg.assessments)
    return None if got == (775, 280, 434_000) else f"got {got}"


@check("elitist loop: constant size, monotone best, immutable Darwinian brains")
def _loop():
    cfg = EvolutionConfig(mu=4, lam=2, generations=3, mode=DARWINIAN, seed=5,
                          learning=RevDeConfig(mu=4, candidates_per_iter=4, iterations=2))
    births = {}

    def hook(rec, newborns):
        births.update({i.id: i.brain for i in newborns})

    _, lookup, recs = evolve(cfg, on_generation=hook)
    best = [r.stats.max_fitness for r in recs]
    if any(len(r.population) != cfg.mu for r in recs):
        return "population size changed"
    if any(b < a for a, b in zip(best, best[1:])):
        return f"best fitness decreased: {best}"
    if any(lookup[i].brain != b for i, b in births.items()):
        return "a Darwinian brain changed after birth"
    return None


@check("config round-trips through its file format")
def _config():
    cfg = ExperimentConfig().with_evolution(mu=7, lam=3, seed=11)
    return None if from_ini(to_ini(cfg)) == cfg else "config changed on reload"


@check("run record persists and reloads losslessly")
def _record():
    from . import records
    from .experiment import run_experiment

    cfg = ExperimentConfig(out="unused").with_evolution(
        mu=3, lam=1, generations=1, learning=RevDeConfig(mu=3, candidates_per_iter=3, iterations=2))
    with tempfile.TemporaryDirectory() as tmp:
        record, run_dir = run_experiment(cfg, run_dir=f"{tmp}/run")
        if records.load(run_dir) != record:
            return "reloaded record differs"
    return None


def run_all(stream=print) -> bool:
    ok = True
    for name, fn in CHECKS:
        try:
            problem = fn()
        except Exception as exc:  # a crash is a failure of that property, not of the suite
            problem = f"{type(exc).__name__}: {exc}"
        ok &= problem is None
        stream(f"{'PASS' if problem is None else 'FAIL'}  {name}" + (f"  ({problem})" if problem else ""))
    return ok
