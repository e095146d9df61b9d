"""Reversible differential evolution (RevDE) for lifetime learning of CPG weights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class RevDeConfig:
    mu: int = 10
    candidates_per_iter: int = 30
    iterations: int = 10
    F: float = 0.5
    CR: float = 0.9
    init_noise_sigma: float = 0.5

    def __post_init__(self) -> None:
        if self.mu < 3:
            raise ValueError("RevDE needs a population of at least 3")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.CR <= 1.0:
            raise ValueError("CR must lie in [0, 1]")

    @property
    def budget(self) -> int:
        """Assessments consumed by one call to :func:`learn`."""
        return self.mu + self.candidates_per_iter * (self.iterations - 1)


def revde_mutate(w_i, w_j, w_k, F: float):
    w_i, w_j, w_k = (np.asarray(w, dtype=float) for w in (w_i, w_j, w_k))
    if not (w_i.shape == w_j.shape == w_k.shape):
        raise ValueError("triplet vectors differ in dimension")
    v1 = w_i + F * (w_j - w_k)
    v2 = w_j + F * (w_k - v1)
    v3 = w_k + F * (v1 - v2)
    return v1, v2, v3


def uniform_crossover(candidate, base, CR: float, rng: np.random.Generator) -> np.ndarray:
    """Binomial crossover: each coordinate comes from ``candidate`` with probability CR."""
    candidate = np.asarray(candidate, dtype=float)
    base = np.asarray(base, dtype=float)
    if candidate.shape != base.shape:
        raise ValueError("candidate and base differ in dimension")
    mask = rng.random(candidate.shape) < CR
    return np.where(mask, candidate, base)


def _safe(assess: Callable[[np.ndarray], float], w: np.ndarray) -> float:
    try:
        r = float(assess(w))
    except (FloatingPointError, ArithmeticError):
        return -math.inf
    return r if not math.isnan(r) else -math.inf


def learn(
    inherited,
    assess: Callable[[np.ndarray], float],
    cfg: RevDeConfig = RevDeConfig(),
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, list[tuple[int, float]]]:
    """Optimise a weight vector starting from ``inherited``.

    The first population is ``inherited`` plus ``mu - 1`` Gaussian mutants.
    Every later iteration turns random distinct triplets into candidates via
    :func:`revde_mutate` and :func:`uniform_crossover` (each candidate mixed
    with its own base vector), then keeps the best ``mu`` of parents and
    candidates.

    :returns: the best vector ever assessed and the ``(index, reward)`` history.
    """
    rng = rng if rng is not None else np.random.default_rng()
    inherited = np.asarray(inherited, dtype=float)
    dim = inherited.shape

    population = [inherited.copy()]
    noise = rng.normal(0.0, cfg.init_noise_sigma, size=(cfg.mu - 1,) + dim)
    population += [inherited + noise[m] for m in range(cfg.mu - 1)]

    history: list[tuple[int, float]] = []
    rewards = []
    for w in population:
        rewards.append(_safe(assess, w))
        history.append((len(history), rewards[-1]))
    best_idx = int(np.argmax(rewards))
    best_w, best_r = population[best_idx].copy(), rewards[best_idx]

    for _ in range(cfg.iterations - 1):
        candidates: list[np.ndarray] = []
        while len(candidates) < cfg.candidates_per_iter:
            i, j, k = rng.choice(cfg.mu, size=3, replace=False)
            trial = revde_mutate(population[i], population[j], population[k], cfg.F)
            for v, base in zip(trial, (population[i], population[j], population[k])):
                candidates.append(uniform_crossover(v, base, cfg.CR, rng))
        candidates = candidates[: cfg.candidates_per_iter]

        cand_rewards = []
        for w in candidates:
            cand_rewards.append(_safe(assess, w))
            history.append((len(history), cand_rewards[-1]))
            if cand_rewards[-1] > best_r:
                best_w, best_r = w.copy(), cand_rewards[-1]

        pool = population + candidates
        pool_rewards = rewards + cand_rewards
        # stable sort keeps parents ahead of equally good candidates
        keep = sorted(range(len(pool)), key=lambda m: -pool_rewards[m])[: cfg.mu]
        population = [pool[m] for m in keep]
        rewards = [pool_rewards[m] for m in keep]

    return best_w, history
