"""Planar locomotion surrogate, point-navigation task and fitness.

The surrogate stands in for rigid-body physics. Each control step the robot's
forward speed is proportional to how much its (steering-scaled) joint outputs
changed, damped by body size, and it yaws toward the side whose joints are
less active, like a differential drive:

    a      = sum_j |out_j(t) - out_j(t - dt)| / dt
    v      = min(c_v * a / (1 + modules / 10), v_max)
    yaw    = -c_turn * (a_left - a_right) / a        (counter-clockwise positive)

Everything is deterministic; there is no noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .brain import BrainGenotype, layout_for, used_cells
from .controller import INITIAL_STATE, CpgLayout, rk4_propagator, system_matrix
from .morphology import ModuleTree

FAILED = -math.inf


@dataclass(frozen=True)
class TaskSpec:
    targets: tuple[tuple[float, float], ...] = ((1.0, -1.0), (0.0, -2.0))
    duration: float = 40.0
    reach_radius: float = 0.01
    omega: float = 0.1

    def __post_init__(self) -> None:
        if self.reach_radius <= 0 or self.duration <= 0:
            raise ValueError("reach_radius and duration must be positive")


@dataclass(frozen=True)
class SurrogateParams:
    dt: float = 0.005
    sample_rate: float = 5.0
    c_v: float = 0.05
    v_max: float = 0.5
    c_turn: float = 2.0
    c_steer: float = 0.7
    heading: float = math.pi / 2  # facing +y, the core's front


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    reached: int | None = None  # targets reached at control resolution, if known
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        if len(self.times) != len(self.positions):
            raise ValueError("times and positions differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    @property
    def path_length(self) -> float:
        if len(self.positions) < 2:
            return 0.0
        return float(np.sum(np.hypot(*np.diff(self.positions, axis=0).T)))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "y"])
            for t, (x, y) in zip(self.times, self.positions):
                writer.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


@numba.njit(cache=True)
def _rollout(prop, state, sides, n_modules, targets, n_steps, sample_every,
             dt, c_v, v_max, c_turn, c_steer, reach, heading):
    n = sides.shape[0]
    n_samples = n_steps // sample_every + 1
    samples = np.zeros((n_samples, 2))
    px = 0.0
    py = 0.0
    active = 0
    n_targets = targets.shape[0]
    damping = 1.0 + n_modules / 10.0

    gain_l = 1.0
    gain_r = 1.0
    prev = np.empty(n)
    out = np.empty(n)

    def gains(px, py, heading, active):
        if active >= n_targets:
            return 1.0, 1.0
        theta = math.atan2(targets[active, 1] - py, targets[active, 0] - px) - heading
        theta -= 2.0 * math.pi * math.floor((theta + math.pi) / (2.0 * math.pi))
        if theta <= -math.pi:
            theta += 2.0 * math.pi
        slow = 1.0 - c_steer * min(abs(theta) / math.pi, 1.0)
        if theta < 0.0:
            return 1.0, slow
        if theta > 0.0:
            return slow, 1.0
        return 1.0, 1.0

    gain_l, gain_r = gains(px, py, heading, active)
    for i in range(n):
        g = gain_l if sides[i] < 0 else (gain_r if sides[i] > 0 else 1.0)
        prev[i] = math.tanh(state[i]) * g

    s = state.copy()
    k = 1
    for step in range(1, n_steps + 1):
        s = prop @ s
        for i in range(2 * n):
            if not math.isfinite(s[i]):
                return samples, active, False
        gain_l, gain_r = gains(px, py, heading, active)
        a_l = 0.0
        a_r = 0.0
        a = 0.0
        for i in range(n):
            g = gain_l if sides[i] < 0 else (gain_r if sides[i] > 0 else 1.0)
            out[i] = math.tanh(s[i]) * g
            d = abs(out[i] - prev[i]) / dt
            a += d
            if sides[i] < 0:
                a_l += d
            elif sides[i] > 0:
                a_r += d
            prev[i] = out[i]
        v = c_v * a / damping
        if v > v_max:
            v = v_max
        if a > 0.0:
            heading -= c_turn * (a_l - a_r) / a * dt
        px += v * dt * math.cos(heading)
        py += v * dt * math.sin(heading)
        if active < n_targets:
            if math.hypot(targets[active, 0] - px, targets[active, 1] - py) <= reach:
                active += 1
        if step % sample_every == 0:
            samples[k, 0] = px
            samples[k, 1] = py
            k += 1
    return samples, active, True


def _weights_for(layout: CpgLayout, brain) -> np.ndarray:
    if isinstance(brain, BrainGenotype):
        rows, cols = used_cells(layout)
        return brain.weights[rows, cols]
    weights = np.asarray(brain, dtype=float)
    if weights.shape != (layout.n_weights,):
        raise ValueError(f"body uses {layout.n_weights} weights, got shape {weights.shape}")
    return weights


class Evaluator:
    """Simulate one fixed body with different brains; reused across learning trials."""

    def __init__(self, tree: ModuleTree, task: TaskSpec = TaskSpec(), params: SurrogateParams = SurrogateParams()):
        self.tree = tree
        self.task = task
        self.params = params
        self.layout = layout_for(tree)
        self._sides = self.layout.sides
        self._targets = np.array(task.targets, dtype=float).reshape(-1, 2)
        self._n_steps = int(round(task.duration / params.dt))
        self._sample_every = int(round(1.0 / (params.sample_rate * params.dt)))

    def simulate(self, brain) -> Trajectory:
        p = self.params
        weights = _weights_for(self.layout, brain)
        prop = np.ascontiguousarray(rk4_propagator(system_matrix(self.layout, weights), p.dt))
        state = np.full(2 * self.layout.n_joints, INITIAL_STATE)
        samples, reached, ok = _rollout(
            prop, state, self._sides, self.tree.module_count, self._targets,
            self._n_steps, self._sample_every, p.dt, p.c_v, p.v_max, p.c_turn,
            p.c_steer, self.task.reach_radius, p.heading,
        )
        if not ok:
            raise FloatingPointError("CPG state diverged during simulation")
        times = np.arange(len(samples)) * (self._sample_every * p.dt)
        return Trajectory(times, samples, reached=int(reached))

    def __call__(self, brain) -> float:
        try:
            traj = self.simulate(brain)
        except FloatingPointError:
            return FAILED
        return fitness(traj, self.task)


def simulate(tree: ModuleTree, brain, task: TaskSpec = TaskSpec(), params: SurrogateParams = SurrogateParams()) -> Trajectory:
    return Evaluator(tree, task, params).simulate(brain)


def evaluate(tree: ModuleTree, brain, task: TaskSpec = TaskSpec(), params: SurrogateParams = SurrogateParams()) -> float:
    """Fitness of ``tree`` driven by ``brain`` (a genotype or an explicit weight vector)."""
    return Evaluator(tree, task, params)(brain)


def _reached_from_samples(positions: np.ndarray, task: TaskSpec) -> int:
    k = 0
    for p in positions:
        if k < len(task.targets) and math.dist(p, task.targets[k]) <= task.reach_radius:
            k += 1
    return k


def fitness(traj: Trajectory, task: TaskSpec = TaskSpec()) -> float:
    """Reward targets reached in order, progress toward the next one, and short paths."""
    if len(traj.positions) == 0:
        raise ValueError("empty trajectory")
    k = traj.reached if traj.reached is not None else _reached_from_samples(traj.positions, task)
    points = [(0.0, 0.0)] + [tuple(t) for t in task.targets]
    score = sum(math.dist(points[i], points[i - 1]) for i in range(1, k + 1))
    if k < len(task.targets):
        final = tuple(traj.positions[-1])
        score += math.dist(points[k + 1], points[k]) - math.dist(final, points[k + 1])
    return score - task.omega * traj.path_length
