"""CPG network dynamics and target-bearing steering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

INITIAL_STATE = math.sqrt(2.0) / 2.0
WEIGHT_CLAMP = 4.0


class DivergenceError(FloatingPointError):
    """CPG state became non-finite during integration."""


@dataclass(frozen=True)
class CpgLayout:
    """Which genotype cells feed which CPG weight, for one body.

    ``cells`` lists the distinct (row, column) genotype cells in use; the
    learnable weight vector has one entry per cell. ``internal[i]`` is the
    cell of joint ``i``'s own weight and each coupling ``(i, j, c)`` means
    w_ij = value[c] and w_ji = -value[c].
    """

    joint_ids: tuple[int, ...]
    positions: tuple[tuple[int, int], ...]
    cells: tuple[tuple[int, int], ...]
    internal: tuple[int, ...]
    couplings: tuple[tuple[int, int, int], ...]

    @property
    def n_joints(self) -> int:
        return len(self.joint_ids)

    @property
    def n_weights(self) -> int:
        return len(self.cells)

    @property
    def sides(self) -> np.ndarray:
        """-1 for left (x < 0), +1 for right (x > 0), 0 on the midline."""
        return np.array([int(np.sign(p[0])) for p in self.positions], dtype=np.int64)


@dataclass
class CpgNetwork:
    layout: CpgLayout
    weights: np.ndarray
    state: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.layout.n_weights,):
            raise ValueError(f"expected {self.layout.n_weights} weights, got shape {self.weights.shape}")
        if self.state is None:
            self.reset()

    @property
    def n(self) -> int:
        return self.layout.n_joints

    def reset(self) -> None:
        self.state = np.full(2 * self.n, INITIAL_STATE)

    def system_matrix(self) -> np.ndarray:
        """Linear vector field A with d[x; y]/dt = A [x; y]; weights clamped to +-4."""
        return system_matrix(self.layout, self.weights)

    def outputs(self) -> np.ndarray:
        return activation(self.state[: self.n])

    def step(self, dt: float, steer: tuple[float, float] = (1.0, 1.0)) -> np.ndarray:
        """Advance one RK4 step and return the gain-scaled joint outputs."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        a = self.system_matrix()
        s = self.state
        k1 = a @ s
        k2 = a @ (s + 0.5 * dt * k1)
        k3 = a @ (s + 0.5 * dt * k2)
        k4 = a @ (s + dt * k3)
        s = s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(s)):
            raise DivergenceError("CPG state diverged")
        self.state = s
        return self.outputs() * side_gains(self.layout.sides, steer)


def system_matrix(layout: CpgLayout, weights: np.ndarray) -> np.ndarray:
    n = layout.n_joints
    w = np.clip(np.asarray(weights, dtype=float), -WEIGHT_CLAMP, WEIGHT_CLAMP)
    a = np.zeros((2 * n, 2 * n))
    for i, c in enumerate(layout.internal):
        a[i, n + i] = w[c]
        a[n + i, i] = -w[c]
    for i, j, c in layout.couplings:
        # dx_i/dt gets w_ji x_j = -w_ij x_j; dx_j/dt gets w_ij x_i
        a[i, j] -= w[c]
        a[j, i] += w[c]
    return a


def rk4_propagator(a: np.ndarray, dt: float) -> np.ndarray:
    """One-step RK4 map for the linear system s' = A s (a degree-4 matrix polynomial)."""
    h = dt * a
    eye = np.eye(a.shape[0])
    h2 = h @ h
    return eye + h + h2 / 2.0 + (h2 @ h) / 6.0 + (h2 @ h2) / 24.0


def activation(x):
    """Output neuron: 2 / (1 + exp(-2x)) - 1, i.e. tanh(x)."""
    return np.tanh(x)


def side_gains(sides: np.ndarray, steer: tuple[float, float]) -> np.ndarray:
    left, right = steer
    return np.where(sides < 0, left, np.where(sides > 0, right, 1.0))


def bearing(heading: float, position, target) -> float:
    """Signed angle in (-pi, pi] from the heading to the target; negative means right."""
    dx = target[0] - position[0]
    dy = target[1] - position[1]
    theta = math.atan2(dy, dx) - heading
    theta = math.remainder(theta, 2.0 * math.pi)
    if theta <= -math.pi:
        theta += 2.0 * math.pi
    return theta


def steering_gains(heading: float, position, target, c_steer: float = 0.7) -> tuple[float, float]:
    """(left, right) output gains: the side the target lies on is slowed down."""
    if not 0.0 <= c_steer <= 1.0:
        raise ValueError("c_steer must lie in [0, 1]")
    theta = bearing(heading, position, target)
    slow = 1.0 - c_steer * min(abs(theta) / math.pi, 1.0)
    if theta < 0:
        return 1.0, slow
    if theta > 0:
        return slow, 1.0
    return 1.0, 1.0
