"""Brain genotype: a fixed 440 x 14 weight matrix indexed by 2D joint position.

Each row belongs to one cell of the 21 x 21 body grid (the centre excluded).
Column 0 is the joint's own oscillator weight, columns 1-12 hold couplings to
the twelve cells within Manhattan distance 2, and column 13 couples joints
stacked on the same 2D cell. Expression and writeback touch exactly the same
cells, so learned weights can be coded back into the genotype.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

import numpy as np

from .controller import CpgLayout, CpgNetwork
from .morphology import ModuleTree, distance_matrix, joints_of

GRID_RADIUS = 10
GRID_SIDE = 2 * GRID_RADIUS + 1
N_ROWS = GRID_SIDE * GRID_SIDE - 1
N_COLS = 14
NEIGHBOR_OFFSETS = tuple(
    (dx, dy) for dx in range(-2, 3) for dy in range(-2, 3) if 1 <= abs(dx) + abs(dy) <= 2
)
STACKED_COLUMN = 13
FORMAT_VERSION = 1
_CENTER = GRID_RADIUS * GRID_SIDE + GRID_RADIUS


class BrainIntegrityError(ValueError):
    """Weights do not match the body they are applied to."""


def row_index(pos: tuple[int, int]) -> int:
    x, y = pos
    if not (-GRID_RADIUS <= x <= GRID_RADIUS and -GRID_RADIUS <= y <= GRID_RADIUS):
        raise ValueError(f"position {pos} outside the {GRID_SIDE}x{GRID_SIDE} grid")
    linear = (x + GRID_RADIUS) * GRID_SIDE + (y + GRID_RADIUS)
    if linear == _CENTER:
        raise ValueError("the grid centre belongs to the core and has no row")
    return linear - 1 if linear > _CENTER else linear


def neighbor_column(offset: tuple[int, int]) -> int:
    return 1 + NEIGHBOR_OFFSETS.index(tuple(offset))


@dataclass(frozen=True, eq=False)
class BrainGenotype:
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (N_ROWS, N_COLS):
            raise BrainIntegrityError(f"brain genotype must be {N_ROWS}x{N_COLS}, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise BrainIntegrityError("brain genotype contains non-finite values")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BrainGenotype):
            return NotImplemented
        return bool(np.array_equal(self.weights, other.weights))

    @classmethod
    def random(cls, rng: np.random.Generator) -> BrainGenotype:
        return cls(rng.normal(0.0, 1.0, size=(N_ROWS, N_COLS)))

    @classmethod
    def zeros(cls) -> BrainGenotype:
        return cls(np.zeros((N_ROWS, N_COLS)))

    def to_dict(self) -> dict:
        raw = np.ascontiguousarray(self.weights, dtype="<f8").tobytes()
        return {
            "version": FORMAT_VERSION,
            "shape": [N_ROWS, N_COLS],
            "dtype": "<f8",
            "data": base64.b64encode(raw).decode("ascii"),
        }

    @classmethod
    def from_dict(cls, data: dict) -> BrainGenotype:
        if data.get("version") != FORMAT_VERSION:
            raise BrainIntegrityError(f"unsupported brain genotype version {data.get('version')!r}")
        flat = np.frombuffer(base64.b64decode(data["data"]), dtype="<f8")
        if flat.size != N_ROWS * N_COLS:
            raise BrainIntegrityError(f"expected {N_ROWS * N_COLS} values, got {flat.size}")
        return cls(flat.reshape(N_ROWS, N_COLS))


def layout_for(tree: ModuleTree) -> CpgLayout:
    """Map the body's joints and joint pairs onto genotype cells."""
    joints = joints_of(tree)
    ids = tuple(j for j, _ in joints)
    pos = tuple(p for _, p in joints)
    rows = [row_index(p) for p in pos]
    dist = distance_matrix(tree)

    cells: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}

    def cell(row: int, col: int) -> int:
        key = (row, col)
        if key not in index:
            index[key] = len(cells)
            cells.append(key)
        return index[key]

    internal = tuple(cell(r, 0) for r in rows)

    # only consecutive joints (breadth-first order) on a shared 2D cell couple via column 13
    stacked_next: dict[int, int] = {}
    last_at: dict[tuple[int, int], int] = {}
    for i, p in enumerate(pos):
        if p in last_at:
            stacked_next[last_at[p]] = i
        last_at[p] = i

    couplings = []
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if dist[ids[i], ids[j]] > 2:
                continue
            if pos[i] == pos[j]:
                if stacked_next.get(i) == j:
                    couplings.append((i, j, cell(rows[i], STACKED_COLUMN)))
                continue
            donor, other = (i, j) if rows[i] < rows[j] else (j, i)
            offset = (pos[other][0] - pos[donor][0], pos[other][1] - pos[donor][1])
            couplings.append((donor, other, cell(rows[donor], neighbor_column(offset))))

    return CpgLayout(ids, pos, tuple(cells), internal, tuple(couplings))


def used_cells(layout: CpgLayout) -> tuple[np.ndarray, np.ndarray]:
    rows = np.array([r for r, _ in layout.cells], dtype=np.intp)
    cols = np.array([c for _, c in layout.cells], dtype=np.intp)
    return rows, cols


def express(genotype: BrainGenotype, tree: ModuleTree) -> CpgNetwork:
    layout = layout_for(tree)
    rows, cols = used_cells(layout)
    return CpgNetwork(layout, genotype.weights[rows, cols].copy())


def writeback(genotype: BrainGenotype, tree: ModuleTree, learned) -> BrainGenotype:
    """Code learned CPG weights back into the cells ``express`` reads them from."""
    layout = layout_for(tree)
    values = learned.weights if isinstance(learned, CpgNetwork) else np.asarray(learned, dtype=float)
    if isinstance(learned, CpgNetwork) and learned.layout != layout:
        raise BrainIntegrityError("network was not expressed from this body")
    if values.shape != (layout.n_weights,):
        raise BrainIntegrityError(f"body uses {layout.n_weights} weights, got shape {values.shape}")
    if layout.n_weights == 0:
        return genotype
    rows, cols = used_cells(layout)
    w = genotype.weights.copy()
    w[rows, cols] = values
    return BrainGenotype(w)


def mutate_brain(
    genotype: BrainGenotype, rng: np.random.Generator, rate: float = 0.8, sigma: float = 0.5
) -> BrainGenotype:
    shape = genotype.weights.shape
    hit = rng.random(shape) < rate
    noise = rng.normal(0.0, sigma, size=shape)
    return BrainGenotype(np.where(hit, genotype.weights + noise, genotype.weights))


def crossover_brain(a: BrainGenotype, b: BrainGenotype, rng: np.random.Generator) -> BrainGenotype:
    take_a = rng.random(a.weights.shape) < 0.5
    return BrainGenotype(np.where(take_a, a.weights, b.weights))
