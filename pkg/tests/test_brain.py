import math

import numpy as np
import pytest
from test_morphology import stacked_tree

from lamarck.brain import (
    N_COLS,
    N_ROWS,
    NEIGHBOR_OFFSETS,
    STACKED_COLUMN,
    BrainGenotype,
    BrainIntegrityError,
    crossover_brain,
    express,
    layout_for,
    mutate_brain,
    row_index,
    writeback,
)
from lamarck.cppn import CppnGenome
from lamarck.morphology import develop, joints_of, tree_distance


def test_row_index_corners_and_centre():
    assert row_index((-10, -10)) == 0
    assert row_index((10, 10)) == 439
    with pytest.raises(ValueError):
        row_index((0, 0))
    with pytest.raises(ValueError):
        row_index((11, 0))


def test_row_index_is_bijection():
    rows = {row_index((x, y)) for x in range(-10, 11) for y in range(-10, 11) if (x, y) != (0, 0)}
    assert rows == set(range(N_ROWS))


def test_neighbourhood_has_twelve_offsets():
    assert len(NEIGHBOR_OFFSETS) == 12 == len(set(NEIGHBOR_OFFSETS))
    # D(2, 2) = 13 cells including the centre
    assert len(NEIGHBOR_OFFSETS) + 1 == 13
    assert NEIGHBOR_OFFSETS == tuple(sorted(NEIGHBOR_OFFSETS))


def test_core_only_expresses_nothing():
    tree = develop(CppnGenome.build([(3, 6, 1.0)]))
    net = express(BrainGenotype.random(np.random.default_rng(0)), tree)
    assert net.n == 0 and net.weights.size == 0
    g = BrainGenotype.random(np.random.default_rng(1))
    assert writeback(g, tree, np.zeros(0)) == g


def test_plus_robot_fully_coupled(plus_tree):
    layout = layout_for(plus_tree)
    assert layout.n_joints == 4
    assert len(layout.couplings) == 6
    assert len(set(layout.internal)) == 4
    assert {frozenset((i, j)) for i, j, _ in layout.couplings} == {
        frozenset(p) for p in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    }


def test_plus_robot_reads_expected_cells(plus_tree):
    w = np.arange(N_ROWS * N_COLS, dtype=float).reshape(N_ROWS, N_COLS)
    net = express(BrainGenotype(w), plus_tree)
    layout = net.layout
    pos = layout.positions
    for i, c in enumerate(layout.internal):
        assert net.weights[c] == w[row_index(pos[i]), 0]
    for i, j, c in layout.couplings:
        assert row_index(pos[i]) < row_index(pos[j])
        offset = (pos[j][0] - pos[i][0], pos[j][1] - pos[i][1])
        assert net.weights[c] == w[row_index(pos[i]), 1 + NEIGHBOR_OFFSETS.index(offset)]


def test_zero_genotype_zero_weights(plus_tree):
    assert not np.any(express(BrainGenotype.zeros(), plus_tree).weights)


def test_stacked_joints_use_same_coordinate_column():
    tree = stacked_tree()
    layout = layout_for(tree)
    assert layout.n_joints == 2
    # two joints on one 2D cell share a row: one internal cell, one column-13 coupling
    assert len(layout.couplings) == 1
    i, j, c = layout.couplings[0]
    assert layout.cells[c][1] == STACKED_COLUMN
    assert layout.internal[0] == layout.internal[1]


def _used_cells_oracle(tree):
    """Cells read by expression, enumerated straight from the body."""
    joints = joints_of(tree)
    cells = set()
    for _, p in joints:
        cells.add((row_index(p), 0))
    for a in range(len(joints)):
        for b in range(a + 1, len(joints)):
            (ja, pa), (jb, pb) = joints[a], joints[b]
            if tree_distance(tree, ja, jb) > 2:
                continue
            if pa == pb:
                continue
            lo, hi = (pa, pb) if row_index(pa) < row_index(pb) else (pb, pa)
            cells.add((row_index(lo), 1 + NEIGHBOR_OFFSETS.index((hi[0] - lo[0], hi[1] - lo[1]))))
    by_pos = {}
    for idx, (j, p) in enumerate(joints):
        by_pos.setdefault(p, []).append((idx, j))
    for p, members in by_pos.items():
        for (ia, ja), (ib, jb) in zip(members, members[1:]):
            if tree_distance(tree, ja, jb) <= 2:
                cells.add((row_index(p), STACKED_COLUMN))
    return cells


def test_used_cells_match_independent_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(300):
        tree = develop(CppnGenome.random(rng))
        assert set(layout_for(tree).cells) == _used_cells_oracle(tree)
    assert set(layout_for(stacked_tree()).cells) == _used_cells_oracle(stacked_tree())


def test_writeback_unmodified_is_identity(plus_tree):
    g = BrainGenotype.random(np.random.default_rng(3))
    assert writeback(g, plus_tree, express(g, plus_tree)) == g


def test_writeback_round_trip_and_locality():
    rng = np.random.default_rng(8)
    for _ in range(200):
        tree = develop(CppnGenome.random(rng))
        g = BrainGenotype.random(rng)
        learned = express(g, tree).weights + rng.normal(0, 3, size=layout_for(tree).n_weights)
        g2 = writeback(g, tree, learned)
        assert np.array_equal(express(g2, tree).weights, learned)
        used = np.zeros((N_ROWS, N_COLS), dtype=bool)
        for r, c in _used_cells_oracle(tree):
            used[r, c] = True
        assert np.array_equal(g2.weights[~used], g.weights[~used])


def test_writeback_rejects_wrong_shape(plus_tree):
    g = BrainGenotype.zeros()
    with pytest.raises(BrainIntegrityError):
        writeback(g, plus_tree, np.zeros(3))


def test_expression_does_not_clamp_large_values(plus_tree):
    g = BrainGenotype.zeros()
    big = np.full(layout_for(plus_tree).n_weights, 9.5)
    assert np.array_equal(express(writeback(g, plus_tree, big), plus_tree).weights, big)


def test_mutate_zero_rate_identity():
    g = BrainGenotype.random(np.random.default_rng(0))
    assert mutate_brain(g, np.random.default_rng(1), rate=0.0) == g


def test_mutation_mean_absolute_change():
    # E|change| = rate * sigma * sqrt(2 / pi)
    rng = np.random.default_rng(2024)
    g = BrainGenotype.zeros()
    changes = np.concatenate([np.abs(mutate_brain(g, rng).weights).ravel() for _ in range(163)])
    assert changes.size >= 10**6
    expected = 0.8 * 0.5 * math.sqrt(2 / math.pi)
    assert abs(changes.mean() - expected) / expected < 0.01
    assert mutate_brain(g, rng).weights.shape == (440, 14)


def test_crossover_properties():
    rng = np.random.default_rng(0)
    a, b = BrainGenotype.random(rng), BrainGenotype.random(rng)
    assert crossover_brain(a, a, rng) == a
    child = crossover_brain(a, b, rng).weights
    assert np.all((child == a.weights) | (child == b.weights))
    ones = crossover_brain(BrainGenotype.zeros(), BrainGenotype(np.ones((440, 14))), rng).weights.mean()
    assert abs(ones - 0.5) < 0.01


def test_serialization_round_trip_bit_exact():
    g = BrainGenotype.random(np.random.default_rng(6))
    back = BrainGenotype.from_dict(g.to_dict())
    assert back.weights.tobytes() == g.weights.tobytes()
    bad = dict(g.to_dict(), version=99)
    with pytest.raises(BrainIntegrityError):
        BrainGenotype.from_dict(bad)


def test_genotype_shape_enforced():
    with pytest.raises(BrainIntegrityError):
        BrainGenotype(np.zeros((10, 14)))
    with pytest.raises(BrainIntegrityError):
        BrainGenotype(np.full((440, 14), np.nan))
