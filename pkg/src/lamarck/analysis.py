"""Morphology and learning metrics: tree edit distance, diversity, traits, deltas."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .morphology import ModuleKind, ModuleTree


@dataclass(frozen=True)
class LabeledTree:
    label: str
    children: tuple[LabeledTree, ...] = ()

    @classmethod
    def from_module_tree(cls, tree: ModuleTree) -> LabeledTree:
        def build(module_id: int) -> LabeledTree:
            m = tree.modules[module_id]
            kids = tuple(build(c.id) for c in tree.children(module_id))
            return cls(f"{m.kind.value}/{m.rotation}", kids)

        return build(0)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def _as_labeled(tree) -> LabeledTree:
    return LabeledTree.from_module_tree(tree) if isinstance(tree, ModuleTree) else tree


def _postorder(tree: LabeledTree):
    """Labels, leftmost-leaf indices and keyroots of ``tree`` in postorder."""
    labels: list[str] = []
    lml: list[int] = []

    def walk(node: LabeledTree) -> int:
        first = None
        for child in node.children:
            leaf = walk(child)
            if first is None:
                first = leaf
        labels.append(node.label)
        lml.append(first if first is not None else len(labels) - 1)
        return lml[-1]

    walk(tree)
    seen: dict[int, int] = {}
    for idx, leaf in enumerate(lml):
        seen[leaf] = idx
    keyroots = sorted(seen.values())
    return labels, lml, keyroots


def tree_edit_distance(a, b) -> int:
    """Ordered tree edit distance with unit insert, delete and relabel costs (Zhang-Shasha)."""
    la, lml_a, kr_a = _postorder(_as_labeled(a))
    lb, lml_b, kr_b = _postorder(_as_labeled(b))
    treedist = np.zeros((len(la), len(lb)), dtype=np.int64)

    for i in kr_a:
        for j in kr_b:
            li, lj = lml_a[i], lml_b[j]
            rows, cols = i - li + 2, j - lj + 2
            fd = np.zeros((rows, cols), dtype=np.int64)
            fd[:, 0] = np.arange(rows)
            fd[0, :] = np.arange(cols)
            for x in range(li, i + 1):
                fx = x - li + 1
                for y in range(lj, j + 1):
                    fy = y - lj + 1
                    if lml_a[x] == li and lml_b[y] == lj:
                        fd[fx, fy] = min(
                            fd[fx - 1, fy] + 1,
                            fd[fx, fy - 1] + 1,
                            fd[fx - 1, fy - 1] + (la[x] != lb[y]),
                        )
                        treedist[x, y] = fd[fx, fy]
                    else:
                        px = lml_a[x] - li
                        py = lml_b[y] - lj
                        fd[fx, fy] = min(
                            fd[fx - 1, fy] + 1,
                            fd[fx, fy - 1] + 1,
                            fd[px, py] + treedist[x, y],
                        )
    return int(treedist[-1, -1])


def diversity(trees: Sequence) -> float:
    """Mean pairwise tree edit distance of a population."""
    if len(trees) < 2:
        raise ValueError("diversity needs at least two trees")
    labeled = [_as_labeled(t) for t in trees]
    dists = [tree_edit_distance(x, y) for x, y in itertools.combinations(labeled, 2)]
    return float(np.mean(dists))


def fittest_parent(parents: Sequence):
    """Parent with the highest fitness after learning; ties go to the first parent."""
    best = parents[0]
    for p in parents[1:]:
        if p.fitness_after > best.fitness_after:
            best = p
    return best


def parent_child_distance(child, parents: Sequence) -> int:
    if not parents:
        raise ValueError(f"individual {getattr(child, 'id', '?')} has no recorded parents")
    return tree_edit_distance(child.tree, fittest_parent(parents).tree)


def pearson(x: Iterable[float], y: Iterable[float]) -> float:
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    if len(x) < 2 or np.std(x) == 0 or np.std(y) == 0:
        return math.nan
    return float(np.corrcoef(x, y)[0, 1])


def learning_delta(ind) -> float:
    return ind.fitness_after - ind.fitness_before


TRAIT_NAMES = ("branching", "limbs", "length_of_limbs", "coverage", "joints", "proportion", "symmetry", "size")


@dataclass(frozen=True)
class TraitVector:
    branching: float
    limbs: int
    length_of_limbs: float
    coverage: float
    joints: float
    proportion: float
    symmetry: float
    size: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in TRAIT_NAMES)


def traits(tree: ModuleTree, max_modules: int = 10) -> TraitVector:
    """Eight descriptive body traits (local definitions, see README)."""
    n = tree.module_count
    n_children = [len(tree.children(m.id)) for m in tree.modules]

    max_branching = (n - 1) // 3
    branching = sum(c >= 3 for c in n_children) / max_branching if max_branching else 0.0
    limbs = sum(1 for m in tree.modules[1:] if n_children[m.id] == 0)
    length = max(m.depth for m in tree.modules) / (n - 1) if n > 1 else 0.0

    pos = np.array([m.grid_pos for m in tree.modules])
    extent = pos.max(axis=0) - pos.min(axis=0) + 1
    coverage = n / float(np.prod(extent))
    hinges = sum(m.kind is ModuleKind.HINGE for m in tree.modules)
    joints = hinges / max(n - 1, 1)
    proportion = float(min(extent[0], extent[1]) / max(extent[0], extent[1]))

    cells = {m.grid_pos: m.kind for m in tree.modules}
    best = 0.0
    for axis in (0, 1):
        matched = 0
        for p, kind in cells.items():
            mirror = list(p)
            mirror[axis] = -mirror[axis]
            matched += cells.get(tuple(mirror)) is kind
        best = max(best, matched / n)

    return TraitVector(branching, limbs, length, coverage, joints, proportion, best, n / max_modules)


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    mean_fitness: float
    max_fitness: float
    diversity: float
    mean_learning_delta: float
    mean_fitness_before: float
    mean_parent_child_distance: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _mean(values) -> float:
    values = list(values)
    return float(np.mean(values)) if values else math.nan


def generation_stats(generation: int, population, newborns, lookup) -> GenerationStats:
    """Summary of one generation; ``lookup`` maps individual ids to individuals."""
    fit = [p.fitness_after for p in population]
    div = diversity([p.tree for p in population]) if len(population) > 1 else 0.0
    pc = [
        parent_child_distance(c, [lookup[i] for i in c.parents])
        for c in newborns
        if c.parents
    ]
    return GenerationStats(
        generation,
        _mean(fit),
        float(np.max(fit)),
        div,
        _mean(learning_delta(c) for c in newborns),
        _mean(c.fitness_before for c in newborns),
        _mean(pc),
    )


def delta_of_delta(evolved: Sequence[float], fixed: Sequence[float]) -> float:
    """Morphological intelligence: mean learning delta with evolved bodies minus with fixed ones."""
    return _mean(evolved) - _mean(fixed)
