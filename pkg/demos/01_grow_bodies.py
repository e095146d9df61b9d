"""Grow a few random bodies from CPPN genomes and look at them from above.

Run: python3 demos/01_grow_bodies.py
"""

import numpy as np

from lamarck.analysis import diversity, traits, tree_edit_distance
from lamarck.cppn import CppnGenome, MutationRates, mutate
from lamarck.morphology import ModuleKind, develop, joints_of

rng = np.random.default_rng(3)

# %% a top-down sketch: C core, B brick, H hinge; z is ignored, higher layers overwrite
GLYPH = {ModuleKind.CORE: "C", ModuleKind.BRICK: "B", ModuleKind.HINGE: "H"}


def sketch(tree):
    xs = [m.grid_pos[0] for m in tree.modules]
    ys = [m.grid_pos[1] for m in tree.modules]
    grid = {(m.grid_pos[0], m.grid_pos[1]): GLYPH[m.kind] for m in tree.modules}
    rows = []
    for y in range(max(ys), min(ys) - 1, -1):  # +y (the core's front) at the top
        rows.append(" ".join(grid.get((x, y), ".") for x in range(min(xs), max(xs) + 1)))
    return "\n".join(rows)


bodies = [develop(CppnGenome.random(rng)) for _ in range(4)]
for k, tree in enumerate(bodies):
    print(f"body {k}: {tree.module_count} modules, joints at {[p for _, p in joints_of(tree)]}")
    print(sketch(tree))
    print()

# %% eight descriptive traits per body
for k, tree in enumerate(bodies):
    t = traits(tree)
    print(k, " ".join(f"{name}={value:.2f}" for name, value in zip(
        ("branch", "limbs", "length", "cover", "joints", "prop", "sym", "size"), t.as_tuple())))

# %% morphological distance along a chain of mutations; the argmax development
# makes this jumpy, one weight change can regrow most of the body
genome = CppnGenome.random(rng)
parent = develop(genome)
steps = []
for _ in range(20):
    genome = mutate(genome, rng, MutationRates())
    steps.append(tree_edit_distance(parent, develop(genome)))
print("\ndistance from the starting body after 1..20 mutations:", steps)
print("population diversity of the four bodies above:", diversity(bodies))
