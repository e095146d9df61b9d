"""Give one body a random brain, let RevDE tune its CPG weights, write them back.

Run: python3 demos/02_learn_a_gait.py
"""

import numpy as np

from lamarck.brain import BrainGenotype, express, layout_for, writeback
from lamarck.cppn import CppnGenome
from lamarck.learner import RevDeConfig, learn
from lamarck.morphology import develop
from lamarck.simulation import Evaluator

rng = np.random.default_rng(11)

# pick a body with a handful of joints so there is something to learn
while True:
    tree = develop(CppnGenome.random(rng))
    if len(layout_for(tree).joint_ids) >= 3:
        break
layout = layout_for(tree)
print(f"{tree.module_count} modules, {layout.n_joints} joints, {layout.n_weights} CPG weights")

brain = BrainGenotype.random(rng)
evaluator = Evaluator(tree)
inherited = express(brain, tree).weights
print("fitness of the inherited brain:", round(evaluator(brain), 4))

# %% lifetime learning with the full 280-assessment budget
best, history = learn(inherited, evaluator, RevDeConfig(), rng)
rewards = np.array([r for _, r in history])
print("best reward after each RevDE iteration:",
      [round(float(rewards[: 10 + 30 * k].max()), 3) for k in range(10)])

# %% Lamarckian step: the learned weights go back into the genotype
learned_brain = writeback(brain, tree, best)
assert np.array_equal(express(learned_brain, tree).weights, best)
changed = int(np.sum(learned_brain.weights != brain.weights))
print(f"writeback touched {changed} of {brain.weights.size} genotype cells;",
      "fitness now", round(evaluator(learned_brain), 4))

# %% where did it go?
traj = evaluator.simulate(best)
for t, (x, y) in list(zip(traj.times, traj.positions))[::25]:
    print(f"t={t:5.1f}s  x={x:+.3f}  y={y:+.3f}")
