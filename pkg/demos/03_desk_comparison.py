"""A small paired Lamarckian/Darwinian comparison (about a minute per seed).

Run: python3 demos/03_desk_comparison.py [n_seeds]
Run folders and summary.csv land in ./demo-runs.
"""

import sys

from lamarck.config import ExperimentConfig
from lamarck.experiment import compare
from lamarck.learner import RevDeConfig

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 2

cfg = ExperimentConfig(out="demo-runs").with_evolution(
    mu=8, lam=4, generations=10,
    learning=RevDeConfig(mu=10, candidates_per_iter=10, iterations=4),
)
summaries, path = compare(cfg, range(n_seeds))

print(f"{'seed':>4}  {'mode':<10} {'final mean':>10} {'before (late)':>14} {'diversity':>9}")
for s in summaries:
    print(f"{s.seed:>4}  {s.mode:<10} {s.final_mean_fitness:>10.3f} {s.late_fitness_before:>14.3f} {s.final_diversity:>9.2f}")
print("written:", path)
