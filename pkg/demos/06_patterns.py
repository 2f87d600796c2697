"""Compare the four mobility patterns end to end."""

# # Setup
#
# 20 clients on an 18x18 grid, 5 of them mobile, strongly non-IID data
# (alpha=0.05). Static runs use no mobile clients at all. This takes about 15 s
# on one core.

from __future__ import annotations

import numpy as np

from mobidfl import DatasetConfig, SimulationConfig, TrainerConfig, run_simulation, sweep
from mobidfl.simulation import final_accuracies

base = SimulationConfig(
    grid_size=18, num_clients=20, num_mobile=5, comm_radius=3, move_radius=5, alpha=0.05,
    rounds=300, eval_every=50, monte_carlo_runs=3,
    trainer=TrainerConfig(kind="logistic"), dataset=DatasetConfig(),
)

for pattern in ("static", "random", "dam", "dcm"):
    cfg = base.replace(pattern=pattern, num_mobile=0 if pattern == "static" else 5)
    recs = run_simulation(cfg)
    finals = list(final_accuracies(recs).values())
    curve = [r.mean_accuracy for r in recs if r.run == 0]
    print(f"{pattern:>6}: final {np.mean(finals):.3f} +/- {np.std(finals):.3f}   run 0 curve {np.round(curve, 2)}")

# # Sweeping the communication radius
#
# Sparser graphs leave more to gain from mobility.

result = sweep(base.replace(pattern="dcm", monte_carlo_runs=2), "comm_radius", [1, 2, 3, 5])
for value, recs in result.outputs.items():
    print(f"R_c={value}: {np.mean(list(final_accuracies(recs).values())):.3f}")
