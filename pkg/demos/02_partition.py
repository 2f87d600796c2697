"""Non-IID label partitions with a per-class Dirichlet split."""

# # Dirichlet partitioning
#
# For each class we draw proportions over clients from Dir(alpha) and cut the
# shuffled class indices accordingly. Small alpha concentrates each class on
# few clients; large alpha approaches an IID split.

from __future__ import annotations

import numpy as np

from mobidfl import dirichlet_partition, normalize
from mobidfl.partition import mean_pairwise_distance

labels = np.repeat(np.arange(10), 200)

for alpha in (0.05, 0.1, 1.0, 10.0):
    part = dirichlet_partition(labels, 20, alpha, np.random.default_rng(1))
    dists = [normalize(np.bincount(labels[part.assignment[c]], minlength=10)) for c in range(20)]
    sizes = np.array(part.sizes())
    top = np.mean([d.probs.max() for d in dists if not d.empty])
    print(
        f"alpha={alpha:<5} empty clients={int((sizes == 0).sum()):2d}  "
        f"mean top-class share={top:.3f}  mean pairwise L2={mean_pairwise_distance(dists):.3f}"
    )

# # One client's histogram
#
# At alpha=0.05 most clients hold one or two classes only.

part = dirichlet_partition(labels, 20, 0.05, np.random.default_rng(1))
print(np.bincount(labels[part.assignment[3]], minlength=10))
