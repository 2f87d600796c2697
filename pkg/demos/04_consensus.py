"""Data-size weighted gossip averaging."""

# # Mixing matrix
#
# Client i weights neighbor j by |D_j| over the total data in its closed
# neighborhood. Rows sum to one; the matrix is generally not symmetric.

from __future__ import annotations

import numpy as np

from mobidfl import build_comm_graph, consensus_contraction_metric, consensus_update, mixing_matrix
from mobidfl.topology import GridLocation

locs = {0: GridLocation(1, 1), 1: GridLocation(1, 2), 2: GridLocation(2, 2), 3: GridLocation(4, 4)}
sizes = np.array([100, 50, 0, 30])
W = mixing_matrix(build_comm_graph(locs, 1.5), sizes)
print(np.round(W, 3))

# Client 3 is isolated, so it keeps its own model. Client 2 has no data and
# still averages what its neighbors send.

# # Repeated averaging
#
# On a connected graph the spread around the mean shrinks geometrically.

rng = np.random.default_rng(0)
pts = {i: GridLocation(1 + i % 4, 1 + i // 4) for i in range(12)}
W = mixing_matrix(build_comm_graph(pts, 1.0), np.full(12, 10))
models = rng.normal(size=(12, 5))
for t in range(0, 61):
    if t % 10 == 0:
        print(t, f"{consensus_contraction_metric(models):.3e}")
    models = consensus_update(models, W)
