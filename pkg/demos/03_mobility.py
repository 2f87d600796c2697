"""Destination distributions for DAM and DCM, plus greedy cluster centers."""

# # Label distribution of a location
#
# A mobile client estimates what it would see at grid point l: its own label
# histogram pooled with those of the static clients within R_c of l. DAM picks
# destinations with probability proportional to how different that pooled
# distribution is from the one at its current position.

from __future__ import annotations

import numpy as np

from mobidfl import StaticInfo, cluster_centers, dam_probabilities, dcm_probabilities, distribution_map
from mobidfl.topology import GridLocation

rng = np.random.default_rng(4)
G, rc = 6, 1.5
static_locs = np.array([[1, 1], [1, 2], [5, 5], [6, 6], [3, 4]])
static_hist = np.array([[9, 0, 0], [7, 1, 0], [0, 8, 0], [0, 6, 2], [0, 0, 5]])
info = StaticInfo((1, 2, 3, 4, 5), static_locs, static_hist)
own = np.array([10, 0, 0])

table = distribution_map(0, G, info, own, rc)
here = GridLocation(1, 1)
print("distribution at", here, table.row(here))

# # DAM
#
# Probabilities over all G*G points; points that look like "here" get little
# mass.

dam = dam_probabilities(here, table)
grid = dam.probs.reshape(G, G)
print(np.round(grid, 3))

# # Cluster centers and DCM
#
# The greedy pass repeatedly places a center where it covers the most
# uncovered static clients. DCM restricts destinations to those centers.

centers = cluster_centers(info, rc, G, rng)
for c, cov in zip(centers.centers, centers.covered):
    print("center", tuple(c), "covers", sorted(cov))
dcm = dcm_probabilities(here, centers, table)
print({tuple(k): round(v, 3) for k, v in dcm.as_dict().items()})
