"""Neighbor sets and connectivity on a small grid."""

# # Clients on a grid
#
# Clients sit on integer points of a G x G grid (1-indexed). Two clients can
# exchange models when their Euclidean distance is at most the communication
# radius R_c. Co-located clients are always neighbors.

from __future__ import annotations

import numpy as np

from mobidfl import build_comm_graph, connected_components, neighbors
from mobidfl.topology import GridLocation, random_locations

rng = np.random.default_rng(0)
G = 8
locs = {i: GridLocation(*map(int, p)) for i, p in enumerate(random_locations(6, G, rng))}
for i, loc in locs.items():
    print(i, loc)

# # Neighbor sets
#
# `neighbors` answers the question for one client; `build_comm_graph` builds
# the whole symmetric adjacency at once.

print(neighbors(0, locs, comm_radius=2.5).members)

for rc in (1.0, 2.5, 4.0, 8.0):
    graph = build_comm_graph(locs, rc)
    comps = connected_components(graph)
    print(f"R_c={rc}: {len(graph.edges)} edges, components {[sorted(c) for c in comps]}")
