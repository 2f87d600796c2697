"""Grid geometry, radius-disk neighbor sets and the per-round communication graph.

Locations are integer points ``(p, q)`` with ``1 <= p, q <= G``. Radius tests
compare integer squared distances against the squared radius in exact
arithmetic, so points lying exactly on the boundary are always included.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .errors import ContractViolation


class GridLocation(NamedTuple):
    p: int
    q: int


def check_location(loc: GridLocation, grid_size: int) -> None:
    if not (1 <= loc[0] <= grid_size and 1 <= loc[1] <= grid_size):
        raise ContractViolation(f"location {tuple(loc)} outside the {grid_size}x{grid_size} grid")


def squared_distance(a: GridLocation, b: GridLocation) -> int:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


def euclidean_distance(a: GridLocation, b: GridLocation) -> float:
    return math.sqrt(squared_distance(a, b))


def radius_sq_bound(radius: float) -> float:
    """Largest integer squared distance that still lies within ``radius``.

    Squared distances between grid points are integers, so ``d2 <= r**2`` holds
    exactly when ``d2 <= floor(r**2)``. The floor is taken on the exact rational
    value of ``radius``. Infinite radius maps to ``inf``.
    """
    if radius == math.inf:
        return math.inf
    if radius < 0 or math.isnan(radius):
        raise ContractViolation(f"radius must be nonnegative, got {radius!r}")
    return math.floor(Fraction(radius) ** 2)


def within(a: GridLocation, b: GridLocation, radius: float) -> bool:
    return squared_distance(a, b) <= radius_sq_bound(radius)


@lru_cache(maxsize=16)
def grid_locations(grid_size: int) -> np.ndarray:
    """All grid points as a read-only ``(G*G, 2)`` int array, ``p``-major order."""
    if grid_size < 1:
        raise ContractViolation(f"grid size must be >= 1, got {grid_size}")
    axis = np.arange(1, grid_size + 1)
    pp, qq = np.meshgrid(axis, axis, indexing="ij")
    grid = np.column_stack([pp.ravel(), qq.ravel()]).astype(np.int64)
    grid.setflags(write=False)
    return grid


def location_index(loc: GridLocation, grid_size: int) -> int:
    """Row of ``loc`` in :func:`grid_locations`."""
    return (loc[0] - 1) * grid_size + (loc[1] - 1)


def pairwise_sq_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.int64).reshape(-1, 2)
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def random_locations(n: int, grid_size: int, rng: np.random.Generator) -> list[GridLocation]:
    """Independent uniform draws over the grid; collisions are allowed."""
    coords = rng.integers(1, grid_size + 1, size=(n, 2))
    return [GridLocation(int(p), int(q)) for p, q in coords]


@dataclass(frozen=True)
class NeighborSet:
    owner: int
    members: frozenset[int]
    round: int = 0


def neighbors(
    i: int,
    locations: Mapping[int, GridLocation],
    comm_radius: float,
    round: int = 0,
) -> NeighborSet:
    """Clients other than ``i`` within ``comm_radius`` of client ``i``."""
    if i not in locations:
        raise ContractViolation(f"unknown client id {i!r}")
    if not comm_radius > 0:
        raise ContractViolation(f"communication radius must be positive, got {comm_radius!r}")
    bound = radius_sq_bound(comm_radius)
    here = locations[i]
    members = frozenset(
        j for j, loc in locations.items() if j != i and squared_distance(here, loc) <= bound
    )
    return NeighborSet(owner=i, members=members, round=round)


@dataclass(frozen=True)
class CommGraph:
    """Symmetric, irreflexive adjacency over ``nodes`` (sorted client ids).

    ``adjacency[a, b]`` refers to ``nodes[a]`` and ``nodes[b]``.
    """

    nodes: tuple[int, ...]
    adjacency: np.ndarray
    round: int = 0
    _index: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        adj = np.asarray(self.adjacency, dtype=bool)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "_index", {n: k for k, n in enumerate(self.nodes)})

    def __len__(self) -> int:
        return len(self.nodes)

    def neighbors_of(self, i: int) -> frozenset[int]:
        if i not in self._index:
            raise ContractViolation(f"unknown client id {i!r}")
        row = self.adjacency[self._index[i]]
        return frozenset(self.nodes[k] for k in np.flatnonzero(row))

    def neighbor_sets(self) -> list[frozenset[int]]:
        return [self.neighbors_of(n) for n in self.nodes]

    @property
    def edges(self) -> set[tuple[int, int]]:
        a, b = np.nonzero(np.triu(self.adjacency, k=1))
        return {(self.nodes[x], self.nodes[y]) for x, y in zip(a, b)}


def build_comm_graph(
    locations: Mapping[int, GridLocation],
    comm_radius: float,
    round: int = 0,
) -> CommGraph:
    if not comm_radius > 0:
        raise ContractViolation(f"communication radius must be positive, got {comm_radius!r}")
    nodes = tuple(sorted(locations))
    if not nodes:
        return CommGraph(nodes=(), adjacency=np.zeros((0, 0), dtype=bool), round=round)
    pts = np.array([locations[n] for n in nodes], dtype=np.int64)
    adj = pairwise_sq_distances(pts, pts) <= radius_sq_bound(comm_radius)
    np.fill_diagonal(adj, False)
    return CommGraph(nodes=nodes, adjacency=adj, round=round)


def connected_components(graph: CommGraph) -> list[frozenset[int]]:
    """Components as frozensets, ordered by their smallest client id."""
    if len(graph) == 0:
        return []
    n, labels = _cc(csr_matrix(graph.adjacency), directed=False)
    parts: dict[int, set[int]] = {}
    for node, lab in zip(graph.nodes, labels):
        parts.setdefault(int(lab), set()).add(node)
    return sorted((frozenset(p) for p in parts.values()), key=min)


def count_components(graph: CommGraph) -> int:
    if len(graph) == 0:
        return 0
    n, _ = _cc(csr_matrix(graph.adjacency), directed=False)
    return int(n)


def locations_mapping(locs: Iterable[GridLocation]) -> dict[int, GridLocation]:
    return {i: GridLocation(*loc) for i, loc in enumerate(locs)}
