"""Mobility patterns for the mobile subset of clients.

Four patterns are supported:

* ``static``: nobody moves.
* ``random``: each round a mobile client jumps to a uniformly chosen grid point
  within ``move_radius`` of where it stands.
* ``dam``: a mobile client draws a destination over the whole grid with
  probability proportional to how far the label distribution it would see there
  is from the one it sees now, then walks toward it at most ``move_radius`` per
  round, keeping the destination until it arrives.
* ``dcm``: as ``dam``, but destinations are restricted to greedy cluster
  centers that cover the static clients.

The label distribution "seen" at a location is the pooled label histogram of
the owner plus every static client within communication range of that location.
Only static clients enter this pool, so each mobile client's table is fixed
before training starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ContractViolation
from .partition import LabelDistribution, normalize
from .topology import (
    GridLocation,
    check_location,
    grid_locations,
    location_index,
    pairwise_sq_distances,
    radius_sq_bound,
    squared_distance,
)


class Pattern(str, Enum):
    STATIC = "static"
    RANDOM = "random"
    DAM = "dam"
    DCM = "dcm"

    @classmethod
    def parse(cls, value: "str | Pattern") -> "Pattern":
        try:
            return cls(str(value.value if isinstance(value, Pattern) else value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown mobility pattern {value!r}; expected one of {[p.value for p in cls]}"
            ) from None


@dataclass(frozen=True)
class MobilityState:
    client: int
    current: GridLocation
    pattern: Pattern
    move_radius: float = math.inf
    destination: GridLocation | None = None

    @property
    def unconstrained(self) -> bool:
        return self.move_radius == math.inf


@dataclass(frozen=True)
class StaticInfo:
    """Initial locations and label histograms of the static clients."""

    ids: tuple[int, ...]
    locations: np.ndarray
    histograms: np.ndarray

    def __post_init__(self) -> None:
        locs = np.asarray(self.locations, dtype=np.int64).reshape(-1, 2)
        hists = np.asarray(self.histograms, dtype=np.float64)
        if hists.ndim != 2 or hists.shape[0] != locs.shape[0] or len(self.ids) != locs.shape[0]:
            raise ContractViolation("static ids, locations and histograms must align")
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "histograms", hists)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def num_labels(self) -> int:
        return self.histograms.shape[1]

    def coverage(self, points: np.ndarray, comm_radius: float) -> np.ndarray:
        """Boolean ``(len(points), n_static)``: static client within range of point."""
        return pairwise_sq_distances(points, self.locations) <= radius_sq_bound(comm_radius)


def location_distribution(
    i_m: int,
    location: GridLocation,
    static_info: StaticInfo,
    own_histogram: Sequence[float] | np.ndarray,
    comm_radius: float,
) -> LabelDistribution:
    """Pooled label distribution of ``i_m`` and the static clients in range of ``location``."""
    if i_m in static_info.ids:
        raise ContractViolation(f"client {i_m} is static; location tables are for mobile clients")
    own = np.asarray(own_histogram, dtype=np.float64)
    if own.shape != (static_info.num_labels,) and len(static_info):
        raise ContractViolation("own histogram length does not match static histograms")
    total = own.copy()
    bound = radius_sq_bound(comm_radius)
    for loc, hist in zip(static_info.locations, static_info.histograms):
        if squared_distance(location, loc) <= bound:
            total += hist
    return normalize(total)


@dataclass(frozen=True)
class LocationDistributionMap:
    """Label distribution that ``owner`` would see at every grid point.

    Rows of ``probs`` follow :func:`~mobidfl.topology.grid_locations` order.
    Rows flagged in ``empty`` have no samples behind them and hold zeros.
    """

    owner: int
    grid_size: int
    probs: np.ndarray
    empty: np.ndarray
    locations: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if self.locations is None:
            object.__setattr__(self, "locations", grid_locations(self.grid_size))
        for name in ("probs", "empty", "locations"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def row(self, loc: GridLocation) -> np.ndarray:
        return self.probs[location_index(loc, self.grid_size)]

    def at(self, loc: GridLocation) -> LabelDistribution:
        k = location_index(loc, self.grid_size)
        return LabelDistribution(self.probs[k], empty=bool(self.empty[k]))


def distribution_map(
    i_m: int,
    grid_size: int,
    static_info: StaticInfo,
    own_histogram: Sequence[float] | np.ndarray,
    comm_radius: float,
) -> LocationDistributionMap:
    """Vectorized :func:`location_distribution` over the whole grid."""
    if i_m in static_info.ids:
        raise ContractViolation(f"client {i_m} is static; location tables are for mobile clients")
    grid = grid_locations(grid_size)
    own = np.asarray(own_histogram, dtype=np.float64)
    counts = np.broadcast_to(own, (grid.shape[0], own.shape[0])).copy()
    if len(static_info):
        cov = static_info.coverage(grid, comm_radius).astype(np.float64)
        counts += cov @ static_info.histograms
    totals = counts.sum(axis=1)
    empty = totals <= 0
    probs = np.divide(counts, totals[:, None], out=np.zeros_like(counts), where=~empty[:, None])
    return LocationDistributionMap(i_m, grid_size, probs, empty, grid)


def distribution_distance(
    ref: LabelDistribution | np.ndarray, other: LabelDistribution | np.ndarray
) -> float:
    a = ref.probs if isinstance(ref, LabelDistribution) else np.asarray(ref, dtype=np.float64)
    b = other.probs if isinstance(other, LabelDistribution) else np.asarray(other, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"distribution shapes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


@dataclass(frozen=True)
class DestinationDistribution:
    """Probabilities over candidate destinations, aligned row by row."""

    locations: np.ndarray
    probs: np.ndarray

    def as_dict(self) -> dict[GridLocation, float]:
        return {GridLocation(int(p), int(q)): float(w) for (p, q), w in zip(self.locations, self.probs)}

    def sample(self, rng: np.random.Generator) -> GridLocation:
        k = rng.choice(len(self.probs), p=self.probs)
        p, q = self.locations[k]
        return GridLocation(int(p), int(q))


def proportional_to_distance(ref: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Normalize L2 distances from ``ref`` to each candidate row; uniform if all are zero."""
    d = np.sqrt(np.sum((candidates - ref) ** 2, axis=1))
    total = d.sum()
    if total == 0:
        return np.full(len(d), 1.0 / len(d))
    return d / total


def dam_probabilities(current: GridLocation, dist_map: LocationDistributionMap) -> DestinationDistribution:
    """Destination probabilities over the whole grid for one mobile client."""
    check_location(current, dist_map.grid_size)
    probs = proportional_to_distance(dist_map.row(current), dist_map.probs)
    return DestinationDistribution(dist_map.locations, probs)


@dataclass(frozen=True)
class ClusterCenters:
    """Greedy cover of the static clients, in selection order.

    ``covered[n]`` holds the static ids first covered by ``centers[n]``.
    """

    centers: tuple[GridLocation, ...]
    covered: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.centers)

    def as_array(self) -> np.ndarray:
        return np.array(self.centers, dtype=np.int64).reshape(-1, 2)


def cluster_centers(
    static_info: StaticInfo,
    comm_radius: float,
    grid_size: int,
    rng: np.random.Generator,
) -> ClusterCenters:
    """Greedy max-coverage placement of centers until every static client is covered.

    Each step keeps the grid points covering the most still-uncovered static
    clients. From the second step on, ties are narrowed to the points covering
    the most static clients overall, and any tie left is broken uniformly with
    ``rng``.
    """
    grid = grid_locations(grid_size)
    cov = static_info.coverage(grid, comm_radius)
    uncovered = np.ones(len(static_info), dtype=bool)
    total_cover = cov.sum(axis=1)
    centers: list[GridLocation] = []
    covered: list[frozenset[int]] = []
    while uncovered.any():
        gain = cov[:, uncovered].sum(axis=1)
        cand = np.flatnonzero(gain == gain.max())
        if len(cand) > 1 and centers:
            tot = total_cover[cand]
            cand = cand[tot == tot.max()]
        pick = cand[rng.integers(len(cand))]
        hit = cov[pick] & uncovered
        if not hit.any():
            # every static client sits on the grid, so its own point always covers it
            raise ContractViolation("static client location outside the grid")
        uncovered &= ~hit
        centers.append(GridLocation(int(grid[pick, 0]), int(grid[pick, 1])))
        covered.append(frozenset(static_info.ids[k] for k in np.flatnonzero(hit)))
    return ClusterCenters(tuple(centers), tuple(covered))


def dcm_probabilities(
    current: GridLocation,
    centers: ClusterCenters,
    dist_map: LocationDistributionMap,
) -> DestinationDistribution:
    """Destination probabilities restricted to the cluster centers."""
    if len(centers) == 0:
        raise ContractViolation("no cluster centers to move between")
    check_location(current, dist_map.grid_size)
    locs = centers.as_array()
    rows = dist_map.probs[(locs[:, 0] - 1) * dist_map.grid_size + (locs[:, 1] - 1)]
    probs = proportional_to_distance(dist_map.row(current), rows)
    return DestinationDistribution(locs, probs)


def reachable(current: GridLocation, move_radius: float, grid_size: int) -> np.ndarray:
    """Grid points within ``move_radius`` of ``current`` (always includes ``current``)."""
    grid = grid_locations(grid_size)
    if move_radius == math.inf:
        return grid
    d2 = pairwise_sq_distances(grid, np.array([current]))[:, 0]
    return grid[d2 <= radius_sq_bound(move_radius)]


def step_random(state: MobilityState, grid_size: int, rng: np.random.Generator) -> GridLocation:
    ball = reachable(state.current, state.move_radius, grid_size)
    p, q = ball[rng.integers(len(ball))]
    return GridLocation(int(p), int(q))


def step_toward(
    state: MobilityState,
    source: Callable[[GridLocation], DestinationDistribution],
    grid_size: int,
    rng: np.random.Generator,
) -> tuple[GridLocation, GridLocation]:
    """Advance one round toward the held destination, drawing a new one on arrival.

    Returns ``(new_location, destination)``. If the destination is out of reach
    the client stops at the reachable point closest to it, ties broken
    uniformly with ``rng``.
    """
    dest = state.destination
    if dest is None or tuple(dest) == tuple(state.current):
        dest = source(state.current).sample(rng)
    if squared_distance(dest, state.current) <= radius_sq_bound(state.move_radius):
        return GridLocation(*dest), GridLocation(*dest)
    ball = reachable(state.current, state.move_radius, grid_size)
    d2 = pairwise_sq_distances(ball, np.array([dest]))[:, 0]
    ties = np.flatnonzero(d2 == d2.min())
    p, q = ball[ties[rng.integers(len(ties))]]
    return GridLocation(int(p), int(q)), GridLocation(*dest)


@dataclass(frozen=True)
class MobilityPlanner:
    """Per-run pattern machinery: distribution tables and, for DCM, cluster centers."""

    pattern: Pattern
    grid_size: int
    dist_maps: Mapping[int, LocationDistributionMap] = field(default_factory=dict)
    centers: ClusterCenters | None = None

    @classmethod
    def build(
        cls,
        pattern: Pattern | str,
        grid_size: int,
        comm_radius: float,
        static_info: StaticInfo,
        own_histograms: Mapping[int, np.ndarray],
        rng: np.random.Generator,
    ) -> "MobilityPlanner":
        pattern = Pattern.parse(pattern)
        maps: dict[int, LocationDistributionMap] = {}
        centers = None
        if pattern in (Pattern.DAM, Pattern.DCM):
            for i in sorted(own_histograms):
                maps[i] = distribution_map(i, grid_size, static_info, own_histograms[i], comm_radius)
        if pattern is Pattern.DCM:
            if len(static_info) == 0:
                raise ConfigError("dcm needs at least one static client to place cluster centers")
            centers = cluster_centers(static_info, comm_radius, grid_size, rng)
        return cls(pattern, grid_size, maps, centers)

    def destinations(self, client: int, current: GridLocation) -> DestinationDistribution:
        if self.pattern is Pattern.DAM:
            return dam_probabilities(current, self.dist_maps[client])
        if self.pattern is Pattern.DCM:
            return dcm_probabilities(current, self.centers, self.dist_maps[client])
        raise ContractViolation(f"pattern {self.pattern.value} has no destination distribution")

    def step(self, state: MobilityState, rng: np.random.Generator) -> MobilityState:
        if state.pattern is Pattern.STATIC:
            return state
        if state.pattern is Pattern.RANDOM:
            return replace(state, current=step_random(state, self.grid_size, rng))
        loc, dest = step_toward(
            state, lambda here: self.destinations(state.client, here), self.grid_size, rng
        )
        return replace(state, current=loc, destination=dest)


def advance_round(
    states: Mapping[int, MobilityState],
    planner: MobilityPlanner,
    rngs: Mapping[int, np.random.Generator] | Callable[[int], np.random.Generator],
) -> dict[int, MobilityState]:
    """Move every mobile client once, in ascending id order.

    ``rngs`` supplies one generator per client for this round, so the outcome
    does not depend on evaluation order.
    """
    get = rngs if callable(rngs) else rngs.__getitem__
    return {i: planner.step(states[i], get(i)) for i in sorted(states)}
