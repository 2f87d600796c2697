"""Dataset-size weighted mixing matrix and the consensus averaging step.

Models are stacked row-wise: ``models[i]`` is client ``i``'s flat parameter
vector, so one consensus step is ``W @ models``.
"""

from __future__ import annotations

from typing import AbstractSet, Sequence

import numpy as np

from .errors import ContractViolation
from .topology import CommGraph


def mixing_matrix(
    neighbor_sets: Sequence[AbstractSet[int]] | CommGraph,
    dataset_sizes: Sequence[int] | np.ndarray,
) -> np.ndarray:
    """Row-stochastic weights ``w[i, j] = |D_j| / (|D_i| + sum_{k in N_i} |D_k|)``.

    ``neighbor_sets[i]`` lists the neighbors of client ``i`` (clients are
    ``0..C-1``). A client whose own and neighbors' datasets are all empty keeps
    its model: ``w[i, i] = 1``.
    """
    if isinstance(neighbor_sets, CommGraph):
        if neighbor_sets.nodes != tuple(range(len(neighbor_sets))):
            raise ContractViolation("mixing expects clients numbered 0..C-1")
        adj = np.array(neighbor_sets.adjacency, dtype=bool)
    else:
        n = len(neighbor_sets)
        adj = np.zeros((n, n), dtype=bool)
        for i, members in enumerate(neighbor_sets):
            for j in members:
                if not 0 <= j < n or j == i:
                    raise ContractViolation(f"invalid neighbor {j!r} for client {i}")
                adj[i, j] = True
        if not np.array_equal(adj, adj.T):
            raise ContractViolation("neighbor sets are not symmetric")
    sizes = np.asarray(dataset_sizes, dtype=np.float64)
    if sizes.shape != (adj.shape[0],):
        raise ContractViolation(f"{sizes.shape[0]} dataset sizes for {adj.shape[0]} clients")
    if (sizes < 0).any():
        raise ContractViolation("dataset sizes must be nonnegative")

    support = adj | np.eye(adj.shape[0], dtype=bool)
    numer = np.where(support, sizes[None, :], 0.0)
    denom = numer.sum(axis=1)
    W = np.zeros_like(numer)
    live = denom > 0
    W[live] = numer[live] / denom[live, None]
    W[~live, :] = 0.0
    W[np.flatnonzero(~live), np.flatnonzero(~live)] = 1.0
    return W


def consensus_update(models: np.ndarray, W: np.ndarray) -> np.ndarray:
    models = np.asarray(models, dtype=np.float64)
    if models.ndim != 2:
        raise ContractViolation(f"model stack must be 2-D (clients, params), got {models.shape}")
    if W.shape != (models.shape[0], models.shape[0]):
        raise ContractViolation(f"mixing matrix {W.shape} does not match {models.shape[0]} clients")
    return W @ models


def consensus_contraction_metric(models: np.ndarray) -> float:
    """Mean squared distance of the client models from their plain average."""
    models = np.asarray(models, dtype=np.float64)
    dev = models - models.mean(axis=0, keepdims=True)
    return float(np.mean(np.sum(dev * dev, axis=1)))
