"""Label-skewed (Dirichlet) data assignment and per-client label statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, ContractViolation


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix ``(n, dim)`` with integer labels in ``[0, num_labels)``."""

    features: np.ndarray
    labels: np.ndarray
    num_labels: int

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2:
            raise ContractViolation(f"features must be 2-D, got shape {feats.shape}")
        if labels.shape != (feats.shape[0],):
            raise ContractViolation(
                f"{labels.shape[0] if labels.ndim else 0} labels for {feats.shape[0]} samples"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_labels):
            raise ContractViolation(f"labels must lie in [0, {self.num_labels})")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: Sequence[int] | np.ndarray) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx], self.num_labels)


@dataclass(frozen=True)
class ClientPartition:
    assignment: Mapping[int, np.ndarray]
    alpha: float

    def sizes(self) -> list[int]:
        return [len(self.assignment[i]) for i in sorted(self.assignment)]

    def __len__(self) -> int:
        return len(self.assignment)


@dataclass(frozen=True)
class LabelDistribution:
    """Normalized label frequencies; ``empty`` marks an all-zero histogram."""

    probs: np.ndarray
    empty: bool = False

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)


def sample_dirichlet(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric Dirichlet draw from normalized Gamma(alpha, 1) variates.

    Gamma(alpha) is generated as ``Gamma(alpha + 1) * U**(1/alpha)`` and the
    normalization runs in log space, since for alpha around 0.05 the raw gamma
    draws routinely underflow to exactly zero.
    """
    log_g = np.log(rng.gamma(alpha + 1.0, 1.0, size=size)) + np.log(rng.random(size)) / alpha
    w = np.exp(log_g - log_g.max())
    return w / w.sum()


def largest_remainder(proportions: np.ndarray, total: int) -> np.ndarray:
    """Integer apportionment of ``total`` that sums exactly and stays within 1 of each quota."""
    quotas = np.asarray(proportions, dtype=np.float64) * total
    counts = np.floor(quotas).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def dirichlet_partition(
    labels: Sequence[int] | np.ndarray,
    num_clients: int,
    alpha: float,
    rng: np.random.Generator,
    num_labels: int | None = None,
) -> ClientPartition:
    """Split sample indices class by class with Dirichlet(alpha) client proportions.

    For each class the indices are shuffled, a proportion vector over clients is
    drawn, and the class is cut into contiguous chunks sized by
    :func:`largest_remainder`. Every sample lands with exactly one client.
    """
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha!r}")
    if num_clients < 1:
        raise ConfigError(f"need at least one client, got {num_clients}")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ConfigError("cannot partition an empty label list")
    if num_labels is None:
        num_labels = int(labels.max()) + 1

    chunks: list[list[np.ndarray]] = [[] for _ in range(num_clients)]
    for cls in range(num_labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        props = sample_dirichlet(alpha, num_clients, rng)
        counts = largest_remainder(props, idx.size)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        for c in range(num_clients):
            chunks[c].append(idx[bounds[c] : bounds[c + 1]])

    assignment = {}
    for c in range(num_clients):
        merged = np.sort(np.concatenate(chunks[c]))
        merged.setflags(write=False)
        assignment[c] = merged
    return ClientPartition(assignment=assignment, alpha=float(alpha))


def label_histogram(partition: ClientPartition, dataset: LabeledDataset, i: int) -> np.ndarray:
    if i not in partition.assignment:
        raise ContractViolation(f"client {i!r} not in partition")
    return np.bincount(dataset.labels[partition.assignment[i]], minlength=dataset.num_labels)


def normalize(counts: Sequence[float] | np.ndarray) -> LabelDistribution:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        return LabelDistribution(np.zeros_like(counts), empty=True)
    return LabelDistribution(counts / total)


def mean_pairwise_distance(distributions: Sequence[LabelDistribution]) -> float:
    """Average L2 distance over unordered pairs, skipping empty-support entries."""
    probs = np.array([d.probs for d in distributions if not d.empty])
    if len(probs) < 2:
        return 0.0
    diff = probs[:, None, :] - probs[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    iu = np.triu_indices(len(probs), k=1)
    return float(dist[iu].mean())
