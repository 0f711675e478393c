"""Set partitions of [n], their canonical labels, and distances between them.

Partitions are stored as dense integer label vectors in order of first
appearance, so two vectors encode the same set partition iff they are equal
elementwise. All entropies and information quantities are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Partition",
    "SimilarityMatrix",
    "canonicalize",
    "entropy",
    "normalized_vi",
    "enumerate_partitions",
    "labels_to_row",
    "row_to_labels",
]


def canonicalize(labels) -> np.ndarray:
    """Relabel blocks by order of first appearance (0, 1, 2, ...).

    Accepts any integer label vector; gaps and arbitrary block names are
    allowed on input. Idempotent.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValueError("label vector must be one-dimensional and non-empty")
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    # unique() sorts by value; rank the unique labels by first occurrence instead
    rank = np.argsort(np.argsort(first))
    return rank[inverse].astype(np.int64)


@dataclass(frozen=True)
class Partition:
    """A set partition of {0, ..., n-1} held as canonical labels."""

    labels: np.ndarray

    def __post_init__(self):
        lab = canonicalize(self.labels)
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def k(self) -> int:
        """Number of blocks."""
        return int(self.labels.max()) + 1

    def block_sizes(self) -> np.ndarray:
        """Counts n_1..n_k in block-label order."""
        return np.bincount(self.labels, minlength=self.k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(
            np.all(self.labels == other.labels)
        )

    def __hash__(self) -> int:
        return hash(self.labels.tobytes())

    def __repr__(self) -> str:
        return f"Partition({self.labels.tolist()})"


@dataclass
class SimilarityMatrix:
    """Posterior co-clustering frequencies accumulated over chain samples."""

    matrix: np.ndarray
    sample_count: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("similarity matrix must be square")
        self.matrix = m


def entropy(partition: Partition) -> float:
    """Entropy of the block-size distribution, H = -sum_j p_j log p_j (nats)."""
    p = partition.block_sizes() / partition.n
    return float(-np.sum(p * np.log(p)))


def _joint_counts(a: Partition, b: Partition) -> np.ndarray:
    kb = b.k
    flat = a.labels * kb + b.labels
    return np.bincount(flat, minlength=a.k * kb).reshape(a.k, kb)


def normalized_vi(a: Partition, b: Partition) -> float:
    """Variation of information between two partitions, normalized by log n.

    VI(a, b) = H(a) + H(b) - 2 I(a, b); zero-probability cells contribute
    nothing. The log n bound makes the result land in [0, 1] for any pair of
    partitions of the same n >= 2 items.
    """
    if a.n != b.n:
        raise ValueError("partitions must cover the same number of items")
    n = a.n
    if n < 2:
        raise ValueError("normalized VI needs at least 2 items")
    joint = _joint_counts(a, b) / n
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * (np.log(joint[nz]) - np.log(np.outer(pa, pb)[nz]))))
    ha = float(-np.sum(pa * np.log(pa)))
    hb = float(-np.sum(pb * np.log(pb)))
    vi = ha + hb - 2.0 * mi
    # exact ties can round a hair below zero
    return max(vi, 0.0) / np.log(n)


def enumerate_partitions(n: int):
    """Yield every set partition of n items as a Partition.

    Walks restricted growth strings: label[i] may be any value up to one
    past the running maximum. Bell(n) grows fast; keep n small.
    """
    if n < 1:
        raise ValueError("need at least one item")
    labels = np.zeros(n, dtype=np.int64)

    def rec(i: int, top: int):
        if i == n:
            yield Partition(labels.copy())
            return
        for v in range(top + 2):
            labels[i] = v
            yield from rec(i + 1, max(top, v))

    yield from rec(1, 0)


def labels_to_row(partition: Partition) -> list[int]:
    """Serialize as one CSV row of integer labels."""
    return partition.labels.tolist()


def row_to_labels(row) -> Partition:
    """Rebuild a partition from a CSV row of integer labels."""
    return Partition(np.asarray([int(v) for v in row], dtype=np.int64))
