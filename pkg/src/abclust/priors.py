"""Exchangeable random partition priors and their predictive urns.

The only prior shipped is the two-parameter (discount sigma, strength theta)
Pitman-Yor family, with closed-form EPPF

    P(n_1..n_k) = prod_{j=1}^{k-1} (theta + j sigma)
                  / (theta + 1)_{n-1}
                  * prod_j (1 - sigma)_{n_j - 1}

where (x)_m is the rising factorial. sigma = 0 recovers the Dirichlet
process. Everything is computed in log space; block counts in the hundreds
overflow direct products.

The base class implements the one-step predictive generically as a ratio of
EPPF values, so any exchangeable partition prior with a computable EPPF can
plug into the samplers; PitmanYor overrides it with the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .partitions import Partition, canonicalize

__all__ = [
    "PartitionPrior",
    "PitmanYor",
    "LatentState",
    "chain_rule_propose",
    "sample_partition",
    "sample_latent_state",
]


class PartitionPrior:
    """Interface for exchangeable partition priors given by an EPPF."""

    def log_eppf(self, counts) -> float:
        raise NotImplementedError

    def predictive_weights(self, counts) -> np.ndarray:
        """Probabilities for item n+1: one entry per existing block, then new.

        Generic fallback via EPPF ratios; exact closed forms should override.
        """
        counts = list(counts)
        base = self.log_eppf(counts)
        logs = []
        for j in range(len(counts)):
            grown = counts.copy()
            grown[j] += 1
            logs.append(self.log_eppf(grown) - base)
        logs.append(self.log_eppf(counts + [1]) - base)
        return np.exp(np.asarray(logs))

    def urn_step(self, counts: list, total: int, rng: np.random.Generator) -> int:
        """Index of the block item total+1 joins; len(counts) means a new block.

        Default goes through `predictive_weights`; subclasses may shortcut.
        """
        return _categorical(self.predictive_weights(counts), rng)


@dataclass(frozen=True)
class PitmanYor(PartitionPrior):
    """Pitman-Yor process prior with strength theta and discount sigma."""

    theta: float = 1.0
    sigma: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.sigma < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.sigma}")
        if not self.theta > -self.sigma:
            raise ValueError(
                f"strength must exceed -discount, got theta={self.theta} "
                f"with sigma={self.sigma}"
            )

    def log_eppf(self, counts) -> float:
        """Log EPPF of an unordered composition of block sizes."""
        counts = np.asarray(counts, dtype=float)
        if counts.size == 0:
            return 0.0
        if np.any(counts < 1):
            raise ValueError("block sizes must be positive")
        th, sg = self.theta, self.sigma
        n = counts.sum()
        k = counts.size
        front = np.sum(np.log(th + sg * np.arange(1, k)))
        blocks = np.sum(gammaln(counts - sg) - gammaln(1.0 - sg))
        denom = gammaln(th + n) - gammaln(th + 1.0)
        return float(front + blocks - denom)

    def predictive_weights(self, counts) -> np.ndarray:
        counts = np.asarray(counts, dtype=float)
        th, sg = self.theta, self.sigma
        n = counts.sum()
        w = np.empty(counts.size + 1)
        w[:-1] = (counts - sg) / (th + n)
        w[-1] = (th + counts.size * sg) / (th + n)
        return w

    def urn_step(self, counts: list, total: int, rng: np.random.Generator) -> int:
        # plain-float inverse CDF walk; this sits in the samplers' hot loop
        u = rng.random() * (self.theta + total)
        acc = 0.0
        for j, c in enumerate(counts):
            acc += c - self.sigma
            if u < acc:
                return j
        return len(counts)


@dataclass(frozen=True)
class LatentState:
    """A partition of n items together with one payload per block.

    Payloads are whatever the observation kernel hands back from its base
    measure draw (an array of reals, a parameter tuple, ...).
    """

    partition: Partition
    atoms: tuple

    def __post_init__(self):
        if len(self.atoms) != self.partition.k:
            raise ValueError(
                f"{len(self.atoms)} atoms for {self.partition.k} blocks"
            )

    @property
    def n(self) -> int:
        return self.partition.n


def _categorical(weights: np.ndarray, rng: np.random.Generator) -> int:
    # inverse-CDF walk; weights sum to 1 up to float rounding
    u = rng.random() * weights.sum()
    acc = 0.0
    for j, w in enumerate(weights):
        acc += w
        if u < acc:
            return j
    return len(weights) - 1


def chain_rule_propose(
    prior: PartitionPrior,
    current: LatentState,
    base_draw: Callable[[np.random.Generator], object],
    rng: np.random.Generator,
) -> LatentState:
    """Propose a fresh latent state by extending the predictive urn.

    Items n+1..2n are drawn sequentially from the prior's predictive,
    conditioning on the current state plus the new items generated so far.
    The returned state is the second block of n items only: atoms reused
    from `current` keep their payloads, new blocks get `base_draw` payloads,
    and old blocks that attracted no new item are dropped.

    Marginally (current state integrated out) the proposal's partition is
    again a draw from the prior; that symmetry is what makes the
    Metropolis-Hastings ratio of the ABC chain collapse to one.
    """
    n = current.n
    counts = current.partition.block_sizes().astype(np.int64).tolist()
    payloads = list(current.atoms)
    assignments = np.empty(n, dtype=np.int64)
    total = n
    for i in range(n):
        j = prior.urn_step(counts, total, rng)
        if j == len(counts):
            counts.append(1)
            payloads.append(base_draw(rng))
        else:
            counts[j] += 1
        total += 1
        assignments[i] = j
    labels = canonicalize(assignments)
    keep = []
    seen = set()
    for j in assignments:
        if j not in seen:
            seen.add(j)
            keep.append(payloads[j])
    return LatentState(Partition(labels), tuple(keep))


def sample_partition(
    prior: PartitionPrior, n: int, rng: np.random.Generator
) -> Partition:
    """Draw a partition of n items from the prior by running its urn."""
    if n < 1:
        raise ValueError("need at least one item")
    counts = [1]
    labels = np.zeros(n, dtype=np.int64)
    for i in range(1, n):
        j = prior.urn_step(counts, i, rng)
        if j == len(counts):
            counts.append(1)
        else:
            counts[j] += 1
        labels[i] = j
    return Partition(labels)


def sample_latent_state(
    prior: PartitionPrior,
    n: int,
    base_draw: Callable[[np.random.Generator], object],
    rng: np.random.Generator,
) -> LatentState:
    """Draw (partition, atoms) from the prior and base measure jointly."""
    part = sample_partition(prior, n, rng)
    atoms = tuple(base_draw(rng) for _ in range(part.k))
    return LatentState(part, atoms)
