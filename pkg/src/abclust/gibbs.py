"""Marginal Gibbs samplers over partitions, the in-model baselines.

Two flavors of one scan pattern (remove an item, reweight every block plus
a fresh one, reinsert):

* `gibbs_conjugate` integrates cluster parameters out entirely. It needs a
  kernel with closed-form block marginals, which the Gaussian
  normal-inverse-gamma model provides; block weights are prior predictive
  weights times Student-t predictive densities.

* `gibbs_mc` keeps cluster parameters explicit for kernels whose density is
  computable but not conjugate. The new-cluster weight replaces the
  intractable prior predictive with a Monte Carlo average of the kernel
  density over m fresh base-measure draws, and cluster parameters are
  refreshed by a few random-walk Metropolis steps per scan.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .abc_sampler import ChainSample
from .kernels import KernelModel
from .kernels.gaussian import BlockStats
from .partitions import Partition, enumerate_partitions
from .priors import PartitionPrior, sample_partition

__all__ = [
    "GibbsConfig",
    "GibbsRun",
    "gibbs_conjugate",
    "gibbs_mc",
    "exact_partition_posterior",
]


@dataclass
class GibbsConfig:
    prior: PartitionPrior
    kernel: KernelModel
    iterations: int = 20000
    burnin: int = 10000
    aux_draws: int = 10          # m, Monte Carlo variant only
    param_steps: int = 5         # random-walk refreshes per cluster per scan
    step_scale: float = 0.25     # per-coordinate proposal scale

    def __post_init__(self):
        if self.iterations < 1 or not 0 <= self.burnin < self.iterations:
            raise ValueError(
                f"need 0 <= burnin < iterations, got burnin={self.burnin} "
                f"iterations={self.iterations}"
            )
        if self.aux_draws < 1:
            raise ValueError("aux_draws must be positive")


@dataclass
class GibbsRun:
    """Kept scans plus parameter-move acceptance bookkeeping."""

    samples: list
    iter_seconds: np.ndarray
    burnin: int = 0
    param_moves: int = 0
    param_accepts: int = 0

    @property
    def param_accept_rate(self) -> float:
        return self.param_accepts / max(self.param_moves, 1)

    def kept(self) -> list:
        return [s for s in self.samples if s.iteration >= self.burnin]


def _gibbs_sample(iteration: int, labels: np.ndarray) -> ChainSample:
    part = Partition(labels.copy())
    return ChainSample(
        iteration=iteration, partition=part, raw_partition=part,
        distance=math.nan, attempts=1, epsilon=math.nan, cost=math.nan,
    )


def _drop_block(labels: np.ndarray, blocks: list, h: int):
    blocks.pop(h)
    labels[labels > h] -= 1


def allocation_log_probs(prior_weights: np.ndarray, log_liks: np.ndarray) -> np.ndarray:
    """Normalized log reallocation probabilities for one item.

    prior_weights carries one entry per existing block plus the new-block
    entry; log_liks the matching predictive log densities.
    """
    logw = np.log(prior_weights) + log_liks
    z = logsumexp(logw)
    if not np.isfinite(z):
        raise ValueError("every reallocation option has zero likelihood")
    return logw - z


def gibbs_conjugate(
    y, config: GibbsConfig, rng: np.random.Generator
) -> GibbsRun:
    """Collapsed scans with closed-form cluster marginals."""
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n < 1:
        raise ValueError("empty data")
    kernel = config.kernel
    if not hasattr(kernel, "block_log_predictive"):
        raise TypeError(
            f"kernel {kernel.name!r} exposes no conjugate block marginals"
        )
    labels = sample_partition(config.prior, n, rng).labels.copy()
    blocks = [BlockStats() for _ in range(int(labels.max()) + 1)]
    for i in range(n):
        blocks[labels[i]] = blocks[labels[i]].add(y[i])

    samples = []
    times = np.empty(config.iterations)
    empty = BlockStats()
    for r in range(config.iterations):
        t0 = time.perf_counter()
        for i in range(n):
            h = labels[i]
            blocks[h] = blocks[h].remove(y[i])
            if blocks[h].count == 0:
                _drop_block(labels, blocks, h)
            counts = [b.count for b in blocks]
            w = config.prior.predictive_weights(counts)
            logl = np.empty(len(blocks) + 1)
            for j, b in enumerate(blocks):
                logl[j] = kernel.block_log_predictive(y[i], b)
            logl[-1] = kernel.block_log_predictive(y[i], empty)
            logp = allocation_log_probs(w, logl)
            j = _sample_log_probs(logp, rng)
            if j == len(blocks):
                blocks.append(empty.add(y[i]))
            else:
                blocks[j] = blocks[j].add(y[i])
            labels[i] = j
        samples.append(_gibbs_sample(r, labels))
        times[r] = time.perf_counter() - t0
    return GibbsRun(samples, times, burnin=config.burnin)


def _sample_log_probs(logp: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random()
    acc = 0.0
    p = np.exp(logp)
    for j, pj in enumerate(p):
        acc += pj
        if u < acc:
            return j
    return p.size - 1


def gibbs_mc(
    y, config: GibbsConfig, rng: np.random.Generator
) -> GibbsRun:
    """Parameter-keeping scans with Monte Carlo new-cluster weights.

    Works for any kernel with a computable (even if only numeric) density.
    Each scan first refreshes every cluster parameter with `param_steps`
    random-walk Metropolis steps targeting G0(theta) * prod_block K(y; theta),
    then reallocates items one at a time. The new-cluster weight averages
    K(y_i; theta) over `aux_draws` fresh base-measure draws, and a winning
    new cluster adopts one of those draws with probability proportional to
    its kernel density.
    """
    kernel = config.kernel
    items = y if isinstance(y, list) else list(y)
    n = len(items)
    if n < 1:
        raise ValueError("empty data")
    m = config.aux_draws

    labels = sample_partition(config.prior, n, rng).labels.copy()
    params = [kernel.sample_prior(rng) for _ in range(int(labels.max()) + 1)]

    moves = accepts = 0
    samples = []
    times = np.empty(config.iterations)
    for r in range(config.iterations):
        t0 = time.perf_counter()

        # (A) refresh cluster parameters around their members
        for h in range(len(params)):
            member_idx = np.nonzero(labels == h)[0]
            members = [items[i] for i in member_idx]
            theta = params[h]
            cur_ll = float(np.sum(kernel.log_density_block(members, theta)))
            cur_lp = kernel.prior_log_density(theta)
            vec = kernel.param_to_array(theta)
            for _ in range(config.param_steps):
                moves += 1
                prop_vec = vec + config.step_scale * rng.standard_normal(vec.size)
                try:
                    prop = kernel.param_from_array(prop_vec)
                except ValueError:
                    continue
                prop_lp = kernel.prior_log_density(prop)
                if prop_lp == -math.inf:
                    continue
                prop_ll = float(np.sum(kernel.log_density_block(members, prop)))
                log_r = prop_ll + prop_lp - cur_ll - cur_lp
                if log_r >= 0.0 or rng.random() < math.exp(log_r):
                    accepts += 1
                    theta, vec = prop, prop_vec
                    cur_ll, cur_lp = prop_ll, prop_lp
            params[h] = theta

        # (B) reallocate items
        for i in range(n):
            h = labels[i]
            counts = np.bincount(labels, minlength=len(params))
            counts[h] -= 1
            if counts[h] == 0:
                params.pop(h)
                counts = np.delete(counts, h)
                labels[labels > h] -= 1
            w = config.prior.predictive_weights(counts.tolist())
            logl = np.empty(len(params) + 1)
            logl[:-1] = kernel.log_density_many(items[i], params)
            aux = [kernel.sample_prior(rng) for _ in range(m)]
            aux_ll = kernel.log_density_many(items[i], aux)
            logl[-1] = logsumexp(aux_ll) - math.log(m)
            logp = allocation_log_probs(w, logl)
            j = _sample_log_probs(logp, rng)
            if j == len(params):
                pick = _sample_log_probs(aux_ll - logsumexp(aux_ll), rng)
                params.append(aux[pick])
            labels[i] = j
        samples.append(_gibbs_sample(r, labels))
        times[r] = time.perf_counter() - t0
    return GibbsRun(samples, times, burnin=config.burnin,
                    param_moves=moves, param_accepts=accepts)


def exact_partition_posterior(y, prior: PartitionPrior, kernel) -> dict:
    """Enumerated posterior over all set partitions of small data.

    Weights are exp(log EPPF + sum over blocks of the conjugate block
    marginal); returns {Partition: probability}. Exponential in n, meant
    for n <= 8 oracle checks.
    """
    y = np.asarray(y, dtype=float).ravel()
    logw = {}
    for part in enumerate_partitions(y.size):
        lw = prior.log_eppf(part.block_sizes().tolist())
        for b in range(part.k):
            stats = BlockStats()
            for x in y[part.labels == b]:
                stats = stats.add(float(x))
            lw += kernel.block_log_marginal(stats)
        logw[part] = lw
    zs = logsumexp(np.array(list(logw.values())))
    return {p: float(np.exp(lw - zs)) for p, lw in logw.items()}
