"""Posterior summaries of a partition chain.

* `similarity`: co-clustering frequencies, the usual label-free view.
* `vi_point_estimate`: a single representative partition minimizing the
  estimated expected variation of information against the sampled chain.
* `ess`: effective sample size of a scalar trace via the initial monotone
  positive sequence truncation of the autocorrelation sum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .partitions import Partition, SimilarityMatrix, entropy, normalized_vi

logger = logging.getLogger(__name__)

__all__ = [
    "similarity",
    "vi_point_estimate",
    "ess",
    "ChainSummary",
    "summarize_chain",
]


def _label_matrix(partitions) -> np.ndarray:
    labs = np.stack([p.labels for p in partitions])
    return labs


def similarity(partitions) -> SimilarityMatrix:
    """Fraction of samples in which each item pair shares a block."""
    if len(partitions) == 0:
        raise ValueError("no samples")
    labs = _label_matrix(partitions)
    t, n = labs.shape
    acc = np.zeros((n, n))
    step = max(1, 4_000_000 // (n * n))  # chunk to bound memory
    for lo in range(0, t, step):
        chunk = labs[lo : lo + step]
        acc += np.sum(chunk[:, :, None] == chunk[:, None, :], axis=0)
    return SimilarityMatrix(acc / t, t)


def _expected_vi_all(labs, h_all, n, weights) -> np.ndarray:
    """Mean normalized VI of each sampled partition against the whole set."""
    t = labs.shape[0]
    out = np.empty(t)
    for i in range(t):
        out[i] = _expected_vi(labs[i], labs, h_all, n, weights)
    return out


def _entropy_from_counts(counts: np.ndarray) -> float:
    p = counts[counts > 0]
    p = p / p.sum()
    return float(-np.sum(p * np.log(p)))


def _expected_vi(cand: np.ndarray, labs, h_all, n: int, weights) -> float:
    """Weighted mean normalized VI of one candidate labeling against all samples."""
    kc = int(cand.max()) + 1
    counts_c = np.bincount(cand, minlength=kc)
    hc = _entropy_from_counts(counts_c)
    t = labs.shape[0]
    total = 0.0
    logn = np.log(n)
    for s in range(t):
        lab = labs[s]
        ks = int(lab.max()) + 1
        joint = np.bincount(cand * ks + lab, minlength=kc * ks) / n
        nz = joint > 0
        jl = joint[nz]
        # I = sum p log p - sum p log(row) - sum p log(col), assembled directly
        rows = (counts_c / n)[np.repeat(np.arange(kc), ks)[nz]]
        cols = (np.bincount(lab, minlength=ks) / n)[np.tile(np.arange(ks), kc)[nz]]
        mi = float(np.sum(jl * (np.log(jl) - np.log(rows) - np.log(cols))))
        total += weights[s] * max(hc + h_all[s] - 2.0 * mi, 0.0) / logn
    return total


def vi_point_estimate(
    partitions,
    greedy_passes: int = 2,
    thin: int = 10,
    seed: int = 0,
) -> Partition:
    """Partition minimizing estimated expected VI against the chain.

    Candidates are scored against the chain thinned by `thin`. The search
    starts from the best sampled partition and then sweeps greedy
    single-item moves (to each existing block or a fresh singleton) in a
    seeded random order; only strictly improving moves are taken, so the
    objective is monotone along the search path.
    """
    if len(partitions) == 0:
        raise ValueError("no samples")
    refs = partitions[::thin] if thin > 1 else list(partitions)
    if len(refs) == 0:
        refs = [partitions[-1]]
    # chains hold state for long stretches, so collapse duplicate references
    # into weights; the objective is unchanged and evals drop sharply
    counts: dict = {}
    for p in refs:
        counts[p] = counts.get(p, 0) + 1
    uniq = list(counts.keys())
    weights = np.array([counts[p] for p in uniq], dtype=float)
    weights /= weights.sum()
    labs = _label_matrix(uniq)
    n = labs.shape[1]
    if n < 2:
        raise ValueError("point estimate needs n >= 2")
    h_all = np.array([entropy(p) for p in uniq])

    scores = _expected_vi_all(labs, h_all, n, weights)
    best = int(np.argmin(scores))
    cand = labs[best].copy()
    obj = float(scores[best])

    rng = np.random.default_rng(seed)
    for _ in range(greedy_passes):
        improved = False
        for i in rng.permutation(n):
            current = cand[i]
            k = int(cand.max()) + 1
            # candidate moves: every other block, plus a fresh singleton
            targets = [b for b in range(k + 1) if b != current]
            for b in targets:
                trial = cand.copy()
                trial[i] = b
                trial = _dense(trial)
                val = _expected_vi(trial, labs, h_all, n, weights)
                if val < obj - 1e-12:
                    cand, obj = trial, val
                    improved = True
        if not improved:
            break
    return Partition(cand)


def _dense(labels: np.ndarray) -> np.ndarray:
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inverse].astype(np.int64)


def ess(series) -> float:
    """Effective sample size by the initial monotone positive sequence rule.

    Pairs of autocorrelations are summed while the pair sums stay positive
    and nonincreasing; tau = 2 * sum(pairs) - 1 and ESS = N / tau, capped at
    N. A constant series has no autocorrelation structure to estimate and
    comes back as N by convention.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("series too short")
    x = x - x.mean()
    var = float(np.dot(x, x))
    if var == 0.0:
        logger.debug("constant series: returning ESS = N")
        return float(n)
    # autocovariance via FFT, biased normalization
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n]
    rho = acov / acov[0]

    tau = -1.0
    last = np.inf
    for t in range(0, n // 2):
        pair = rho[2 * t] + (rho[2 * t + 1] if 2 * t + 1 < n else 0.0)
        if pair <= 0.0:
            break
        pair = min(pair, last)  # enforce monotone nonincreasing pair sums
        last = pair
        tau += 2.0 * pair
    tau = max(tau, 1e-12)
    return float(min(n / tau, n))


@dataclass
class ChainSummary:
    """Bundle of the standard outputs for one finished run."""

    point_estimate: Partition
    similarity: SimilarityMatrix
    ess_blocks: float
    ess_entropy: float
    acceptance_rate: float
    mean_attempts: float
    vi_to_truth: float | None = None
    median_iter_seconds: float | None = None

    def to_dict(self) -> dict:
        out = {
            "point_estimate": self.point_estimate.labels.tolist(),
            "n_blocks": self.point_estimate.k,
            "ess_blocks": self.ess_blocks,
            "ess_entropy": self.ess_entropy,
            "acceptance_rate": self.acceptance_rate,
            "mean_attempts": self.mean_attempts,
        }
        if self.vi_to_truth is not None:
            out["vi_to_truth"] = self.vi_to_truth
        if self.median_iter_seconds is not None:
            out["median_iter_seconds"] = self.median_iter_seconds
        return out


def summarize_chain(
    samples,
    burnin: int = 0,
    truth: Partition | None = None,
    acceptance_rate: float = 1.0,
    mean_attempts: float = 1.0,
    iter_seconds=None,
    thin: int = 10,
    greedy_passes: int = 2,
) -> ChainSummary:
    """Standard post-processing of kept samples (iteration >= burnin)."""
    kept = [s for s in samples if s.iteration >= burnin]
    if not kept:
        raise ValueError("no post-burn-in samples to summarize")
    parts = [s.partition for s in kept]
    point = vi_point_estimate(parts, greedy_passes=greedy_passes, thin=thin)
    sim = similarity(parts)
    blocks = np.array([p.k for p in parts], dtype=float)
    ents = np.array([entropy(p) for p in parts])
    med = None
    if iter_seconds is not None and len(iter_seconds) > burnin:
        med = float(np.median(np.asarray(iter_seconds)[burnin:]))
    return ChainSummary(
        point_estimate=point,
        similarity=sim,
        ess_blocks=ess(blocks),
        ess_entropy=ess(ents),
        acceptance_rate=acceptance_rate,
        mean_attempts=mean_attempts,
        vi_to_truth=(normalized_vi(point, truth) if truth is not None else None),
        median_iter_seconds=med,
    )
