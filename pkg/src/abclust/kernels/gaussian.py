"""Gaussian kernel with a normal-inverse-gamma base measure.

Cluster parameter theta = (mu, var): var ~ InvGamma(shape_0, rate_0) and
mu | var ~ N(loc_0, scale_0 * var). The defaults (2, 2, 0, 2) put the prior
mean of var at rate_0 / (shape_0 - 1) = 2. Conjugacy gives closed forms for
the cluster marginal likelihood and the Student-t predictive, which is all
the collapsed Gibbs sampler needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .base import AbsoluteMetric, KernelModel

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BlockStats:
    """Running sufficient statistics of one cluster: count, sum, sum of squares."""

    count: int = 0
    total: float = 0.0
    sq_total: float = 0.0

    def add(self, x: float) -> "BlockStats":
        return BlockStats(self.count + 1, self.total + x, self.sq_total + x * x)

    def remove(self, x: float) -> "BlockStats":
        return BlockStats(self.count - 1, self.total - x, self.sq_total - x * x)


class GaussianNIG(KernelModel):
    name = "gaussian"
    is_scalar = True

    def __init__(
        self,
        shape0: float = 2.0,
        rate0: float = 2.0,
        loc0: float = 0.0,
        scale0: float = 2.0,
    ):
        if shape0 <= 0 or rate0 <= 0 or scale0 <= 0:
            raise ValueError("inverse-gamma and scaling hyperparameters must be positive")
        self.shape0 = shape0
        self.rate0 = rate0
        self.loc0 = loc0
        self.scale0 = scale0
        # precision multiplier; mu | var has variance scale0 * var = var / lam0
        self.lam0 = 1.0 / scale0
        self.metric = AbsoluteMetric()

    # ---- sampling ----------------------------------------------------------

    def sample_prior(self, rng):
        var = self.rate0 / rng.gamma(self.shape0)
        mu = rng.normal(self.loc0, math.sqrt(self.scale0 * var))
        return (float(mu), float(var))

    def sample_datum(self, theta, rng):
        mu, var = theta
        return float(rng.normal(mu, math.sqrt(var)))

    def sample_block(self, theta, size, rng):
        mu, var = theta
        return rng.normal(mu, math.sqrt(var), size=size)

    def synthesize(self, state, rng):
        labels = state.partition.labels
        out = np.empty(labels.size)
        for j, theta in enumerate(state.atoms):
            idx = labels == j
            out[idx] = rng.normal(theta[0], math.sqrt(theta[1]), size=int(idx.sum()))
        return out

    # ---- densities ---------------------------------------------------------

    def log_density(self, x, theta) -> float:
        mu, var = theta
        if var <= 0:
            return -math.inf
        return -0.5 * (LOG_2PI + math.log(var)) - 0.5 * (x - mu) ** 2 / var

    def log_density_block(self, xs, theta) -> np.ndarray:
        mu, var = theta
        xs = np.asarray(xs, dtype=float)
        if var <= 0:
            return np.full(xs.shape, -np.inf)
        return -0.5 * (LOG_2PI + np.log(var)) - 0.5 * (xs - mu) ** 2 / var

    def prior_log_density(self, theta) -> float:
        mu, var = theta
        if var <= 0:
            return -math.inf
        a, b = self.shape0, self.rate0
        log_ig = a * math.log(b) - gammaln(a) - (a + 1.0) * math.log(var) - b / var
        mv = self.scale0 * var
        log_mu = -0.5 * (LOG_2PI + math.log(mv)) - 0.5 * (mu - self.loc0) ** 2 / mv
        return float(log_ig + log_mu)

    def param_to_array(self, theta) -> np.ndarray:
        return np.asarray(theta, dtype=float)

    def param_from_array(self, arr):
        mu, var = float(arr[0]), float(arr[1])
        if var <= 0:
            raise ValueError("variance must be positive")
        return (mu, var)

    # ---- conjugate closed forms -------------------------------------------

    def _posterior(self, stats: BlockStats):
        m = stats.count
        lam = self.lam0 + m
        loc = (self.lam0 * self.loc0 + stats.total) / lam
        shape = self.shape0 + 0.5 * m
        if m > 0:
            mean = stats.total / m
            ss = max(stats.sq_total - m * mean * mean, 0.0)
            rate = self.rate0 + 0.5 * ss + (
                0.5 * self.lam0 * m * (mean - self.loc0) ** 2 / lam
            )
        else:
            rate = self.rate0
        return lam, loc, shape, rate

    def block_log_marginal(self, stats: BlockStats) -> float:
        """Log marginal likelihood of a cluster's members, parameters integrated out."""
        lam, _, shape, rate = self._posterior(stats)
        return float(
            -0.5 * stats.count * LOG_2PI
            + 0.5 * (math.log(self.lam0) - math.log(lam))
            + self.shape0 * math.log(self.rate0)
            - shape * math.log(rate)
            + gammaln(shape)
            - gammaln(self.shape0)
        )

    def block_log_predictive(self, x: float, stats: BlockStats) -> float:
        """Student-t predictive of one new point given a cluster's current members.

        With empty stats this is the prior predictive.
        """
        lam, loc, shape, rate = self._posterior(stats)
        dof = 2.0 * shape
        scale_sq = rate * (lam + 1.0) / (shape * lam)
        z_sq = (x - loc) ** 2 / (dof * scale_sq)
        return float(
            gammaln(0.5 * (dof + 1.0))
            - gammaln(0.5 * dof)
            - 0.5 * math.log(dof * math.pi * scale_sq)
            - 0.5 * (dof + 1.0) * math.log1p(z_sq)
        )
