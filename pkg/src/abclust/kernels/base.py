"""Shared kernel-model interface and the stock ground metrics."""

from __future__ import annotations

import numpy as np


class AbsoluteMetric:
    """|a - b| on scalars, with a vectorized pairwise table."""

    def __call__(self, a, b) -> float:
        return abs(float(a) - float(b))

    @staticmethod
    def pairwise(y, s) -> np.ndarray:
        y = np.asarray(y, dtype=float).ravel()
        s = np.asarray(s, dtype=float).ravel()
        return np.abs(y[:, None] - s[None, :])


class EuclideanMetric:
    """L2 distance on fixed-length real vectors."""

    def __call__(self, a, b) -> float:
        return float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))

    @staticmethod
    def pairwise(y, s) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        s = np.asarray(s, dtype=float)
        diff = y[:, None, :] - s[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))


class KernelModel:
    """Base measure + within-cluster sampler + ground metric for one modality.

    Concrete models override the sampling hooks. Models with tractable
    densities additionally expose `log_density` (and `prior_log_density`),
    which the marginal Gibbs samplers need; simulation-only models raise.
    """

    name: str = "kernel"
    # scalar observations admit the sort-based transport solver
    is_scalar: bool = False

    def sample_prior(self, rng: np.random.Generator):
        """One cluster parameter from the base measure."""
        raise NotImplementedError

    def sample_datum(self, theta, rng: np.random.Generator):
        """One observation from the kernel at parameter theta."""
        raise NotImplementedError

    def sample_block(self, theta, size: int, rng: np.random.Generator):
        return [self.sample_datum(theta, rng) for _ in range(size)]

    def metric(self, a, b) -> float:
        raise NotImplementedError

    def log_density(self, x, theta) -> float:
        raise NotImplementedError(f"{self.name} kernel has no tractable density")

    def log_density_many(self, x, thetas) -> np.ndarray:
        """log_density(x, .) across parameters; numeric failures come back -inf."""
        out = np.empty(len(thetas))
        for t, theta in enumerate(thetas):
            try:
                out[t] = self.log_density(x, theta)
            except ValueError:
                out[t] = -np.inf
        return out

    def log_density_block(self, xs, theta) -> np.ndarray:
        """log_density(., theta) across observations; failures come back -inf."""
        out = np.empty(len(xs))
        for t, x in enumerate(xs):
            try:
                out[t] = self.log_density(x, theta)
            except ValueError:
                out[t] = -np.inf
        return out

    def prior_log_density(self, theta) -> float:
        raise NotImplementedError(f"{self.name} base measure has no density hook")

    # free-form parameters as flat vectors, for random-walk refreshes
    def param_to_array(self, theta) -> np.ndarray:
        raise NotImplementedError

    def param_from_array(self, arr):
        """Inverse of param_to_array; raises ValueError off the support."""
        raise NotImplementedError

    def pack(self, items: list):
        """Assemble per-item draws into this model's dataset container."""
        return np.asarray(items)

    def synthesize(self, state, rng: np.random.Generator):
        """Simulate one observation per item from its block's parameter."""
        labels = state.partition.labels
        out = [None] * labels.size
        for j, theta in enumerate(state.atoms):
            idx = np.nonzero(labels == j)[0]
            block = self.sample_block(theta, idx.size, rng)
            for t, i in enumerate(idx):
                out[i] = block[t]
        return self.pack(out)
