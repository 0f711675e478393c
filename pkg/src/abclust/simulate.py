"""Synthetic benchmark scenarios.

Each generator returns (data, truth) where truth is the component-label
partition. Numeric scenarios are fixed two-component mixtures; the graph
scenario draws an equal-weight population of sparse versus well-connected
random graphs so the spectral cost has two clearly separated topologies
to recover.
"""

from __future__ import annotations

import numpy as np

from .kernels.gk import GkParams, _transform, gk_quantile
from .kernels.graphs import ErgmParams, ergm_sample
from .partitions import Partition

__all__ = ["SCENARIOS", "simulate_scenario"]

GK_COMPONENT_A = GkParams(a=-3.0, b=0.75, g=-0.9, k=0.1)
GK_COMPONENT_B = GkParams(a=3.0, b=0.5, g=0.4, k=0.5)

# Graph population components: few edges and many isolated nodes versus a
# mid-degree connected regime. Values chosen to keep the two spectral
# profiles far apart at the default 30-node scale.
ERGM_SPARSE = ErgmParams(theta=(-3.0, 1.0, 0.0, -5.0))
ERGM_CONNECTED = ErgmParams(theta=(-1.0, -5.0, 1.0, 0.0))


def _mixture_labels(n: int, weight: float, rng) -> np.ndarray:
    return (rng.random(n) >= weight).astype(np.int64)


def gaussian_scenario(n: int, rng) -> tuple[np.ndarray, Partition]:
    """0.75 N(-3,1) + 0.25 N(3,1)."""
    z = _mixture_labels(n, 0.75, rng)
    means = np.where(z == 0, -3.0, 3.0)
    return rng.normal(means, 1.0), Partition(z)

def gk1_scenario(n: int, rng) -> tuple[np.ndarray, Partition]:
    """0.75 gk(-3,0.75,-0.9,0.1) + 0.25 gk(3,0.5,0.4,0.5)."""
    z = _mixture_labels(n, 0.75, rng)
    u = rng.random(n)
    out = np.empty(n)
    for c, p in enumerate((GK_COMPONENT_A, GK_COMPONENT_B)):
        mask = z == c
        out[mask] = gk_quantile(u[mask], p)
    return out, Partition(z)

def gk2_scenario(n: int, rng) -> tuple[np.ndarray, Partition]:
    """Equal-weight bivariate mixture of the two gk components, rho=0.5."""
    z = _mixture_labels(n, 0.5, rng)
    raw = rng.standard_normal((n, 2))
    # Gaussian copula: second coordinate correlated at rho=0.5.
    norms = np.stack(
        [raw[:, 0], 0.5 * raw[:, 0] + np.sqrt(0.75) * raw[:, 1]], axis=1
    )
    out = np.empty((n, 2))
    for c, p in enumerate((GK_COMPONENT_A, GK_COMPONENT_B)):
        mask = z == c
        for d in range(2):
            out[mask, d] = _transform(norms[mask, d], p)
    return out, Partition(z)

def ergm_scenario(n: int, rng, n_nodes: int = 30, sweeps: int = 20):
    z = _mixture_labels(n, 0.5, rng)
    graphs = []
    for c in z:
        p = ERGM_SPARSE if c == 0 else ERGM_CONNECTED
        graphs.append(ergm_sample(p, n_nodes, rng, sweeps=sweeps))
    return graphs, Partition(z)


SCENARIOS = {
    "gaussian": gaussian_scenario,
    "gk1": gk1_scenario,
    "gk2": gk2_scenario,
    "ergm": ergm_scenario,
}


def simulate_scenario(name: str, n: int, rng, **kwargs):
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[name](n, rng, **kwargs)
