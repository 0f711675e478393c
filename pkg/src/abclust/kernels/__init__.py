"""Observation kernels: base measure, within-cluster sampler, ground metric."""

from __future__ import annotations

from .base import KernelModel
from .gaussian import GaussianNIG
from .gk import Gk1Model, Gk2Model, GkParams, gk_log_density, gk_quantile
from .graphs import ErgmModel, Graph, ergm_sample, ergm_stats, spectral_distance

__all__ = [
    "KernelModel",
    "GaussianNIG",
    "Gk1Model",
    "Gk2Model",
    "GkParams",
    "gk_quantile",
    "gk_log_density",
    "Graph",
    "ErgmModel",
    "ergm_stats",
    "ergm_sample",
    "spectral_distance",
    "make_kernel",
]

_PRESETS = {
    "gaussian": GaussianNIG,
    "gk1": Gk1Model,
    "gk2": Gk2Model,
    "ergm": ErgmModel,
}


def make_kernel(name: str, **kwargs) -> KernelModel:
    """Kernel presets used by the command line: gaussian, gk1, gk2, ergm."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel {name!r}; choose from {sorted(_PRESETS)}"
        ) from None
    return factory(**kwargs)
