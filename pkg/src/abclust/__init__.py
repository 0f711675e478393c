"""Clustering with intractable mixture kernels.

ABC-MCMC over random partitions: predictive-urn proposals, synthetic data
matched to observations by optimal transport, and an accept threshold that
can adapt on the fly. Ships exact marginal Gibbs baselines for tractable or
pointwise-evaluable kernels, four observation models (Gaussian, univariate
and bivariate g-and-k, random graphs), and the usual posterior summaries.
"""

__version__ = "0.1.0"

from .abc_sampler import (
    AbcConfig,
    AbcRun,
    ChainSample,
    EpsilonSchedule,
    StallError,
    abc_mcmc_adaptive,
    abc_mcmc_fixed,
    default_threshold,
    rejection_abc,
    tune_eps_star,
    update_epsilon,
)
from .gibbs import GibbsConfig, GibbsRun, exact_partition_posterior, gibbs_conjugate, gibbs_mc
from .kernels import (
    ErgmModel,
    GaussianNIG,
    Gk1Model,
    Gk2Model,
    GkParams,
    Graph,
    KernelModel,
    make_kernel,
)
from .partitions import Partition, SimilarityMatrix, entropy, enumerate_partitions, normalized_vi
from .priors import LatentState, PartitionPrior, PitmanYor, chain_rule_propose, sample_partition
from .summaries import ChainSummary, ess, similarity, summarize_chain, vi_point_estimate
from .transport import (
    CostMatrix,
    TransportResult,
    apply_matching,
    build_cost,
    hungarian,
    sinkhorn,
    wasserstein_1d,
)

__all__ = [
    "__version__",
    "AbcConfig",
    "AbcRun",
    "ChainSample",
    "EpsilonSchedule",
    "StallError",
    "abc_mcmc_adaptive",
    "abc_mcmc_fixed",
    "default_threshold",
    "rejection_abc",
    "tune_eps_star",
    "update_epsilon",
    "GibbsConfig",
    "GibbsRun",
    "exact_partition_posterior",
    "gibbs_conjugate",
    "gibbs_mc",
    "ErgmModel",
    "GaussianNIG",
    "Gk1Model",
    "Gk2Model",
    "GkParams",
    "Graph",
    "KernelModel",
    "make_kernel",
    "Partition",
    "SimilarityMatrix",
    "entropy",
    "enumerate_partitions",
    "normalized_vi",
    "LatentState",
    "PartitionPrior",
    "PitmanYor",
    "chain_rule_propose",
    "sample_partition",
    "ChainSummary",
    "ess",
    "similarity",
    "summarize_chain",
    "vi_point_estimate",
    "CostMatrix",
    "TransportResult",
    "apply_matching",
    "build_cost",
    "hungarian",
    "sinkhorn",
    "wasserstein_1d",
]
