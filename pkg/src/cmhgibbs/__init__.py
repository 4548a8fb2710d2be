"""Random-scan Gibbs sampling and its conditional Metropolis-Hastings variant.

The CMH update proposes a block value from its full conditional restricted to
lie outside a neighborhood of the current value, trading local moves for
larger jumps. The package provides the kernels, the models used to study
them, efficiency diagnostics, ergodicity thresholds and an experiment harness.
"""

from cmhgibbs.diagnostics import ChainSummary, ExperimentReport
from cmhgibbs.distributions import DomainError, Gamma1D, GammaPair, Gaussian1D, IsotropicGaussianBlock, Uniform01
from cmhgibbs.models import NormalNormalModel, RandomEffectsModel, REData, UnitSquareModel, simulate_re_data
from cmhgibbs.neighborhoods import ConfigurationError, NeighborhoodSpec, realize
from cmhgibbs.sampler import ScanProbabilities, StateVector, StuckProposalError, cmh_step, gibbs_step

__version__ = "0.1.0"

__all__ = [
    "ChainSummary", "ExperimentReport",
    "DomainError", "Gamma1D", "GammaPair", "Gaussian1D", "IsotropicGaussianBlock", "Uniform01",
    "NormalNormalModel", "RandomEffectsModel", "REData", "UnitSquareModel", "simulate_re_data",
    "ConfigurationError", "NeighborhoodSpec", "realize",
    "ScanProbabilities", "StateVector", "StuckProposalError", "cmh_step", "gibbs_step",
]
