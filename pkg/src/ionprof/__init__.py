"""Surrogate models for ion concentration profiles in slit nanochannels.

The conditional CDF of ion distance from the channel center is learned as a
function of (r, sigma, epsilon, width, molarity, charge); profiles at any
bin size follow by differencing the CDF and rescaling to concentration.
"""
from .domain import ChannelConfig, IonSpecies, assemble_features, ion_catalog
from .ground_truth import (
    EmpiricalCdf,
    SyntheticCdf,
    TrajectorySlab,
    empirical_cdf,
    synthesize_trajectory,
    synthetic_cdf,
)
from .profiles import ConcentrationProfile, predict_profile
from .sampler import CdfSample, Dataset, build_dataset, sample_config, split_rule

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig",
    "IonSpecies",
    "assemble_features",
    "ion_catalog",
    "EmpiricalCdf",
    "SyntheticCdf",
    "TrajectorySlab",
    "empirical_cdf",
    "synthesize_trajectory",
    "synthetic_cdf",
    "ConcentrationProfile",
    "predict_profile",
    "CdfSample",
    "Dataset",
    "build_dataset",
    "sample_config",
    "split_rule",
    "__version__",
]
