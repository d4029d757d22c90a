"""Particle-filter trust estimation for wireless sensor networks.

Each sensor node carries a trust value in [0, 1] that decays over time
and is corrected online from the mutual agreement of the nodes' readings.
The package provides three filters behind a scikit-learn style estimator
API, a fault-injecting scenario simulator, an ingestion path for a public
indoor sensor dataset, and a Monte Carlo evaluation harness with a CLI.
"""

__version__ = "0.1.0"

from .estimators import (
    BaseTrustFilter,
    BootstrapParticleFilter,
    IndependentParticleFilter,
    IterativeParticleFilter,
    make_filter,
)
from .filters import (
    FILTER_KINDS,
    FilterError,
    FilterOutput,
    ParticleCloud,
    WeightUnderflowError,
    bdmpf_step,
    bootstrap_step,
    ipf_step,
    resample,
    run_filter,
)
from .harness import alpha_sweep, monte_carlo, rmse_trace, scaling_study
from .ingest import RawRecord, SyncConfig, parse_dataset, synchronize
from .model import (
    ModelConfig,
    ReadingFrame,
    TrustState,
    component_likelihood,
    joint_likelihood,
    transition_component,
    transition_state,
    unweighted_voting_metric,
    vote,
    voting_metric,
)
from .sim import FaultSpec, Scenario, apply_fault, generate_baseline, standard_scenario

__all__ = [
    "__version__",
    "BaseTrustFilter",
    "BootstrapParticleFilter",
    "IndependentParticleFilter",
    "IterativeParticleFilter",
    "make_filter",
    "FILTER_KINDS",
    "FilterError",
    "FilterOutput",
    "ParticleCloud",
    "WeightUnderflowError",
    "bdmpf_step",
    "bootstrap_step",
    "ipf_step",
    "resample",
    "run_filter",
    "alpha_sweep",
    "monte_carlo",
    "rmse_trace",
    "scaling_study",
    "RawRecord",
    "SyncConfig",
    "parse_dataset",
    "synchronize",
    "ModelConfig",
    "ReadingFrame",
    "TrustState",
    "component_likelihood",
    "joint_likelihood",
    "transition_component",
    "transition_state",
    "unweighted_voting_metric",
    "vote",
    "voting_metric",
    "FaultSpec",
    "Scenario",
    "apply_fault",
    "generate_baseline",
    "standard_scenario",
]
