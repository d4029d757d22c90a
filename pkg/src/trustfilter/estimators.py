"""Scikit-learn style estimators wrapping the trust filters.

The estimators accept a ``(n_steps, n_nodes)`` reading matrix with NaN
marking readings that were never received, run the chosen filter over the
whole sequence and expose the per-step trust estimates as fitted
attributes.  They follow the usual conventions (``get_params``,
``set_params``, cloning, trailing-underscore fitted attributes) so they
compose with pipelines, grid search and friends.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .filters import run_filter, trajectory_matrix
from .model import (
    DEFAULT_AGING_FACTOR,
    DEFAULT_AGREEMENT_THRESHOLD,
    DEFAULT_CONVERGENCE_TOL,
    DEFAULT_LIKELIHOOD_SCALE,
    DEFAULT_MAX_SWEEPS,
    DEFAULT_N_PARTICLES,
    DEFAULT_PROCESS_NOISE,
    ModelConfig,
    ReadingFrame,
    TrustState,
)
from .validation import check_readings_matrix, check_rng


def frames_from_matrix(X) -> list[ReadingFrame]:
    """Convert a reading matrix (NaN = missing) into ReadingFrame objects."""
    values, present = check_readings_matrix(X)
    return [
        ReadingFrame(values=values[k], present=present[k], time_step=k + 1)
        for k in range(values.shape[0])
    ]


class BaseTrustFilter(BaseEstimator):
    """Common plumbing for the filter estimators."""

    _kind: str = None  # set by subclasses

    def __init__(
        self,
        n_particles=DEFAULT_N_PARTICLES,
        aging_factor=DEFAULT_AGING_FACTOR,
        process_noise=DEFAULT_PROCESS_NOISE,
        likelihood_scale=DEFAULT_LIKELIHOOD_SCALE,
        agreement_threshold=DEFAULT_AGREEMENT_THRESHOLD,
        initial_trust=0.5,
        random_state=None,
    ):
        self.n_particles = n_particles
        self.aging_factor = aging_factor
        self.process_noise = process_noise
        self.likelihood_scale = likelihood_scale
        self.agreement_threshold = agreement_threshold
        self.initial_trust = initial_trust
        self.random_state = random_state

    def _model_config(self, n_nodes: int) -> ModelConfig:
        return ModelConfig(
            n_nodes=n_nodes,
            n_particles=self.n_particles,
            aging_factor=self.aging_factor,
            process_noise=self.process_noise,
            likelihood_scale=self.likelihood_scale,
            agreement_threshold=self.agreement_threshold,
        )

    def fit(self, X, y=None):
        """Run the filter over the reading sequence ``X``.

        Parameters
        ----------
        X : array-like of shape (n_steps, n_nodes)
            Sensor readings in time order; NaN marks missing readings.
        y : ignored
            Present for API compatibility.
        """
        frames = frames_from_matrix(X)
        n_nodes = frames[0].n_nodes if frames else np.asarray(X, dtype=float).shape[1]
        config = self._model_config(n_nodes)
        rng = check_rng(self.random_state)
        initial = TrustState(np.full(n_nodes, float(self.initial_trust)), time_step=0)
        outputs = run_filter(self._kind, frames, config, initial=initial, rng=rng)
        self.n_features_in_ = n_nodes
        self.trust_trajectory_ = (
            trajectory_matrix(outputs) if outputs else np.zeros((0, n_nodes))
        )
        self.trust_ = (
            self.trust_trajectory_[-1]
            if outputs
            else np.full(n_nodes, float(self.initial_trust))
        )
        self.posterior_ = outputs[-1].posterior if outputs else None
        self.n_sweeps_ = np.array([out.iterations for out in outputs], dtype=int)
        self.converged_ = np.array([out.converged for out in outputs], dtype=bool)
        self.step_seconds_ = np.array([out.wall_time for out in outputs])
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        """Fit and return the (n_steps, n_nodes) trust trajectory."""
        return self.fit(X, y).trust_trajectory_

    def predict(self, X) -> np.ndarray:
        """Run the filter over ``X`` and return the trust trajectory.

        Filters are sequence estimators with no train/predict split, so
        this is an alias for :meth:`fit_predict`.
        """
        return self.fit_predict(X)

    def score(self, X, y) -> float:
        """Negative mean squared error of the trajectory against ``y``."""
        trajectory = self.fit_predict(X)
        y = np.asarray(y, dtype=float)
        if y.shape != trajectory.shape:
            raise ValueError(
                f"y has shape {y.shape}, expected {trajectory.shape}"
            )
        return -float(((trajectory - y) ** 2).mean())


class BootstrapParticleFilter(BaseTrustFilter):
    """Joint bootstrap particle filter over the full trust vector.

    Weighs whole trust vectors by the joint likelihood and resamples them
    unconditionally at every step.  Simple and asymptotically exact, but
    the joint weighting degrades as the number of nodes grows.

    Attributes
    ----------
    trust_trajectory_ : ndarray of shape (n_steps, n_nodes)
        Per-step trust estimates.
    trust_ : ndarray of shape (n_nodes,)
        Final-step estimate.
    """

    _kind = "bootstrap"


class IterativeParticleFilter(BaseTrustFilter):
    """Iterative per-component particle filter (kind ``"ipf"``).

    Runs one candidate-set prediction per node per step, then sweeps the
    nodes in order, snapping each node's estimate to the candidate best
    supported by the trust-weighted votes of the other nodes, until the
    joint estimate stabilizes.  Cost grows linearly with the number of
    nodes, which is the point of the construction.

    Parameters
    ----------
    convergence_tol : float
        Root-mean-square estimate change at which the sweep loop stops.
    max_sweeps : int
        Hard cap on sweeps per step; hitting it flags non-convergence.

    Attributes
    ----------
    trust_trajectory_ : ndarray of shape (n_steps, n_nodes)
    n_sweeps_ : ndarray of shape (n_steps,)
        Sweeps used at each step.
    converged_ : ndarray of bool, shape (n_steps,)
        False where the sweep cap was hit before stabilizing.
    """

    _kind = "ipf"

    def __init__(
        self,
        n_particles=DEFAULT_N_PARTICLES,
        aging_factor=DEFAULT_AGING_FACTOR,
        process_noise=DEFAULT_PROCESS_NOISE,
        likelihood_scale=DEFAULT_LIKELIHOOD_SCALE,
        agreement_threshold=DEFAULT_AGREEMENT_THRESHOLD,
        initial_trust=0.5,
        convergence_tol=DEFAULT_CONVERGENCE_TOL,
        max_sweeps=DEFAULT_MAX_SWEEPS,
        random_state=None,
    ):
        super().__init__(
            n_particles=n_particles,
            aging_factor=aging_factor,
            process_noise=process_noise,
            likelihood_scale=likelihood_scale,
            agreement_threshold=agreement_threshold,
            initial_trust=initial_trust,
            random_state=random_state,
        )
        self.convergence_tol = convergence_tol
        self.max_sweeps = max_sweeps

    def _model_config(self, n_nodes: int) -> ModelConfig:
        return ModelConfig(
            n_nodes=n_nodes,
            n_particles=self.n_particles,
            aging_factor=self.aging_factor,
            process_noise=self.process_noise,
            likelihood_scale=self.likelihood_scale,
            agreement_threshold=self.agreement_threshold,
            convergence_tol=self.convergence_tol,
            max_sweeps=self.max_sweeps,
        )


class IndependentParticleFilter(BaseTrustFilter):
    """Independent per-node baseline filter (kind ``"bdmpf"``).

    One single-pass bootstrap filter per node with an unweighted voting
    metric: every peer's vote counts the same regardless of how trusted
    the peer currently is, and nodes are estimated separately.
    """

    _kind = "bdmpf"


ESTIMATORS = {
    "bootstrap": BootstrapParticleFilter,
    "ipf": IterativeParticleFilter,
    "bdmpf": IndependentParticleFilter,
}


def make_filter(kind: str, **params) -> BaseTrustFilter:
    """Instantiate a filter estimator by kind name."""
    try:
        cls = ESTIMATORS[kind]
    except KeyError:
        raise ValueError(
            f"unknown filter kind {kind!r}; expected one of {sorted(ESTIMATORS)}"
        ) from None
    return cls(**params)
