"""Particle filters for online trust estimation.

Three filters share the same model (see :mod:`trustfilter.model`):

``bootstrap``
    A joint bootstrap particle filter over the full trust vector:
    predict, weight by the joint likelihood, resample, estimate.

``ipf``
    The iterative per-component filter.  Each step predicts one candidate
    set per node and then sweeps over the nodes, moving every node's
    estimate to its best-supported candidate given the other nodes'
    current estimates, until the joint estimate stops changing.  Later
    nodes see earlier nodes' fresh values within the same sweep.

``bdmpf``
    An independent per-node baseline: one bootstrap filter per node with
    an unweighted voting metric and no cross-node iteration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    ModelConfig,
    ReadingFrame,
    TrustState,
    _metric_from_table,
    component_log_likelihood,
    transition_values,
    vote_table,
)
from .validation import check_rng

DEFAULT_INITIAL_TRUST = 0.5

FILTER_KINDS = ("bootstrap", "ipf", "bdmpf")


class FilterError(RuntimeError):
    """A filter step failed; ``time_step`` locates the failing frame."""

    def __init__(self, message: str, time_step: Optional[int] = None):
        if time_step is not None:
            message = f"step {time_step}: {message}"
        super().__init__(message)
        self.time_step = time_step


class WeightUnderflowError(FilterError):
    """Every importance weight underflowed to zero."""


@dataclass(frozen=True)
class ParticleCloud:
    """Per-node particle sets with importance weights.

    ``particles[j, i]`` is particle ``i`` of node ``j``.  The joint filter
    reads column ``i`` across all rows as one joint sample.  Weights are
    stored per node and sum to one along each row.
    """

    particles: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        particles = np.array(self.particles, dtype=float, copy=True)
        if particles.ndim != 2:
            raise ValueError("particles must have shape (n_nodes, n_particles)")
        if ((particles < 0.0) | (particles > 1.0)).any():
            raise ValueError("particles must lie in [0, 1]")
        if self.weights is None:
            weights = np.full(particles.shape, 1.0 / particles.shape[1])
        else:
            weights = np.array(self.weights, dtype=float, copy=True)
            if weights.shape != particles.shape:
                raise ValueError("weights must match the particles shape")
            if (weights < 0.0).any():
                raise ValueError("weights must be non-negative")
            sums = weights.sum(axis=1)
            if np.abs(sums - 1.0).max() > 1e-9:
                raise ValueError("weights must sum to 1 along each row")
        particles.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "particles", particles)
        object.__setattr__(self, "weights", weights)

    @property
    def n_nodes(self) -> int:
        return self.particles.shape[0]

    @property
    def n_particles(self) -> int:
        return self.particles.shape[1]

    @classmethod
    def from_point(cls, values, n_particles: int) -> "ParticleCloud":
        """Degenerate cloud with every particle of node j at ``values[j]``."""
        values = np.asarray(values, dtype=float)
        return cls(np.repeat(values[:, None], n_particles, axis=1))

    def component_mean(self) -> np.ndarray:
        return (self.particles * self.weights).sum(axis=1)


@dataclass(frozen=True)
class FilterOutput:
    """Result of one filter step."""

    estimate: TrustState
    posterior: ParticleCloud
    iterations: int = 1
    converged: bool = True
    wall_time: float = 0.0


def normalize_weights(raw: np.ndarray) -> np.ndarray:
    """Normalize raw importance weights to sum to one.

    Raises
    ------
    WeightUnderflowError
        If every raw weight is zero, which signals that the likelihood
        underflowed for all particles.
    """
    raw = np.asarray(raw, dtype=float)
    total = raw.sum()
    if total <= 0.0 or not math.isfinite(total):
        raise WeightUnderflowError(
            "all importance weights are zero; the likelihood underflowed"
        )
    return raw / total


def resample(
    particles: np.ndarray, weights: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Multinomial resampling.

    Draws ``n`` indices independently with replacement, each with
    probability equal to its normalized weight, and returns the selected
    particles (implied output weights are uniform).  ``particles`` may be
    1d or 2d; selection runs along the first axis.
    """
    particles = np.asarray(particles, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = particles.shape[0]
    if weights.shape != (n,):
        raise ValueError("weights must be 1d and match the number of particles")
    if (weights < 0.0).any():
        raise ValueError("weights must be non-negative")
    weights = normalize_weights(weights)
    return particles[_resample_indices(weights, rng)]


def _resample_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. multinomial index draws via the inverse CDF."""
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0  # guard the top bin against rounding
    return np.searchsorted(cdf, rng.random(weights.shape[0]), side="right")


# ---------------------------------------------------------------------------
# Voting metric helpers on precomputed vote tables
# ---------------------------------------------------------------------------

def _joint_metrics(X: np.ndarray, votes: np.ndarray, counted: np.ndarray) -> np.ndarray:
    """Voting metric of every node for a batch of joint trust vectors.

    ``X`` has shape (n_samples, d); the metric of node j for sample i uses
    the sample's own other components as voter weights.
    """
    counted_f = counted.astype(float)
    numer = X @ (votes * counted_f)
    denom = X @ counted_f
    # unweighted fallback where the voters carry no trust mass
    n_voters = counted_f.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        fallback = np.where(
            n_voters > 0, (votes * counted_f).sum(axis=0) / np.maximum(n_voters, 1), 0.0
        )
        metrics = np.where(denom > 0.0, numer / np.where(denom > 0, denom, 1.0), fallback)
    return metrics


# ---------------------------------------------------------------------------
# Filter steps
# ---------------------------------------------------------------------------

def bootstrap_step(
    prior: ParticleCloud,
    frame: ReadingFrame,
    config: ModelConfig,
    rng: np.random.Generator,
) -> FilterOutput:
    """One step of the joint bootstrap filter.

    Predicts every joint particle through the aging transition, weights it
    by the joint likelihood, resamples unconditionally and estimates the
    trust vector as the mean of the resampled cloud.
    """
    started = time.perf_counter()
    config.check_frame(frame)
    d, n = prior.n_nodes, prior.n_particles
    # i.i.d. joint draws from the prior followed by the transition
    ancestors = _resample_indices(prior.weights[0], rng)
    predicted = np.empty((d, n))
    for j in range(d):
        predicted[j] = transition_values(
            prior.particles[j, ancestors], config.aging_factor, config.noise_diag[j], rng
        )
    votes, counted = vote_table(frame, config.agreement_threshold)
    X = predicted.T  # (n, d)
    metrics = _joint_metrics(X, votes, counted)
    log_w = component_log_likelihood(X, metrics, config.likelihood_scale).sum(axis=1)
    weights = normalize_weights(np.exp(log_w))
    selected = _resample_indices(weights, rng)
    posterior = ParticleCloud(predicted[:, selected])
    estimate = TrustState(
        posterior.particles.mean(axis=1), time_step=frame.time_step
    )
    return FilterOutput(
        estimate=estimate,
        posterior=posterior,
        wall_time=time.perf_counter() - started,
    )


def bdmpf_step(
    prior: ParticleCloud,
    frame: ReadingFrame,
    config: ModelConfig,
    rng: np.random.Generator,
) -> FilterOutput:
    """One step of the independent per-node baseline filter.

    Each node runs its own bootstrap filter in a single pass; the voting
    metric weighs every peer equally, so no trust feedback couples the
    nodes.
    """
    started = time.perf_counter()
    config.check_frame(frame)
    d, n = prior.n_nodes, prior.n_particles
    votes, counted = vote_table(frame, config.agreement_threshold)
    ones = np.ones(d)
    particles = np.empty((d, n))
    estimate = np.empty(d)
    for j in range(d):
        ancestors = _resample_indices(prior.weights[j], rng)
        predicted = transition_values(
            prior.particles[j, ancestors], config.aging_factor, config.noise_diag[j], rng
        )
        metric = _metric_from_table(ones, votes, counted, j)
        weights = normalize_weights(
            np.exp(component_log_likelihood(predicted, metric, config.likelihood_scale))
        )
        particles[j] = predicted[_resample_indices(weights, rng)]
        estimate[j] = particles[j].mean()
    return FilterOutput(
        estimate=TrustState(estimate, time_step=frame.time_step),
        posterior=ParticleCloud(particles),
        wall_time=time.perf_counter() - started,
    )


def _rms_difference(a: np.ndarray, b: np.ndarray) -> float:
    return math.sqrt(float(((a - b) ** 2).mean()))


def ipf_step(
    prior: ParticleCloud,
    prev_estimate: TrustState,
    frame: ReadingFrame,
    config: ModelConfig,
    rng: np.random.Generator,
) -> FilterOutput:
    """One step of the iterative per-component filter.

    Per node, ``n_particles`` candidates are predicted once from the prior
    cloud.  Sweeps then run in fixed ascending node order: the voting
    metric of node ``j`` is computed from the *current* estimates of the
    other nodes (later nodes see values updated earlier in the same
    sweep), and the estimate of ``j`` moves to the candidate with maximal
    component likelihood, i.e. the candidate closest to the metric.
    Sweeping repeats until the root-mean-square change of the estimate
    vector drops to ``config.convergence_tol`` or ``config.max_sweeps`` is
    hit, whichever comes first.  Because the sweep map is deterministic
    given the candidates, a stable assignment ends the loop with a change
    of exactly zero, which typically happens within a handful of sweeps.

    The returned posterior cloud is a multinomial resample of each node's
    candidates under the component likelihood at the converged metrics.
    """
    started = time.perf_counter()
    config.check_frame(frame)
    config.check_state(prev_estimate)
    d, n = prior.n_nodes, prior.n_particles
    votes, counted = vote_table(frame, config.agreement_threshold)

    candidates = np.empty((d, n))
    for j in range(d):
        ancestors = _resample_indices(prior.weights[j], rng)
        candidates[j] = transition_values(
            prior.particles[j, ancestors], config.aging_factor, config.noise_diag[j], rng
        )

    estimate = prev_estimate.values.copy()
    previous = np.zeros(d)  # forces at least one full sweep
    metrics = np.zeros(d)
    sweeps = 0
    converged = True
    while sweeps == 0 or _rms_difference(estimate, previous) > config.convergence_tol:
        if sweeps > 0:
            previous = estimate.copy()
        for j in range(d):
            metrics[j] = _metric_from_table(estimate, votes, counted, j)
            estimate[j] = candidates[j, np.argmin(np.abs(candidates[j] - metrics[j]))]
        sweeps += 1
        if sweeps >= config.max_sweeps:
            converged = _rms_difference(estimate, previous) <= config.convergence_tol
            break

    particles = np.empty((d, n))
    for j in range(d):
        weights = normalize_weights(
            np.exp(
                component_log_likelihood(
                    candidates[j], metrics[j], config.likelihood_scale
                )
            )
        )
        particles[j] = candidates[j, _resample_indices(weights, rng)]

    return FilterOutput(
        estimate=TrustState(estimate, time_step=frame.time_step),
        posterior=ParticleCloud(particles),
        iterations=sweeps,
        converged=converged,
        wall_time=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# Trajectory driver
# ---------------------------------------------------------------------------

def initial_cloud(config: ModelConfig, initial_trust: float) -> ParticleCloud:
    """Prior cloud with every particle at ``initial_trust``."""
    return ParticleCloud.from_point(
        np.full(config.n_nodes, initial_trust), config.n_particles
    )


def run_filter(
    kind: str,
    frames: Sequence[ReadingFrame],
    config: ModelConfig,
    initial: Optional[TrustState] = None,
    rng=None,
) -> list[FilterOutput]:
    """Run one filter over a whole reading sequence.

    Parameters
    ----------
    kind : {"bootstrap", "ipf", "bdmpf"}
        Which filter to run.
    frames : sequence of ReadingFrame
        Readings in time order; an empty sequence yields an empty result.
    config : ModelConfig
    initial : TrustState, optional
        Starting trust; defaults to 0.5 for every node.
    rng : Generator or int, optional
        Randomness source; an identical seed reproduces the trajectory
        bit for bit.

    Raises
    ------
    FilterError
        If a step fails; the error carries the failing time step.
    """
    if kind not in FILTER_KINDS:
        raise ValueError(f"unknown filter kind {kind!r}; expected one of {FILTER_KINDS}")
    rng = check_rng(rng)
    if initial is None:
        initial = TrustState(
            np.full(config.n_nodes, DEFAULT_INITIAL_TRUST), time_step=0
        )
    config.check_state(initial)
    cloud = ParticleCloud.from_point(initial.values, config.n_particles)
    estimate = initial
    outputs: list[FilterOutput] = []
    for frame in frames:
        try:
            if kind == "bootstrap":
                out = bootstrap_step(cloud, frame, config, rng)
            elif kind == "bdmpf":
                out = bdmpf_step(cloud, frame, config, rng)
            else:
                out = ipf_step(cloud, estimate, frame, config, rng)
        except FilterError as exc:
            raise type(exc)(str(exc), time_step=frame.time_step) from exc
        cloud = out.posterior
        estimate = out.estimate
        outputs.append(out)
    return outputs


def trajectory_matrix(outputs: Sequence[FilterOutput]) -> np.ndarray:
    """Stack step estimates into a (n_steps, n_nodes) matrix."""
    if not outputs:
        return np.zeros((0, 0))
    return np.stack([out.estimate.values for out in outputs])
