"""State-space trust model for networks of peer sensors.

Each node carries a scalar trust value in [0, 1].  Trust decays over time
through an aging transition with additive Gaussian noise, and is corrected
by observations through a voting mechanism: nodes whose readings agree
within a threshold vote for each other, votes are weighted by the voters'
own trust, and the likelihood of a trust value decays exponentially with
its distance from the resulting voting metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .validation import check_positive, check_rng, check_unit_interval

#: Library defaults for the model parameters.
DEFAULT_N_PARTICLES = 100
DEFAULT_AGING_FACTOR = 0.85
DEFAULT_PROCESS_NOISE = 0.01
DEFAULT_LIKELIHOOD_SCALE = 0.1
DEFAULT_AGREEMENT_THRESHOLD = 0.6
DEFAULT_CONVERGENCE_TOL = 1e-5
DEFAULT_MAX_SWEEPS = 100

# Rounds of vectorised redraws before the truncated transition gives up.
# The acceptance probability of a single redraw is at least ~0.5, so this
# bound is unreachable unless the random source is broken.
_MAX_REDRAW_ROUNDS = 1000


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrustState:
    """Per-node trust values at one time step.

    Parameters
    ----------
    values : sequence of float
        One trust value per node, each in [0, 1].
    time_step : int
        Non-negative step index; 0 denotes the initial state.
    """

    values: np.ndarray
    time_step: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.ndim != 1:
            raise ValueError("trust values must be a 1d sequence")
        check_unit_interval(self.values, "trust values")
        if self.time_step < 0:
            raise ValueError("time_step must be non-negative")

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ReadingFrame:
    """Readings reported by every node at one time step.

    A node that reported nothing is marked absent through the ``present``
    mask rather than by any sentinel value.  Constructing a frame from a
    sequence containing ``None`` or NaN marks those nodes absent.
    """

    values: np.ndarray
    present: np.ndarray = None
    time_step: int = 0

    def __post_init__(self):
        raw = [np.nan if v is None else float(v) for v in self.values]
        values = np.array(raw, dtype=float)
        if self.present is None:
            present = ~np.isnan(values)
        else:
            present = np.array(self.present, dtype=bool, copy=True)
            if present.shape != values.shape:
                raise ValueError("present mask must match the readings shape")
            present &= ~np.isnan(values)
        values = np.where(present, values, np.nan)
        object.__setattr__(self, "values", _readonly(values))
        present.setflags(write=False)
        object.__setattr__(self, "present", present)
        if self.values.ndim != 1:
            raise ValueError("readings must be a 1d sequence")
        if self.time_step < 0:
            raise ValueError("time_step must be non-negative")

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    def reading(self, node: int) -> Optional[float]:
        """Reading of ``node``, or None if it did not report."""
        return float(self.values[node]) if self.present[node] else None


@dataclass(frozen=True)
class ModelConfig:
    """All model and filter parameters.

    Parameters
    ----------
    n_nodes : int
        Number of sensor nodes (the state dimension), at least 2.
    n_particles : int
        Particles per (component) filter.
    aging_factor : float
        Multiplicative trust decay per step, in (0, 1).
    process_noise : float or sequence of float
        Variance of the additive transition noise; a scalar is broadcast
        to every node.  Zero switches the transition to its deterministic
        degenerate mode (useful in tests).
    likelihood_scale : float
        Decay scale of the observation likelihood, in (0, 1); smaller
        values make the likelihood sharper.
    agreement_threshold : float
        Two readings closer than this (strictly) count as agreeing.
    convergence_tol : float
        Stop threshold on the root-mean-square change of the estimate
        between sweeps of the iterative filter.
    max_sweeps : int
        Safety cap on the iterative filter's inner loop.
    """

    n_nodes: int
    n_particles: int = DEFAULT_N_PARTICLES
    aging_factor: float = DEFAULT_AGING_FACTOR
    process_noise: float | Sequence[float] = DEFAULT_PROCESS_NOISE
    likelihood_scale: float = DEFAULT_LIKELIHOOD_SCALE
    agreement_threshold: float = DEFAULT_AGREEMENT_THRESHOLD
    convergence_tol: float = DEFAULT_CONVERGENCE_TOL
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    noise_diag: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be at least 2")
        if self.n_particles < 1:
            raise ValueError("n_particles must be at least 1")
        if not 0.0 < self.aging_factor < 1.0:
            raise ValueError("aging_factor must lie in (0, 1)")
        if not 0.0 < self.likelihood_scale < 1.0:
            raise ValueError("likelihood_scale must lie in (0, 1)")
        check_positive(self.agreement_threshold, "agreement_threshold")
        check_positive(self.convergence_tol, "convergence_tol")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        diag = np.asarray(self.process_noise, dtype=float)
        if diag.ndim == 0:
            diag = np.full(self.n_nodes, float(diag))
        if diag.shape != (self.n_nodes,):
            raise ValueError(
                f"process_noise must be a scalar or length-{self.n_nodes} sequence"
            )
        check_positive(diag, "process_noise", allow_zero=True)
        object.__setattr__(self, "noise_diag", _readonly(diag))

    def check_state(self, state: TrustState) -> None:
        if state.n_nodes != self.n_nodes:
            raise ValueError(
                f"state has {state.n_nodes} nodes, config expects {self.n_nodes}"
            )

    def check_frame(self, frame: ReadingFrame) -> None:
        if frame.n_nodes != self.n_nodes:
            raise ValueError(
                f"frame has {frame.n_nodes} nodes, config expects {self.n_nodes}"
            )


# ---------------------------------------------------------------------------
# Transition
# ---------------------------------------------------------------------------

def transition_values(
    values: np.ndarray,
    aging_factor: float,
    noise_var: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Age an array of trust values and add truncated Gaussian noise.

    Each output is ``aging_factor * x + v`` with ``v ~ Normal(0, noise_var)``,
    redrawn until it falls inside [0, 1] (rejection, not clipping, so no
    probability mass piles up on the boundaries).  ``noise_var == 0`` is the
    deterministic degenerate case.
    """
    values = np.asarray(values, dtype=float)
    decayed = aging_factor * values
    if noise_var == 0.0:
        return decayed.copy()
    sigma = math.sqrt(noise_var)
    out = decayed + rng.normal(0.0, sigma, size=values.shape)
    invalid = (out < 0.0) | (out > 1.0)
    rounds = 0
    while invalid.any():
        out[invalid] = decayed[invalid] + rng.normal(0.0, sigma, size=int(invalid.sum()))
        invalid = (out < 0.0) | (out > 1.0)
        rounds += 1
        if rounds > _MAX_REDRAW_ROUNDS:
            raise RuntimeError(
                "truncated transition failed to land in [0, 1] after "
                f"{_MAX_REDRAW_ROUNDS} redraw rounds; the random source is broken"
            )
    return out


def transition_component(
    x: float, aging_factor: float, noise_var: float, rng: np.random.Generator
) -> float:
    """Single-node trust transition; see :func:`transition_values`."""
    check_unit_interval(x, "x")
    return float(transition_values(np.array([x]), aging_factor, noise_var, rng)[0])


def transition_state(
    state: TrustState, config: ModelConfig, rng: np.random.Generator
) -> TrustState:
    """Apply the aging transition independently to every node."""
    config.check_state(state)
    rng = check_rng(rng)
    new = np.empty(config.n_nodes)
    for j in range(config.n_nodes):
        new[j] = transition_values(
            state.values[j : j + 1], config.aging_factor, config.noise_diag[j], rng
        )[0]
    return TrustState(values=new, time_step=state.time_step + 1)


# ---------------------------------------------------------------------------
# Voting
# ---------------------------------------------------------------------------

def vote(
    y_n: Optional[float], y_j: Optional[float], threshold: float
) -> Optional[int]:
    """Binary agreement vote of node ``n`` on node ``j``.

    Returns 1 when both readings are present and strictly closer than
    ``threshold``, 0 when they are present and not, 0 when the candidate
    ``j`` did not report (silence earns no agreement), and None when the
    voter ``n`` did not report (the voter abstains).
    """
    check_positive(threshold, "threshold")
    if y_j is None:
        return 0
    if y_n is None:
        return None
    return 1 if abs(y_n - y_j) < threshold else 0


def vote_table(frame: ReadingFrame, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """All pairwise votes for one frame.

    Returns
    -------
    votes : (d, d) float ndarray
        ``votes[n, j]`` is the vote of ``n`` on ``j``; diagonal is 0.
    counted : (d, d) bool ndarray
        False where the voter abstained (or on the diagonal).
    """
    values, present = frame.values, frame.present
    d = frame.n_nodes
    with np.errstate(invalid="ignore"):
        agree = np.abs(values[:, None] - values[None, :]) < threshold
    both = present[:, None] & present[None, :]
    votes = np.where(both, agree, False).astype(float)
    # a voter abstains only when it is silent while the candidate reported;
    # a silent candidate receives an explicit 0 from everyone
    counted = present[:, None] | ~present[None, :]
    np.fill_diagonal(votes, 0.0)
    np.fill_diagonal(counted, False)
    return votes, counted


def _metric_from_table(
    trusts: np.ndarray, votes: np.ndarray, counted: np.ndarray, j: int
) -> float:
    """Trust-weighted agreement share for candidate ``j``.

    Falls back to the unweighted vote mean when the voters carry no trust
    mass, and to 0 when every voter abstained.
    """
    mask = counted[:, j]
    if not mask.any():
        return 0.0
    u = votes[mask, j]
    w = trusts[mask]
    total = w.sum()
    if total <= 0.0:
        return float(u.mean())
    return float((w * u).sum() / total)


def voting_metric(
    trusts_others: Mapping[int, float] | np.ndarray,
    frame: ReadingFrame,
    j: int,
    threshold: float,
) -> float:
    """Voting metric of node ``j``: trust-weighted share of agreeing peers.

    Parameters
    ----------
    trusts_others : mapping or array
        Trust of the voters.  Either a mapping from node index to trust
        covering exactly the nodes other than ``j``, or a full length-d
        array whose ``j``-th entry is ignored.
    frame : ReadingFrame
        Current readings.
    j : int
        Candidate node index.
    threshold : float
        Agreement threshold on reading differences.
    """
    d = frame.n_nodes
    if isinstance(trusts_others, Mapping):
        expected = set(range(d)) - {j}
        if set(trusts_others) != expected:
            raise ValueError(
                f"trusts_others must cover exactly the nodes {sorted(expected)}"
            )
        trusts = np.zeros(d)
        for n, t in trusts_others.items():
            trusts[n] = t
    else:
        trusts = np.asarray(trusts_others, dtype=float)
        if trusts.shape != (d,):
            raise ValueError(f"trusts_others must have length {d}")
    # the metric is a weight ratio, so any non-negative rescaling is legal
    check_positive(np.delete(trusts, j), "trusts_others", allow_zero=True)
    votes, counted = vote_table(frame, threshold)
    return _metric_from_table(trusts, votes, counted, j)


def unweighted_voting_metric(frame: ReadingFrame, j: int, threshold: float) -> float:
    """Plain vote mean over the non-abstaining peers of ``j``.

    Equal to :func:`voting_metric` with every voter's trust pinned to 1;
    used by the independent per-node baseline filter.
    """
    votes, counted = vote_table(frame, threshold)
    return _metric_from_table(np.ones(frame.n_nodes), votes, counted, j)


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------

def component_log_likelihood(
    x_j: np.ndarray | float, metric: float, likelihood_scale: float
) -> np.ndarray | float:
    """Log-likelihood of trust value(s) for one node given its voting metric."""
    return -np.abs(np.asarray(x_j, dtype=float) - metric) / likelihood_scale


def component_likelihood(
    x_j: float,
    others: Mapping[int, float] | np.ndarray,
    frame: ReadingFrame,
    j: int,
    config: ModelConfig,
) -> float:
    """Observation likelihood of node ``j`` holding trust ``x_j``.

    ``exp(-|x_j - V_j| / scale)`` where ``V_j`` is the voting metric of
    ``j`` computed from the other nodes' trusts.  Always in (0, 1], equal
    to 1 exactly when ``x_j`` matches the metric.
    """
    config.check_frame(frame)
    check_unit_interval(x_j, "x_j")
    metric = voting_metric(others, frame, j, config.agreement_threshold)
    return math.exp(component_log_likelihood(x_j, metric, config.likelihood_scale))


def joint_likelihood(
    state: TrustState, frame: ReadingFrame, config: ModelConfig
) -> float:
    """Joint observation likelihood of a full trust state.

    The product over nodes of :func:`component_likelihood`, with each
    node's voting metric computed from the state's own other components.
    """
    config.check_state(state)
    config.check_frame(frame)
    votes, counted = vote_table(frame, config.agreement_threshold)
    # accumulated as a running product so the value matches the product of
    # the per-component likelihoods to within a couple of ulps
    result = 1.0
    for j in range(config.n_nodes):
        metric = _metric_from_table(state.values, votes, counted, j)
        result *= math.exp(
            component_log_likelihood(
                float(state.values[j]), metric, config.likelihood_scale
            )
        )
    return result
