"""Synthetic scenario generation and fault injection.

Scenarios pair a sequence of reading frames with binary ground-truth
trust labels (1 = behaving, 0 = faulty) so that estimators can be scored
against a known answer.  Faults are injected into otherwise honest
reading streams; the fault taxonomy covers the node silently going dark
(sleeper), reporting a constant (stuck-at), adding high-variance noise
(variance degradation), adding an intermittent bias (offset), and a
smooth excursion away from the true signal (ramp).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import ReadingFrame, TrustState
from .validation import check_rng

FAULT_KINDS = ("sleeper", "stuck_at", "variance_degradation", "offset", "ramp")

DEFAULT_BASELINE_MEAN = 20.0
DEFAULT_BASELINE_STD = 0.1


@dataclass(frozen=True)
class FaultSpec:
    """One fault on one node over a step interval.

    ``start`` and ``end`` are 0-based positions into the frame sequence,
    both inclusive.  The kind-specific parameters are:

    - ``stuck_at``: ``value`` (the constant reported)
    - ``variance_degradation``: ``std`` (added noise standard deviation)
    - ``offset``: ``value`` (the bias) and ``probability`` (per step)
    - ``ramp``: ``peak`` (reading rises linearly from its value at
      ``start`` to the peak at the interval midpoint, then back)
    - ``sleeper``: no parameters
    """

    kind: str
    node: int
    start: int
    end: int
    value: Optional[float] = None
    std: Optional[float] = None
    probability: Optional[float] = None
    peak: Optional[float] = None

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ValueError(
                f"unknown fault kind {self.kind!r}; expected one of {FAULT_KINDS}"
            )
        if self.node < 0:
            raise ValueError("node must be a non-negative index")
        if not 0 <= self.start <= self.end:
            raise ValueError("need 0 <= start <= end")
        required = {
            "sleeper": (),
            "stuck_at": ("value",),
            "variance_degradation": ("std",),
            "offset": ("value", "probability"),
            "ramp": ("peak",),
        }[self.kind]
        for name in required:
            if getattr(self, name) is None:
                raise ValueError(f"fault kind {self.kind!r} requires {name!r}")
        if self.std is not None and self.std <= 0:
            raise ValueError("std must be positive")
        if self.probability is not None and not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")


@dataclass(frozen=True)
class Scenario:
    """Reading frames plus binary ground-truth trust labels."""

    frames: tuple[ReadingFrame, ...]
    truth: tuple[TrustState, ...]
    node_specs: tuple[str, ...]
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "truth", tuple(self.truth))
        object.__setattr__(self, "node_specs", tuple(self.node_specs))
        if len(self.frames) != len(self.truth):
            raise ValueError("frames and truth must have equal length")
        for state in self.truth:
            if not np.isin(state.values, (0.0, 1.0)).all():
                raise ValueError("truth labels must be binary 0/1")

    @property
    def n_steps(self) -> int:
        return len(self.frames)

    @property
    def n_nodes(self) -> int:
        return self.frames[0].n_nodes if self.frames else len(self.node_specs)

    def readings_matrix(self) -> np.ndarray:
        """(n_steps, n_nodes) readings with NaN for absent entries."""
        return np.stack([f.values for f in self.frames])

    def truth_matrix(self) -> np.ndarray:
        return np.stack([t.values for t in self.truth])


def generate_baseline(
    n_nodes: int,
    n_steps: int,
    mean: float = DEFAULT_BASELINE_MEAN,
    std: float = DEFAULT_BASELINE_STD,
    rng=None,
) -> list[ReadingFrame]:
    """Honest readings: every node i.i.d. Normal(mean, std^2) at every step.

    Draws are consumed node by node, so extending ``n_nodes`` with the
    same seed leaves the readings of the existing nodes unchanged.
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be at least 2")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if std < 0:
        raise ValueError("std must be non-negative")
    rng = check_rng(rng)
    columns = [rng.normal(mean, std, n_steps) if std > 0 else np.full(n_steps, mean)
               for _ in range(n_nodes)]
    values = np.column_stack(columns)
    return [ReadingFrame(values=values[k], time_step=k + 1) for k in range(n_steps)]


def apply_fault(
    frames: Sequence[ReadingFrame], spec: FaultSpec, rng=None
) -> list[ReadingFrame]:
    """Inject one fault, returning new frames; the input is untouched.

    Only the specified node inside [start, end] changes; every other
    reading is carried over bit for bit.
    """
    frames = list(frames)
    n_steps = len(frames)
    if spec.end >= n_steps:
        raise ValueError(
            f"fault interval [{spec.start}, {spec.end}] exceeds the {n_steps} steps"
        )
    if frames and not 0 <= spec.node < frames[0].n_nodes:
        raise ValueError(f"node {spec.node} out of range")
    rng = check_rng(rng)
    out: list[ReadingFrame] = []
    if spec.kind == "ramp":
        base = frames[spec.start].reading(spec.node)
        if base is None:
            raise ValueError("ramp fault needs a present reading at its start step")
        mid = (spec.start + spec.end) / 2.0
    for k, frame in enumerate(frames):
        if not spec.start <= k <= spec.end:
            out.append(frame)
            continue
        values = frame.values.copy()
        present = frame.present.copy()
        if spec.kind == "sleeper":
            present[spec.node] = False
            values[spec.node] = np.nan
        elif spec.kind == "stuck_at":
            values[spec.node] = spec.value
            present[spec.node] = True
        elif spec.kind == "variance_degradation":
            values[spec.node] = values[spec.node] + rng.normal(0.0, spec.std)
        elif spec.kind == "offset":
            if rng.random() < spec.probability:
                values[spec.node] = values[spec.node] + spec.value
        elif spec.kind == "ramp":
            if k <= mid:
                frac = (k - spec.start) / (mid - spec.start) if mid > spec.start else 1.0
            else:
                frac = (spec.end - k) / (spec.end - mid) if spec.end > mid else 1.0
            values[spec.node] = base + (spec.peak - base) * frac
            present[spec.node] = True
        out.append(ReadingFrame(values=values, present=present, time_step=frame.time_step))
    return out


def binary_truth(n_nodes: int, n_steps: int, faulty: dict[int, list[tuple[int, int]]]
                  ) -> list[TrustState]:
    truth = np.ones((n_steps, n_nodes))
    for node, intervals in faulty.items():
        for start, end in intervals:
            truth[start : end + 1, node] = 0.0
    return [TrustState(values=truth[k], time_step=k + 1) for k in range(n_steps)]


def standard_scenario(
    n_nodes: int = 10,
    n_steps: int = 100,
    seed: Optional[int] = None,
    baseline_mean: float = DEFAULT_BASELINE_MEAN,
    baseline_std: float = DEFAULT_BASELINE_STD,
) -> Scenario:
    """The canonical mixed-fault benchmark scenario.

    Ten nodes by default, 100 steps, honest readings centred at 20:

    - node 0 ramps its reading from 20 up to 40 and back between steps
      30 and 70 (1-based), and is labelled faulty on steps 31-70;
    - node 1 reports uniform noise on [0, 100] throughout (always faulty);
    - node 2 behaves until step 50, then stops reporting (faulty from 51);
    - every remaining node is honest throughout.

    Scenario randomness is split into per-purpose child streams keyed on
    the seed, so growing ``n_nodes`` extends the node set without
    changing the readings of the nodes already present.
    """
    if n_nodes < 4:
        raise ValueError("the standard scenario needs at least 4 nodes")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    base_seed = 0 if seed is None else int(seed)
    honest = generate_baseline(
        n_nodes,
        n_steps,
        mean=baseline_mean,
        std=baseline_std,
        rng=np.random.default_rng([base_seed, 0]),
    )
    # 1-based step anchors; positions in the sequence are step-1
    frames = honest
    if n_steps > 29:
        ramp = FaultSpec(
            kind="ramp",
            node=0,
            start=29,
            end=min(69, n_steps - 1),
            peak=2 * baseline_mean,
        )
        frames = apply_fault(frames, ramp, rng=np.random.default_rng([base_seed, 1]))
    noisy = np.random.default_rng([base_seed, 2]).uniform(0.0, 100.0, n_steps)
    frames = [
        ReadingFrame(
            values=np.concatenate([f.values[:1], [noisy[k]], f.values[2:]]),
            present=f.present,
            time_step=f.time_step,
        )
        for k, f in enumerate(frames)
    ]
    sleeper_start = min(50, n_steps)
    if sleeper_start < n_steps:
        frames = apply_fault(
            frames,
            FaultSpec(kind="sleeper", node=2, start=sleeper_start, end=n_steps - 1),
            rng=np.random.default_rng([base_seed, 3]),
        )
    faulty_intervals: dict[int, list[tuple[int, int]]] = {
        0: [(30, min(69, n_steps - 1))] if n_steps > 30 else [],
        1: [(0, n_steps - 1)],
        2: [(sleeper_start, n_steps - 1)] if sleeper_start < n_steps else [],
    }
    truth = binary_truth(n_nodes, n_steps, faulty_intervals)
    specs = ["ramp 20->40->20 over steps 30-70", "uniform noise on [0, 100]",
             "sleeper from step 51"] + ["honest"] * (n_nodes - 3)
    return Scenario(frames=tuple(frames), truth=tuple(truth),
                    node_specs=tuple(specs), seed=base_seed)
