"""Monte Carlo experiment harness: repeated runs, error metrics, timing.

Independent runs share one scenario realization by default (so the spread
of the trust traces isolates filter randomness); per-run scenario redraws
are available behind a flag.  Run ``m`` (1-based) always uses the seed
``base_seed + m``, so results are reproducible regardless of how many
workers execute the runs or in which order they finish.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .filters import FILTER_KINDS, FilterError, run_filter, trajectory_matrix
from .model import ModelConfig
from .sim import Scenario, standard_scenario


@dataclass(frozen=True)
class RunFailure:
    run: int
    seed: int
    time_step: Optional[int]
    message: str


@dataclass
class FilterResult:
    """Monte Carlo results for one filter kind."""

    kind: str
    trajectories: np.ndarray  # (n_runs, n_steps, n_nodes)
    iterations: np.ndarray  # (n_runs, n_steps)
    converged: np.ndarray  # (n_runs, n_steps) bool
    run_seconds: np.ndarray  # (n_runs,) wall time of the filter loop only
    rmse: Optional[np.ndarray] = None  # (n_steps, n_nodes)
    failures: list[RunFailure] = field(default_factory=list)

    @property
    def mean_trajectory(self) -> np.ndarray:
        return self.trajectories.mean(axis=0)

    @property
    def all_converged(self) -> bool:
        return bool(self.converged.all())


def rmse_trace(trajectories: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Root mean square error per (step, node) across independent runs.

    ``sqrt(mean_m (estimate[m, k, j] - truth[k, j])^2)``; invariant to the
    order of the runs.
    """
    trajectories = np.asarray(trajectories, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if trajectories.ndim != 3:
        raise ValueError("trajectories must have shape (n_runs, n_steps, n_nodes)")
    if truth.shape != trajectories.shape[1:]:
        raise ValueError(
            f"truth shape {truth.shape} does not match trajectories {trajectories.shape[1:]}"
        )
    return np.sqrt(((trajectories - truth[None, :, :]) ** 2).mean(axis=0))


def run_seed(base_seed: int, run_index: int) -> int:
    """Seed for 1-based run ``run_index``: ``base_seed + run_index``."""
    return int(base_seed) + int(run_index)


def _execute_run(args) -> tuple[int, Optional[dict], Optional[RunFailure]]:
    (kind, scenario, config, seed, run_index) = args
    try:
        outputs = run_filter(
            kind, scenario.frames, config, rng=np.random.default_rng(seed)
        )
    except FilterError as exc:
        return run_index, None, RunFailure(
            run=run_index, seed=seed, time_step=exc.time_step, message=str(exc)
        )
    return (
        run_index,
        {
            "trajectory": trajectory_matrix(outputs),
            "iterations": np.array([o.iterations for o in outputs], dtype=int),
            "converged": np.array([o.converged for o in outputs], dtype=bool),
            "seconds": float(sum(o.wall_time for o in outputs)),
        },
        None,
    )


def monte_carlo(
    scenario: Scenario,
    kinds: Sequence[str] = ("ipf",),
    n_runs: int = 100,
    base_seed: int = 0,
    config: Optional[ModelConfig] = None,
    jobs: int = 1,
    scenario_redraw: bool = False,
) -> dict[str, FilterResult]:
    """Run ``n_runs`` independent filter executions per kind.

    Parameters
    ----------
    scenario : Scenario
        The (shared) scenario realization.  With ``scenario_redraw`` the
        readings are regenerated per run from the standard-scenario
        recipe, seeded per run.
    kinds : sequence of {"bootstrap", "ipf", "bdmpf"}
    n_runs : int
    base_seed : int
        Run ``m`` uses seed ``base_seed + m``.
    config : ModelConfig, optional
        Defaults to the library defaults at the scenario's node count.
    jobs : int
        Worker processes; 1 runs inline.  Results are identical for any
        job count.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    bad = [k for k in kinds if k not in FILTER_KINDS]
    if bad:
        raise ValueError(f"unknown filter kinds: {bad}")
    if config is None:
        config = ModelConfig(n_nodes=scenario.n_nodes)
    truth = scenario.truth_matrix()
    results: dict[str, FilterResult] = {}
    for kind in kinds:
        tasks = []
        for m in range(1, n_runs + 1):
            seed = run_seed(base_seed, m)
            scn = scenario
            if scenario_redraw:
                scn = standard_scenario(
                    n_nodes=scenario.n_nodes, n_steps=scenario.n_steps, seed=seed
                )
            tasks.append((kind, scn, config, seed, m))
        rows: dict[int, dict] = {}
        failures: list[RunFailure] = []
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for run_index, payload, failure in pool.map(_execute_run, tasks):
                    if failure is not None:
                        failures.append(failure)
                    else:
                        rows[run_index] = payload
        else:
            for task in tasks:
                run_index, payload, failure = _execute_run(task)
                if failure is not None:
                    failures.append(failure)
                else:
                    rows[run_index] = payload
        ok = sorted(rows)
        trajectories = np.stack([rows[m]["trajectory"] for m in ok]) if ok else (
            np.zeros((0, scenario.n_steps, scenario.n_nodes))
        )
        iterations = np.stack([rows[m]["iterations"] for m in ok]) if ok else (
            np.zeros((0, scenario.n_steps), dtype=int)
        )
        converged = np.stack([rows[m]["converged"] for m in ok]) if ok else (
            np.zeros((0, scenario.n_steps), dtype=bool)
        )
        seconds = np.array([rows[m]["seconds"] for m in ok])
        # redrawn scenarios share the same deterministic fault windows, so
        # the truth labels are common to every run either way
        rmse = rmse_trace(trajectories, truth) if ok else None
        results[kind] = FilterResult(
            kind=kind,
            trajectories=trajectories,
            iterations=iterations,
            converged=converged,
            run_seconds=seconds,
            rmse=rmse,
            failures=failures,
        )
    return results


def scaling_study(
    d_values: Sequence[int],
    n_steps: int = 100,
    n_runs: int = 3,
    base_seed: int = 0,
    kind: str = "ipf",
) -> list[dict]:
    """Mean wall time per run for each node count, plus scaled ratios.

    Runs execute on a single worker so contention does not skew the
    measurement; only the filter loop is timed.  Ratios are normalized to
    the first (smallest) node count.
    """
    d_values = list(d_values)
    if not d_values:
        raise ValueError("d_values must be non-empty")
    if d_values != sorted(d_values):
        raise ValueError("d_values must be ascending")
    rows: list[dict] = []
    for d in d_values:
        scenario = standard_scenario(n_nodes=d, n_steps=n_steps, seed=base_seed)
        config = ModelConfig(n_nodes=d)
        # one discarded warm-up run stabilizes allocator and cache state
        monte_carlo(
            scenario, kinds=(kind,), n_runs=1, base_seed=base_seed,
            config=config, jobs=1,
        )
        result = monte_carlo(
            scenario, kinds=(kind,), n_runs=n_runs, base_seed=base_seed,
            config=config, jobs=1,
        )[kind]
        # the median is robust against a run hit by scheduler noise
        rows.append({"d": d, "mean_seconds": float(np.median(result.run_seconds))})
    baseline = rows[0]["mean_seconds"]
    for row in rows:
        row["ratio"] = row["mean_seconds"] / baseline
    return rows


def alpha_sweep(
    alphas: Sequence[float],
    scenario: Scenario,
    n_runs: int = 100,
    base_seed: int = 0,
    jobs: int = 1,
    kind: str = "ipf",
) -> dict[float, FilterResult]:
    """One Monte Carlo experiment per aging factor over a shared scenario."""
    if not alphas:
        raise ValueError("alphas must be non-empty")
    out: dict[float, FilterResult] = {}
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"aging factor must lie in (0, 1), got {alpha}")
        config = ModelConfig(n_nodes=scenario.n_nodes, aging_factor=alpha)
        out[alpha] = monte_carlo(
            scenario, kinds=(kind,), n_runs=n_runs, base_seed=base_seed,
            config=config, jobs=jobs,
        )[kind]
    return out
