"""Acceptance suite.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
inline).  The heavy Monte Carlo experiments are shared through
module-scoped fixtures; the whole suite completes in a couple of minutes
on a laptop.
"""

import math
import os
from pathlib import Path

import numpy as np
import pytest

from trustfilter.filters import resample, run_filter
from trustfilter.harness import alpha_sweep, monte_carlo, scaling_study
from trustfilter.ingest import SyncConfig, parse_dataset, synchronize
from trustfilter.model import (
    ModelConfig,
    ReadingFrame,
    TrustState,
    component_likelihood,
    joint_likelihood,
    unweighted_voting_metric,
    voting_metric,
)
from trustfilter.sim import FaultSpec, apply_fault, standard_scenario

SCENARIO_SEED = 7
BASE_SEED = 1000
RUNS = 100
JOBS = min(4, os.cpu_count() or 1)

EXCERPT = Path(__file__).resolve().parent.parent / "data" / "intel_lab_excerpt.txt.gz"
DATASET_ENV = "TRUSTFILTER_INTEL_DATA"

# node roles in the standard scenario
RAMP, NOISE, SLEEPER, HONEST = 0, 1, 2, 3


def report(number: int, description: str, ok: bool) -> bool:
    print(f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {description}")
    return ok


def window(trace: np.ndarray, node: int, first: int, last: int) -> float:
    """Mean of a run-averaged trace over 1-based inclusive steps."""
    return float(trace[first - 1 : last, node].mean())


@pytest.fixture(scope="module")
def scenario10():
    return standard_scenario(n_nodes=10, n_steps=100, seed=SCENARIO_SEED)


@pytest.fixture(scope="module")
def ipf10(scenario10):
    return monte_carlo(
        scenario10, ("ipf",), n_runs=RUNS, base_seed=BASE_SEED, jobs=JOBS
    )["ipf"]


@pytest.fixture(scope="module")
def bdmpf10(scenario10):
    return monte_carlo(
        scenario10, ("bdmpf",), n_runs=RUNS, base_seed=BASE_SEED, jobs=JOBS
    )["bdmpf"]


@pytest.fixture(scope="module")
def by_dimension():
    out = {}
    for d in (5, 20):
        scenario = standard_scenario(n_nodes=d, n_steps=100, seed=SCENARIO_SEED)
        out[d] = (
            scenario,
            monte_carlo(
                scenario,
                ("ipf",),
                n_runs=RUNS,
                base_seed=BASE_SEED,
                config=ModelConfig(n_nodes=d),
                jobs=JOBS,
            )["ipf"],
        )
    return out


# ---------------------------------------------------------------------------
# 1. trust trajectory reproduction
# ---------------------------------------------------------------------------

def test_criterion_1_trust_trajectories(ipf10):
    mean = ipf10.mean_trajectory
    checks = [
        ("ramp node >= 0.9 on steps 15-30", window(mean, RAMP, 15, 30) >= 0.9),
        ("ramp node <= 0.1 on steps 45-65", window(mean, RAMP, 45, 65) <= 0.1),
        ("ramp node >= 0.85 on steps 85-100", window(mean, RAMP, 85, 100) >= 0.85),
        ("noise node <= 0.1 on steps 20-100", window(mean, NOISE, 20, 100) <= 0.1),
        ("sleeper >= 0.9 on steps 20-45", window(mean, SLEEPER, 20, 45) >= 0.9),
        ("sleeper <= 0.1 on steps 65-100", window(mean, SLEEPER, 65, 100) <= 0.1),
        ("honest node >= 0.9 on steps 15-100", window(mean, HONEST, 15, 100) >= 0.9),
    ]
    ok = all(flag for _, flag in checks)
    report(1, "mean trust trajectories hit every figure band", ok)
    assert ok, [name for name, flag in checks if not flag]


# ---------------------------------------------------------------------------
# 2. iterative filter vs independent baseline
# ---------------------------------------------------------------------------

def test_criterion_2_baseline_separation(ipf10, bdmpf10):
    ipf_err = float(ipf10.rmse[50:70, HONEST].mean())
    bdm_err = float(bdmpf10.rmse[50:70, HONEST].mean())
    plateau = window(bdmpf10.mean_trajectory, RAMP, 15, 30)
    ok = ipf_err < bdm_err and 0.7 <= plateau <= 0.9
    report(
        2,
        f"honest-node RMSE on steps 51-70: iterative {ipf_err:.3f} < baseline "
        f"{bdm_err:.3f}; baseline ramp-node plateau {plateau:.3f} in [0.7, 0.9]",
        ok,
    )
    assert ok


# ---------------------------------------------------------------------------
# 3. RMSE magnitude and dimension scaling
# ---------------------------------------------------------------------------

def _bootstrap_se(result, truth, node, n_boot=400, seed=0):
    sq = (result.trajectories - truth[None]) ** 2
    m = sq.shape[0]
    rng = np.random.default_rng(seed)
    stats = [
        float(np.sqrt(sq[rng.integers(0, m, m), :, node].mean(axis=0)).mean())
        for _ in range(n_boot)
    ]
    return float(np.std(stats))


def test_criterion_3_rmse_magnitude(by_dimension):
    scenario5, d5 = by_dimension[5]
    scenario20, d20 = by_dimension[20]
    share = float((d5.rmse <= 0.15).mean())
    cells_ok = share >= 0.80
    # the larger network must do at least as well per tracked node; the
    # comparison of two Monte Carlo estimates carries sampling error, so a
    # tie is accepted within three bootstrap standard errors
    mono_ok = True
    details = []
    for node in (RAMP, NOISE, SLEEPER, HONEST):
        t5 = float(d5.rmse[:, node].mean())
        t20 = float(d20.rmse[:, node].mean())
        se = math.hypot(
            _bootstrap_se(d5, scenario5.truth_matrix(), node),
            _bootstrap_se(d20, scenario20.truth_matrix(), node),
        )
        node_ok = t20 <= t5 + 3 * se
        mono_ok &= node_ok
        details.append(f"node{node}: {t5:.4f}->{t20:.4f}")
    ok = cells_ok and mono_ok
    report(
        3,
        f"{share:.0%} of d=5 cells have RMSE <= 0.15; time-averaged RMSE does "
        f"not grow from d=5 to d=20 per node ({'; '.join(details)})",
        ok,
    )
    assert ok


# ---------------------------------------------------------------------------
# 4. aging-factor sweep
# ---------------------------------------------------------------------------

def test_criterion_4_aging_sweep(scenario10):
    arms = alpha_sweep(
        [0.75, 0.85], scenario10, n_runs=RUNS, base_seed=BASE_SEED, jobs=JOBS
    )
    at75 = float(arms[0.75].rmse[:, SLEEPER].mean())
    at85 = float(arms[0.85].rmse[:, SLEEPER].mean())
    ok = at85 <= at75
    report(
        4,
        f"sleeper-node time-averaged RMSE at aging 0.85 ({at85:.4f}) <= "
        f"at 0.75 ({at75:.4f})",
        ok,
    )
    assert ok


# ---------------------------------------------------------------------------
# 5. sweep convergence
# ---------------------------------------------------------------------------

def test_criterion_5_sweep_convergence(ipf10):
    fraction = float((ipf10.iterations <= 10).mean())
    ok = fraction >= 0.95
    report(
        5,
        f"inner loop finished within 10 sweeps at {fraction:.1%} of steps "
        f"(tolerance 1e-5, mean {ipf10.iterations.mean():.2f} sweeps)",
        ok,
    )
    assert ok
    assert ipf10.converged.all()


# ---------------------------------------------------------------------------
# 6. linear cost scaling
# ---------------------------------------------------------------------------

def test_criterion_6_wall_time_scaling():
    rows = scaling_study([5, 10, 20], n_steps=100, n_runs=5, base_seed=SCENARIO_SEED)
    r10 = rows[1]["ratio"]
    r20 = rows[2]["ratio"]
    ok = 1.3 <= r10 <= 2.5 and 2.5 <= r20 <= 5.0
    report(
        6,
        f"wall-time ratios vs d=5: d=10 -> {r10:.2f} (band [1.3, 2.5]), "
        f"d=20 -> {r20:.2f} (band [2.5, 5.0])",
        ok,
    )
    assert ok


# ---------------------------------------------------------------------------
# 7. real-data fault detection
# ---------------------------------------------------------------------------

FAULT_WINDOWS = (
    ("sleeper", 0, 500, 700, {}),
    ("stuck_at", 1, 300, 400, {"value": 100.0}),
    ("variance_degradation", 2, 200, 250, {"std": 20.0}),
    ("offset", 3, 100, 150, {"value": 100.0, "probability": 0.5}),
)


def test_criterion_7_real_data_faults():
    source = os.environ.get(DATASET_ENV) or EXCERPT
    records, _ = parse_dataset(source)
    frames = synchronize(records, SyncConfig())
    for i, (kind, node, start, end, params) in enumerate(FAULT_WINDOWS):
        spec = FaultSpec(kind=kind, node=node, start=start, end=end, **params)
        frames = apply_fault(frames, spec, rng=np.random.default_rng([SCENARIO_SEED, i]))
    config = ModelConfig(n_nodes=5, agreement_threshold=2.0)
    outputs = run_filter("ipf", frames, config, rng=BASE_SEED)
    trace = np.stack([o.estimate.values for o in outputs])
    ok = True
    details = []
    for kind, node, start, end, _ in FAULT_WINDOWS:
        dropped = float(trace[start : start + 21, node].min())
        recovered = float(trace[end + 1 : end + 31, node].max())
        ok &= dropped < 0.3 and recovered > 0.7
        details.append(f"{kind}: drop {dropped:.2f}, recovery {recovered:.2f}")
    report(
        7,
        "every injected fault drops trust below 0.3 within 20 epochs and "
        f"recovers above 0.7 within 30 ({'; '.join(details)})",
        ok,
    )
    assert ok


# ---------------------------------------------------------------------------
# 8. property suite
# ---------------------------------------------------------------------------

def test_criterion_8a_factorization_identity():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10_000):
        d = int(rng.integers(2, 7))
        config = ModelConfig(n_nodes=d)
        state = TrustState(values=rng.random(d))
        readings = [
            None if rng.random() < 0.15 else float(rng.normal(20, 0.5))
            for _ in range(d)
        ]
        frame = ReadingFrame(values=readings, time_step=1)
        joint = joint_likelihood(state, frame, config)
        product = 1.0
        for j in range(d):
            others = {n: float(state.values[n]) for n in range(d) if n != j}
            product *= component_likelihood(
                float(state.values[j]), others, frame, j, config
            )
        ulps = abs(joint - product) / math.ulp(max(joint, product))
        worst = max(worst, ulps)
    ok = worst <= 8.0
    report(8, f"8a factorization identity within 8 ulps on 1e4 states (worst {worst:.1f})", ok)
    assert ok


def test_criterion_8b_resampling_unbiased():
    rng = np.random.default_rng(1)
    weights = np.array([0.6, 0.25, 0.1, 0.05])
    particles = np.array([0.0, 0.25, 0.5, 1.0])
    n, reps = 4, 10_000
    counts = np.zeros(4)
    for _ in range(reps):
        out = resample(particles, weights, rng)
        for i, value in enumerate(particles):
            counts[i] += np.sum(out == value)
    ok = True
    for i, w in enumerate(weights):
        sigma = math.sqrt(n * w * (1 - w) / reps)
        ok &= abs(counts[i] / reps - n * w) < 3 * sigma
    report(8, "8b multinomial resampling unbiased over 1e4 repetitions (3 sigma)", ok)
    assert ok


def test_criterion_8c_boundedness_over_random_steps():
    steps = 0
    ok = True
    for kind in ("ipf", "bdmpf", "bootstrap"):
        for seed in range(4):
            scenario = standard_scenario(n_nodes=4, n_steps=850, seed=seed)
            for out in run_filter(kind, scenario.frames, ModelConfig(n_nodes=4), rng=seed):
                ok &= bool(
                    ((out.estimate.values >= 0) & (out.estimate.values <= 1)).all()
                    and ((out.posterior.particles >= 0) & (out.posterior.particles <= 1)).all()
                )
                steps += 1
    assert steps >= 10_000
    report(8, f"8c particles and estimates stayed in [0, 1] over {steps} steps", ok)
    assert ok


def test_criterion_8d_voting_metric_scale_invariance():
    rng = np.random.default_rng(2)
    ok = True
    for _ in range(1000):
        d = int(rng.integers(2, 8))
        frame = ReadingFrame(values=rng.normal(20, 1, d), time_step=1)
        trusts = rng.uniform(0.001, 1.0, d)
        c = float(rng.uniform(0.01, 50.0))
        j = int(rng.integers(0, d))
        v1 = voting_metric(trusts, frame, j, 0.6)
        v2 = voting_metric(trusts * c, frame, j, 0.6)
        ok &= math.isclose(v1, v2, rel_tol=1e-9, abs_tol=1e-12)
    report(8, "8d voting metric invariant to positive trust rescaling", ok)
    assert ok


def test_criterion_8e_unit_trust_reduces_to_plain_mean():
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(1000):
        d = int(rng.integers(2, 8))
        readings = [
            None if rng.random() < 0.2 else float(rng.normal(20, 1)) for _ in range(d)
        ]
        frame = ReadingFrame(values=readings, time_step=1)
        j = int(rng.integers(0, d))
        ok &= unweighted_voting_metric(frame, j, 0.6) == voting_metric(
            np.ones(d), frame, j, 0.6
        )
    report(8, "8e trust-weighted metric at unit trusts equals the plain vote mean", ok)
    assert ok


def test_criterion_8f_seeded_experiment_reproducible():
    def experiment():
        scenario = standard_scenario(n_nodes=6, n_steps=50, seed=SCENARIO_SEED)
        return monte_carlo(
            scenario, ("ipf", "bdmpf"), n_runs=5, base_seed=BASE_SEED, jobs=1
        )

    first = experiment()
    second = experiment()
    ok = True
    for kind in ("ipf", "bdmpf"):
        ok &= np.array_equal(first[kind].trajectories, second[kind].trajectories)
        ok &= np.array_equal(first[kind].iterations, second[kind].iterations)
        ok &= np.array_equal(first[kind].rmse, second[kind].rmse)
    report(8, "8f full 5-run experiment reproduces bit-exactly from its seed", ok)
    assert ok
