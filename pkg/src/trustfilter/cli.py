"""Command-line interface.

Subcommands:

- ``simulate``: generate a scenario and write it to disk
- ``run``: execute filters over a scenario, export trajectories/metrics
- ``intel``: ingest the indoor-deployment dataset, inject the canonical
  faults and estimate trust online
- ``version``: print the package version

Option precedence is flags > ``--config`` JSON file > built-in defaults.
Every run derives all randomness from a single seed; when no seed is
given one is drawn and logged so the run stays reproducible after the
fact.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .filters import FILTER_KINDS
from .harness import alpha_sweep, monte_carlo, scaling_study
from .ingest import (
    ATTRIBUTES,
    DEFAULT_DAY,
    DEFAULT_NODE_IDS,
    INTEL_AGREEMENT_THRESHOLD,
    SyncConfig,
    parse_dataset,
    synchronize,
)
from .io import (
    read_scenario_json,
    write_frames_csv,
    write_iterations_csv,
    write_rmse_csv,
    write_scenario_json,
    write_timing_json,
    write_trajectories_csv,
    write_truth_csv,
)
from .model import (
    DEFAULT_AGING_FACTOR,
    DEFAULT_AGREEMENT_THRESHOLD,
    DEFAULT_CONVERGENCE_TOL,
    DEFAULT_LIKELIHOOD_SCALE,
    DEFAULT_MAX_SWEEPS,
    DEFAULT_N_PARTICLES,
    DEFAULT_PROCESS_NOISE,
    ModelConfig,
)
from .sim import (
    DEFAULT_BASELINE_STD,
    FaultSpec,
    Scenario,
    apply_fault,
    binary_truth,
    generate_baseline,
    standard_scenario,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NONCONVERGED = 3

OUTPUT_DIR_ENV = "TRUSTFILTER_OUT"
INTEL_DATA_ENV = "TRUSTFILTER_INTEL_DATA"
INTEL_DOWNLOAD_HINT = (
    "dataset file not found; pass --data PATH (the public Intel Berkeley lab "
    "sensor log, plain or gzipped) or set $" + INTEL_DATA_ENV
)

#: Fault plan injected by the ``intel`` subcommand: (kind, node slot in
#: --nodes order, grid window, parameters).
INTEL_FAULT_PLAN = (
    ("sleeper", 0, 500, 700, {}),
    ("stuck_at", 1, 300, 400, {"value": 100.0}),
    ("variance_degradation", 2, 200, 250, {"std": 20.0}),
    ("offset", 3, 100, 150, {"value": 100.0, "probability": 0.5}),
)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise SystemExit(f"config file {path} must hold a JSON object")
    return doc


def _resolve(args: argparse.Namespace, file_cfg: dict, name: str, default):
    """flags > config file > default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in file_cfg:
        return file_cfg[name]
    return default


def _pick_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    seed = int(np.random.SeedSequence().entropy % (2**31))
    print(f"no --seed given; using seed {seed}", file=sys.stderr)
    return seed


def _out_dir(args: argparse.Namespace, file_cfg: dict) -> Path:
    out = _resolve(args, file_cfg, "out", None) or os.environ.get(OUTPUT_DIR_ENV, ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _model_config(n_nodes: int, args: argparse.Namespace, file_cfg: dict) -> ModelConfig:
    return ModelConfig(
        n_nodes=n_nodes,
        n_particles=int(_resolve(args, file_cfg, "particles", DEFAULT_N_PARTICLES)),
        aging_factor=float(_resolve(args, file_cfg, "aging", DEFAULT_AGING_FACTOR)),
        process_noise=float(_resolve(args, file_cfg, "noise", DEFAULT_PROCESS_NOISE)),
        likelihood_scale=float(
            _resolve(args, file_cfg, "likelihood_scale", DEFAULT_LIKELIHOOD_SCALE)
        ),
        agreement_threshold=float(
            _resolve(args, file_cfg, "r", DEFAULT_AGREEMENT_THRESHOLD)
        ),
        convergence_tol=float(
            _resolve(args, file_cfg, "tol", DEFAULT_CONVERGENCE_TOL)
        ),
        max_sweeps=int(_resolve(args, file_cfg, "max_sweeps", DEFAULT_MAX_SWEEPS)),
    )


def _parse_fault(text: str) -> FaultSpec:
    """Parse ``kind=stuck_at,node=1,start=30,end=40,value=100``."""
    fields: dict[str, str] = {}
    for part in text.split(","):
        if "=" not in part:
            raise SystemExit(f"bad --fault entry {text!r}: expected key=value pairs")
        key, _, val = part.partition("=")
        fields[key.strip()] = val.strip()
    try:
        return FaultSpec(
            kind=fields.pop("kind"),
            node=int(fields.pop("node")),
            start=int(fields.pop("start")),
            end=int(fields.pop("end")),
            value=float(fields.pop("value")) if "value" in fields else None,
            std=float(fields.pop("std")) if "std" in fields else None,
            probability=float(fields.pop("probability")) if "probability" in fields else None,
            peak=float(fields.pop("peak")) if "peak" in fields else None,
        )
    except (KeyError, ValueError) as exc:
        raise SystemExit(f"bad --fault entry {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    seed = _pick_seed(_resolve(args, file_cfg, "seed", None))
    d = int(_resolve(args, file_cfg, "d", 10))
    k = int(_resolve(args, file_cfg, "k", 100))
    std = float(_resolve(args, file_cfg, "std", DEFAULT_BASELINE_STD))
    out = _out_dir(args, file_cfg)
    if args.standard:
        scenario = standard_scenario(n_nodes=d, n_steps=k, seed=seed, baseline_std=std)
    else:
        frames = generate_baseline(d, k, std=std, rng=np.random.default_rng([seed, 0]))
        faults = [_parse_fault(t) for t in (args.fault or [])]
        faulty: dict[int, list[tuple[int, int]]] = {}
        for i, spec in enumerate(faults):
            frames = apply_fault(frames, spec, rng=np.random.default_rng([seed, 1 + i]))
            faulty.setdefault(spec.node, []).append((spec.start, spec.end))
        truth = binary_truth(d, k, faulty)
        specs = ["honest"] * d
        for spec in faults:
            specs[spec.node] = spec.kind
        scenario = Scenario(
            frames=tuple(frames), truth=tuple(truth), node_specs=tuple(specs), seed=seed
        )
    write_scenario_json(scenario, out / "scenario.json")
    write_frames_csv(scenario.frames, out / "frames.csv")
    write_truth_csv(scenario.truth, out / "truth.csv")
    print(f"wrote scenario.json, frames.csv, truth.csv to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _print_summary(kind: str, result) -> None:
    final = result.mean_trajectory[-1]
    mean_rmse = float(result.rmse.mean()) if result.rmse is not None else float("nan")
    print(f"\n[{kind}] mean RMSE {mean_rmse:.4f}")
    if kind == "ipf":
        print(f"[{kind}] mean sweeps per step {result.iterations.mean():.2f}")
    print(f"[{kind}] final mean trust per node:")
    for j, value in enumerate(final):
        print(f"  node_{j + 1}: {value:.3f}")


def cmd_run(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    seed = _pick_seed(_resolve(args, file_cfg, "seed", None))
    out = _out_dir(args, file_cfg)
    kinds = [k.strip() for k in _resolve(args, file_cfg, "filters", "ipf").split(",")]
    for kind in kinds:
        if kind not in FILTER_KINDS:
            raise SystemExit(f"unknown filter {kind!r}; choose from {FILTER_KINDS}")
    n_runs = int(_resolve(args, file_cfg, "runs", 100))
    jobs = int(_resolve(args, file_cfg, "jobs", 1))

    if args.scaling:
        d_values = [int(x) for x in args.scaling.split(",")]
        rows = scaling_study(d_values, n_runs=n_runs, base_seed=seed)
        write_timing_json(rows, out / "timing.json")
        print(f"{'d':>4} {'mean_seconds':>14} {'ratio':>7}")
        for row in rows:
            print(f"{row['d']:>4} {row['mean_seconds']:>14.4f} {row['ratio']:>7.2f}")
        return EXIT_OK

    if args.scenario:
        scenario = read_scenario_json(args.scenario)
    else:
        d = int(_resolve(args, file_cfg, "d", 10))
        k = int(_resolve(args, file_cfg, "k", 100))
        scenario = standard_scenario(n_nodes=d, n_steps=k, seed=seed)
    config = _model_config(scenario.n_nodes, args, file_cfg)

    if args.alphas:
        alphas = [float(x) for x in args.alphas.split(",")]
        sweep = alpha_sweep(alphas, scenario, n_runs=n_runs, base_seed=seed, jobs=jobs)
        status = EXIT_OK
        for alpha, result in sweep.items():
            tag = f"alpha_{alpha}".replace(".", "_")
            write_rmse_csv(result.rmse, out / f"rmse_{tag}.csv")
            print(f"alpha={alpha}: mean RMSE {float(result.rmse.mean()):.4f}")
            if not result.all_converged:
                status = EXIT_NONCONVERGED
        return status

    results = monte_carlo(
        scenario,
        kinds=kinds,
        n_runs=n_runs,
        base_seed=seed,
        config=config,
        jobs=jobs,
        scenario_redraw=args.redraw_scenarios,
    )
    status = EXIT_OK
    truth = scenario.truth_matrix()
    for kind, result in results.items():
        suffix = "" if len(kinds) == 1 else f"_{kind}"
        write_trajectories_csv(result.trajectories, truth, out / f"trajectories{suffix}.csv")
        write_rmse_csv(result.rmse, out / f"rmse{suffix}.csv")
        if kind == "ipf":
            write_iterations_csv(result.iterations, out / f"iterations{suffix}.csv")
        _print_summary(kind, result)
        if result.failures:
            for failure in result.failures:
                print(
                    f"[{kind}] run {failure.run} (seed {failure.seed}) failed: "
                    f"{failure.message}",
                    file=sys.stderr,
                )
            status = EXIT_FAILURE
        elif not result.all_converged and status == EXIT_OK:
            print(f"[{kind}] some steps hit the sweep cap", file=sys.stderr)
            status = EXIT_NONCONVERGED
    return status


# ---------------------------------------------------------------------------
# intel
# ---------------------------------------------------------------------------

def cmd_intel(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    seed = _pick_seed(_resolve(args, file_cfg, "seed", None))
    out = _out_dir(args, file_cfg)
    data = _resolve(args, file_cfg, "data", None) or os.environ.get(INTEL_DATA_ENV)
    if not data or not Path(data).exists():
        print(INTEL_DOWNLOAD_HINT, file=sys.stderr)
        return EXIT_FAILURE
    node_ids = tuple(
        int(x) for x in _resolve(args, file_cfg, "nodes", ",".join(map(str, DEFAULT_NODE_IDS))).split(",")
    )
    sync = SyncConfig(
        node_ids=node_ids,
        attribute=_resolve(args, file_cfg, "attribute", "temperature"),
        grid_start=int(_resolve(args, file_cfg, "grid_start", 0)),
        grid_end=int(_resolve(args, file_cfg, "grid_end", 800)),
        grid_stride=int(_resolve(args, file_cfg, "grid_stride", 1)),
        day=_resolve(args, file_cfg, "day", DEFAULT_DAY),
        max_gap=int(_resolve(args, file_cfg, "max_gap", 50)),
    )
    records, report = parse_dataset(data)
    print(report)
    frames = synchronize(records, sync)
    if args.r is None and "r" not in file_cfg:
        # dataset profile default; readings are on a physical scale
        setattr(args, "r", INTEL_AGREEMENT_THRESHOLD)
    config = _model_config(len(node_ids), args, file_cfg)

    if not args.no_faults:
        for i, (kind, slot, start, end, params) in enumerate(INTEL_FAULT_PLAN):
            if slot >= len(node_ids):
                continue
            end = min(end, len(frames) - 1)
            if start > end:
                continue
            spec = FaultSpec(kind=kind, node=slot, start=start, end=end, **params)
            frames = apply_fault(frames, spec, rng=np.random.default_rng([seed, 10 + i]))

    write_frames_csv(frames, out / "intel_frames.csv")
    results = monte_carlo(
        Scenario(
            frames=tuple(frames),
            truth=tuple(
                # labels are unknown on real data; written as all-ones
                _all_ones_truth(frames)
            ),
            node_specs=tuple(str(n) for n in node_ids),
            seed=seed,
        ),
        kinds=("ipf",),
        n_runs=int(_resolve(args, file_cfg, "runs", 1)),
        base_seed=seed,
        config=config,
        jobs=int(_resolve(args, file_cfg, "jobs", 1)),
    )
    result = results["ipf"]
    write_trajectories_csv(result.trajectories, None, out / "intel_trust.csv")
    write_iterations_csv(result.iterations, out / "intel_iterations.csv")
    _print_summary("ipf", result)
    if result.failures:
        return EXIT_FAILURE
    return EXIT_OK if result.all_converged else EXIT_NONCONVERGED


def _all_ones_truth(frames):
    from .model import TrustState

    return [
        TrustState(values=np.ones(f.n_nodes), time_step=f.time_step) for f in frames
    ]


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trustfilter",
        description="Particle-filter trust estimation for sensor networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file (flags win over it)")
        p.add_argument("--seed", type=int, help="master seed (default: drawn and logged)")
        p.add_argument("--out", help=f"output directory (default: $%s or .)" % OUTPUT_DIR_ENV)

    def add_model(p):
        p.add_argument("--particles", type=int, help=f"particles per filter (default {DEFAULT_N_PARTICLES})")
        p.add_argument("--aging", type=float, help=f"trust aging factor (default {DEFAULT_AGING_FACTOR})")
        p.add_argument("--noise", type=float, help=f"transition noise variance (default {DEFAULT_PROCESS_NOISE})")
        p.add_argument("--likelihood-scale", dest="likelihood_scale", type=float,
                       help=f"likelihood decay scale (default {DEFAULT_LIKELIHOOD_SCALE})")
        p.add_argument("--r", type=float,
                       help=f"reading agreement threshold (default {DEFAULT_AGREEMENT_THRESHOLD}; "
                            f"{INTEL_AGREEMENT_THRESHOLD} under 'intel')")
        p.add_argument("--tol", type=float, help=f"sweep convergence tolerance (default {DEFAULT_CONVERGENCE_TOL})")
        p.add_argument("--max-sweeps", dest="max_sweeps", type=int,
                       help=f"sweep cap per step (default {DEFAULT_MAX_SWEEPS})")

    sim = sub.add_parser("simulate", help="generate a scenario and write it to disk")
    add_common(sim)
    sim.add_argument("--d", type=int, help="number of nodes (default 10)")
    sim.add_argument("--k", type=int, help="number of steps (default 100)")
    sim.add_argument("--std", type=float, help=f"honest reading std (default {DEFAULT_BASELINE_STD})")
    sim.add_argument("--standard", action="store_true",
                     help="the canonical mixed-fault scenario (ramp + noise + sleeper); needs --d >= 4")
    sim.add_argument("--fault", action="append",
                     help="fault to inject, e.g. kind=stuck_at,node=1,start=30,end=40,value=100; repeatable")
    sim.set_defaults(func=cmd_simulate)

    run = sub.add_parser("run", help="run filters over a scenario and export results")
    add_common(run)
    add_model(run)
    run.add_argument("--scenario", help="scenario.json produced by 'simulate' (default: standard scenario)")
    run.add_argument("--d", type=int, help="nodes for the generated scenario (default 10)")
    run.add_argument("--k", type=int, help="steps for the generated scenario (default 100)")
    run.add_argument("--filters", help=f"comma list from {'/'.join(FILTER_KINDS)} (default ipf)")
    run.add_argument("--runs", type=int, help="independent Monte Carlo runs (default 100)")
    run.add_argument("--jobs", type=int, help="worker processes (default 1)")
    run.add_argument("--scaling", help="comma list of node counts for the timing study, e.g. 5,10,20")
    run.add_argument("--alphas", help="comma list of aging factors to sweep, e.g. 0.75,0.85,0.95")
    run.add_argument("--redraw-scenarios", action="store_true",
                     help="redraw the scenario readings per run instead of sharing one realization")
    run.set_defaults(func=cmd_run)

    intel = sub.add_parser("intel", help="trust estimation over the indoor sensor dataset")
    add_common(intel)
    add_model(intel)
    intel.add_argument("--data", help="dataset file, plain or .gz (or set $%s)" % INTEL_DATA_ENV)
    intel.add_argument("--nodes", help="comma list of mote ids (default %s)" % ",".join(map(str, DEFAULT_NODE_IDS)))
    intel.add_argument("--attribute", choices=ATTRIBUTES, help="reading attribute (default temperature)")
    intel.add_argument("--day", help=f"calendar date filter (default {DEFAULT_DAY})")
    intel.add_argument("--grid-start", dest="grid_start", type=int, help="first grid epoch (default 0)")
    intel.add_argument("--grid-end", dest="grid_end", type=int, help="end grid epoch, exclusive (default 800)")
    intel.add_argument("--grid-stride", dest="grid_stride", type=int, help="grid stride (default 1)")
    intel.add_argument("--max-gap", dest="max_gap", type=int,
                       help="widest raw-sample gap interpolated across (default 50)")
    intel.add_argument("--runs", type=int, help="independent runs (default 1)")
    intel.add_argument("--jobs", type=int, help="worker processes (default 1)")
    intel.add_argument("--no-faults", action="store_true", help="skip the canonical fault injection")
    intel.set_defaults(func=cmd_intel)

    ver = sub.add_parser("version", help="print the package version")
    ver.set_defaults(func=lambda args: (print(__version__), EXIT_OK)[1])

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
