"""File formats: scenario JSON, frame/truth CSV, experiment exports.

All floats are written as shortest round-trip decimals (Python ``repr``),
so reading a file back reproduces the in-memory values bit for bit.
Absent readings are empty CSV cells and JSON ``null``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .model import ReadingFrame, TrustState
from .sim import Scenario

SCENARIO_SCHEMA = 1
TIMING_SCHEMA = 1

PathLike = Union[str, Path]


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# Frames / truth CSV
# ---------------------------------------------------------------------------

def write_frames_csv(frames: Sequence[ReadingFrame], path: PathLike) -> None:
    """Columns: step, node_1..node_d; absent readings are empty cells."""
    frames = list(frames)
    d = frames[0].n_nodes if frames else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"node_{j + 1}" for j in range(d)])
        for frame in frames:
            row = [str(frame.time_step)]
            for j in range(d):
                row.append(_fmt(frame.values[j]) if frame.present[j] else "")
            writer.writerow(row)


def read_frames_csv(path: PathLike) -> list[ReadingFrame]:
    frames = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "step":
            raise ValueError(f"{path}: not a frames CSV (missing 'step' header)")
        for row in reader:
            step = int(row[0])
            values = [float(cell) if cell != "" else None for cell in row[1:]]
            frames.append(ReadingFrame(values=values, time_step=step))
    return frames


def write_truth_csv(truth: Sequence[TrustState], path: PathLike) -> None:
    truth = list(truth)
    d = truth[0].n_nodes if truth else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"node_{j + 1}" for j in range(d)])
        for state in truth:
            writer.writerow(
                [str(state.time_step)] + [_fmt(v) for v in state.values]
            )


def read_truth_csv(path: PathLike) -> list[TrustState]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            out.append(
                TrustState(values=[float(c) for c in row[1:]], time_step=int(row[0]))
            )
    return out


# ---------------------------------------------------------------------------
# Scenario JSON
# ---------------------------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "schema": SCENARIO_SCHEMA,
        "seed": scenario.seed,
        "n_nodes": scenario.n_nodes,
        "n_steps": scenario.n_steps,
        "node_specs": list(scenario.node_specs),
        "frames": [
            {
                "step": f.time_step,
                "readings": [
                    float(v) if p else None
                    for v, p in zip(f.values, f.present)
                ],
            }
            for f in scenario.frames
        ],
        "truth": [
            {"step": t.time_step, "labels": [float(v) for v in t.values]}
            for t in scenario.truth
        ],
    }


def scenario_from_dict(doc: dict) -> Scenario:
    if doc.get("schema") != SCENARIO_SCHEMA:
        raise ValueError(f"unsupported scenario schema {doc.get('schema')!r}")
    frames = tuple(
        ReadingFrame(values=entry["readings"], time_step=entry["step"])
        for entry in doc["frames"]
    )
    truth = tuple(
        TrustState(values=entry["labels"], time_step=entry["step"])
        for entry in doc["truth"]
    )
    return Scenario(
        frames=frames,
        truth=truth,
        node_specs=tuple(doc["node_specs"]),
        seed=doc.get("seed"),
    )


def write_scenario_json(scenario: Scenario, path: PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=1)
        fh.write("\n")


def read_scenario_json(path: PathLike) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Experiment exports
# ---------------------------------------------------------------------------

def write_trajectories_csv(
    trajectories: np.ndarray,
    truth: Optional[np.ndarray],
    path: PathLike,
) -> None:
    """Rows: run, step, node, estimate, truth.

    ``trajectories`` has shape (n_runs, n_steps, n_nodes); ``truth`` is
    (n_steps, n_nodes) or None (truth cells left empty).  Steps and nodes
    are written 1-based.
    """
    trajectories = np.asarray(trajectories)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "step", "node", "estimate", "truth"])
        n_runs, n_steps, n_nodes = trajectories.shape
        for m in range(n_runs):
            for k in range(n_steps):
                for j in range(n_nodes):
                    label = "" if truth is None else _fmt(truth[k, j])
                    writer.writerow(
                        [m + 1, k + 1, j + 1, _fmt(trajectories[m, k, j]), label]
                    )


def read_trajectories_csv(path: PathLike) -> tuple[np.ndarray, Optional[np.ndarray]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = list(reader)
    if not rows:
        return np.zeros((0, 0, 0)), None
    n_runs = max(int(r[0]) for r in rows)
    n_steps = max(int(r[1]) for r in rows)
    n_nodes = max(int(r[2]) for r in rows)
    est = np.full((n_runs, n_steps, n_nodes), np.nan)
    truth = np.full((n_steps, n_nodes), np.nan)
    have_truth = False
    for r in rows:
        m, k, j = int(r[0]) - 1, int(r[1]) - 1, int(r[2]) - 1
        est[m, k, j] = float(r[3])
        if r[4] != "":
            truth[k, j] = float(r[4])
            have_truth = True
    return est, (truth if have_truth else None)


def write_rmse_csv(rmse: np.ndarray, path: PathLike) -> None:
    """Rows: step, node, rmse.  Shape (n_steps, n_nodes), 1-based indices."""
    rmse = np.asarray(rmse)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "node", "rmse"])
        for k in range(rmse.shape[0]):
            for j in range(rmse.shape[1]):
                writer.writerow([k + 1, j + 1, _fmt(rmse[k, j])])


def read_rmse_csv(path: PathLike) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = list(reader)
    if not rows:
        return np.zeros((0, 0))
    n_steps = max(int(r[0]) for r in rows)
    n_nodes = max(int(r[1]) for r in rows)
    out = np.full((n_steps, n_nodes), np.nan)
    for r in rows:
        out[int(r[0]) - 1, int(r[1]) - 1] = float(r[2])
    return out


def write_iterations_csv(iterations: np.ndarray, path: PathLike) -> None:
    """Rows: run, step, ipf_iterations.  Shape (n_runs, n_steps)."""
    iterations = np.asarray(iterations)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "step", "ipf_iterations"])
        for m in range(iterations.shape[0]):
            for k in range(iterations.shape[1]):
                writer.writerow([m + 1, k + 1, int(iterations[m, k])])


def read_iterations_csv(path: PathLike) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = list(reader)
    if not rows:
        return np.zeros((0, 0), dtype=int)
    n_runs = max(int(r[0]) for r in rows)
    n_steps = max(int(r[1]) for r in rows)
    out = np.zeros((n_runs, n_steps), dtype=int)
    for r in rows:
        out[int(r[0]) - 1, int(r[1]) - 1] = int(r[2])
    return out


def write_timing_json(rows: Sequence[dict], path: PathLike) -> None:
    """Rows carry d, mean_seconds and ratio (normalized to the first d)."""
    doc = {"schema": TIMING_SCHEMA, "rows": [
        {"d": int(r["d"]),
         "mean_seconds": float(r["mean_seconds"]),
         "ratio": float(r["ratio"])}
        for r in rows
    ]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_timing_json(path: PathLike) -> list[dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != TIMING_SCHEMA:
        raise ValueError(f"unsupported timing schema {doc.get('schema')!r}")
    return doc["rows"]
