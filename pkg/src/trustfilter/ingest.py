"""Ingestion of the public indoor sensor-deployment dataset.

The raw file is whitespace-separated with one measurement per line:

    date time epoch mote_id temperature humidity light voltage

e.g. ``2004-02-28 00:59:16.02785 3 1 19.9884 37.0933 45.08 2.69964``.
Motes sample asynchronously, so readings are aligned onto a common epoch
grid by linear interpolation between the two nearest surrounding samples;
a grid point whose surrounding gap is too wide (or that lies outside the
sampled range) becomes an absent reading.
"""

from __future__ import annotations

import gzip
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np

from .model import ReadingFrame

logger = logging.getLogger(__name__)

ATTRIBUTES = ("temperature", "humidity", "light")

#: Agreement threshold that works well on this dataset's temperature scale.
INTEL_AGREEMENT_THRESHOLD = 2.0
DEFAULT_NODE_IDS = (9, 10, 11, 12, 13)
DEFAULT_DAY = "2004-02-28"


@dataclass(frozen=True)
class RawRecord:
    date: str
    time: str
    epoch: int
    mote_id: int
    temperature: float
    humidity: float
    light: float
    voltage: float


@dataclass(frozen=True)
class ParseReport:
    total_lines: int
    parsed: int
    skipped: int
    first_bad_lines: tuple[int, ...] = ()

    def __str__(self) -> str:
        msg = f"parsed {self.parsed}/{self.total_lines} lines, skipped {self.skipped}"
        if self.first_bad_lines:
            msg += f" (first bad lines: {', '.join(map(str, self.first_bad_lines))})"
        return msg


@dataclass(frozen=True)
class SyncConfig:
    """Controls node selection and epoch-grid alignment.

    ``grid_start``/``grid_end``/``grid_stride`` define the grid as the
    epochs ``start, start+stride, ...`` strictly below ``end``.  A grid
    point is interpolated only when its two bracketing raw samples are at
    most ``max_gap`` epochs apart; otherwise the reading is absent.
    ``day`` restricts the records to one calendar date (``YYYY-MM-DD``);
    None uses every record.
    """

    node_ids: tuple[int, ...] = DEFAULT_NODE_IDS
    attribute: str = "temperature"
    grid_start: int = 0
    grid_end: int = 800
    grid_stride: int = 1
    day: Optional[str] = DEFAULT_DAY
    max_gap: int = 50

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(int(n) for n in self.node_ids))
        if not self.node_ids:
            raise ValueError("node_ids must be non-empty")
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ValueError("node_ids must be distinct")
        if self.attribute not in ATTRIBUTES:
            raise ValueError(f"attribute must be one of {ATTRIBUTES}")
        if self.grid_start >= self.grid_end:
            raise ValueError("grid_start must be below grid_end")
        if self.grid_stride < 1:
            raise ValueError("grid_stride must be at least 1")
        if self.max_gap < 1:
            raise ValueError("max_gap must be at least 1")

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.grid_start, self.grid_end, self.grid_stride)


def _open_maybe_gzip(source: Union[str, Path, IO]) -> IO:
    if hasattr(source, "read"):
        return source
    path = Path(source)
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path, "r")


def parse_dataset(
    source: Union[str, Path, IO],
) -> tuple[list[RawRecord], ParseReport]:
    """Parse the raw dataset into records, skipping malformed lines.

    Accepts a path (optionally gzip-compressed) or an open text stream.
    Parse failures are isolated per line and counted in the report; the
    line numbers of the first ten offenders are kept for diagnostics.
    """
    records: list[RawRecord] = []
    skipped = 0
    bad_lines: list[int] = []
    total = 0
    stream = _open_maybe_gzip(source)
    close = stream is not source
    try:
        for lineno, line in enumerate(stream, start=1):
            total += 1
            parts = line.split()
            if not parts:
                continue  # blank lines are not data, not errors
            try:
                if len(parts) != 8:
                    raise ValueError("expected 8 fields")
                mote_id = int(parts[3])
                if mote_id < 1:
                    raise ValueError("mote ids start at 1")
                records.append(
                    RawRecord(
                        date=parts[0],
                        time=parts[1],
                        epoch=int(parts[2]),
                        mote_id=mote_id,
                        temperature=float(parts[4]),
                        humidity=float(parts[5]),
                        light=float(parts[6]),
                        voltage=float(parts[7]),
                    )
                )
            except ValueError:
                skipped += 1
                if len(bad_lines) < 10:
                    bad_lines.append(lineno)
    finally:
        if close:
            stream.close()
    report = ParseReport(
        total_lines=total,
        parsed=len(records),
        skipped=skipped,
        first_bad_lines=tuple(bad_lines),
    )
    return records, report


def _node_series(
    records: Iterable[RawRecord], node_id: int, attribute: str, day: Optional[str]
) -> tuple[np.ndarray, np.ndarray]:
    by_epoch: dict[int, list[float]] = {}
    for rec in records:
        if rec.mote_id != node_id:
            continue
        if day is not None and rec.date != day:
            continue
        by_epoch.setdefault(rec.epoch, []).append(getattr(rec, attribute))
    if not by_epoch:
        return np.array([], dtype=int), np.array([])
    epochs = np.array(sorted(by_epoch), dtype=int)
    # duplicate epochs collapse to their mean so the series is a function
    values = np.array([float(np.mean(by_epoch[e])) for e in epochs])
    return epochs, values


def synchronize(
    records: Sequence[RawRecord], config: SyncConfig
) -> list[ReadingFrame]:
    """Align asynchronous per-node samples onto the common epoch grid.

    For each node and grid epoch the reading is the linear interpolation
    between the two nearest surrounding samples; exact hits pass through
    unchanged.  Readings are absent outside the sampled range and across
    gaps wider than ``config.max_gap``.  Output node order follows
    ``config.node_ids``.
    """
    grid = config.grid
    columns = np.full((grid.shape[0], len(config.node_ids)), np.nan)
    for col, node_id in enumerate(config.node_ids):
        epochs, values = _node_series(records, node_id, config.attribute, config.day)
        if epochs.size == 0:
            logger.warning("no records for node %d; column is all-absent", node_id)
            continue
        right = np.searchsorted(epochs, grid, side="left")
        for g_idx, g in enumerate(grid):
            r = right[g_idx]
            if r < epochs.size and epochs[r] == g:
                columns[g_idx, col] = values[r]
                continue
            if r == 0 or r == epochs.size:
                continue  # refuse to extrapolate
            lo, hi = r - 1, r
            gap = epochs[hi] - epochs[lo]
            if gap > config.max_gap:
                continue
            frac = (g - epochs[lo]) / gap
            columns[g_idx, col] = values[lo] + frac * (values[hi] - values[lo])
    return [
        ReadingFrame(values=columns[k], time_step=k + 1)
        for k in range(grid.shape[0])
    ]
