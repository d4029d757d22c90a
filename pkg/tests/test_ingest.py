import gzip
import io
from pathlib import Path

import numpy as np
import pytest

from trustfilter.ingest import (
    INTEL_AGREEMENT_THRESHOLD,
    RawRecord,
    SyncConfig,
    parse_dataset,
    synchronize,
)

EXCERPT = Path(__file__).resolve().parent.parent / "data" / "intel_lab_excerpt.txt.gz"

SAMPLE_LINE = "2004-02-28 00:59:16.02785 3 1 19.9884 37.0933 45.08 2.69964\n"


def rec(epoch, mote, temperature, date="2004-02-28"):
    return RawRecord(
        date=date, time="00:00:00", epoch=epoch, mote_id=mote,
        temperature=temperature, humidity=40.0, light=50.0, voltage=2.6,
    )


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def test_parse_documented_line():
    records, report = parse_dataset(io.StringIO(SAMPLE_LINE))
    assert report.skipped == 0
    (record,) = records
    assert record.epoch == 3
    assert record.mote_id == 1
    assert record.temperature == pytest.approx(19.9884)
    assert record.humidity == pytest.approx(37.0933)
    assert record.voltage == pytest.approx(2.69964)


def test_parse_empty_input():
    records, report = parse_dataset(io.StringIO(""))
    assert records == []
    assert report.skipped == 0


def test_parse_skips_malformed_lines():
    text = (
        SAMPLE_LINE
        + "2004-02-28 01:00:00 4 1 19.9\n"            # five fields
        + "2004-02-28 01:00:31 x 1 19.9 37.0 45.0 2.7\n"  # bad epoch
        + SAMPLE_LINE
    )
    records, report = parse_dataset(io.StringIO(text))
    assert len(records) == 2
    assert report.skipped == 2
    assert report.first_bad_lines == (2, 3)
    assert "skipped 2" in str(report)


def test_parse_records_first_ten_bad_lines():
    text = "junk\n" * 25
    _, report = parse_dataset(io.StringIO(text))
    assert report.skipped == 25
    assert len(report.first_bad_lines) == 10


def test_parse_plain_and_gzip(tmp_path):
    plain = tmp_path / "sample.txt"
    plain.write_text(SAMPLE_LINE * 3)
    records, _ = parse_dataset(plain)
    assert len(records) == 3

    zipped = tmp_path / "sample.txt.gz"
    with gzip.open(zipped, "wt") as fh:
        fh.write(SAMPLE_LINE * 4)
    records, _ = parse_dataset(zipped)
    assert len(records) == 4


def test_checked_in_excerpt_parses():
    records, report = parse_dataset(EXCERPT)
    assert report.skipped == 0
    assert len(records) > 1500
    assert {r.mote_id for r in records} == {9, 10, 11, 12, 13}


# ---------------------------------------------------------------------------
# synchronization
# ---------------------------------------------------------------------------

def test_sync_config_validation():
    with pytest.raises(ValueError):
        SyncConfig(node_ids=())
    with pytest.raises(ValueError):
        SyncConfig(node_ids=(9, 9))
    with pytest.raises(ValueError):
        SyncConfig(attribute="sound")
    with pytest.raises(ValueError):
        SyncConfig(grid_start=10, grid_end=10)


def test_interpolation_linear_midpoint():
    records = [rec(10, 9, 20.0), rec(20, 9, 22.0), rec(15, 10, 21.0)]
    cfg = SyncConfig(node_ids=(9, 10), grid_start=15, grid_end=16)
    (frame,) = synchronize(records, cfg)
    assert frame.values[0] == pytest.approx(21.0)
    assert frame.values[1] == pytest.approx(21.0)  # exact hit


def test_interpolation_refuses_extrapolation():
    records = [rec(10, 9, 20.0), rec(20, 9, 22.0)]
    cfg = SyncConfig(node_ids=(9,), grid_start=0, grid_end=30)
    frames = synchronize(records, cfg)
    present = np.array([f.present[0] for f in frames])
    assert not present[:10].any()     # before the first sample
    assert present[10:21].all()       # inside the sampled range
    assert not present[21:].any()     # after the last sample


def test_interpolation_gap_limit():
    records = [rec(0, 9, 20.0), rec(200, 9, 22.0)]
    cfg = SyncConfig(node_ids=(9,), grid_start=0, grid_end=201, max_gap=50)
    frames = synchronize(records, cfg)
    assert frames[0].present[0] and frames[200].present[0]  # exact hits
    assert not frames[100].present[0]  # 200-epoch gap exceeds max_gap


def test_single_sample_exact_hit_only():
    records = [rec(42, 9, 20.5)]
    cfg = SyncConfig(node_ids=(9,), grid_start=40, grid_end=45)
    frames = synchronize(records, cfg)
    for frame in frames:
        assert frame.present[0] == (frame.time_step - 1 + 40 == 42)
    assert frames[2].values[0] == pytest.approx(20.5)


def test_missing_node_warns_all_absent(caplog):
    records = [rec(10, 9, 20.0), rec(11, 9, 20.1)]
    cfg = SyncConfig(node_ids=(9, 99), grid_start=10, grid_end=12)
    with caplog.at_level("WARNING"):
        frames = synchronize(records, cfg)
    assert "99" in caplog.text
    assert not any(f.present[1] for f in frames)


def test_no_overshoot_between_brackets():
    rng = np.random.default_rng(8)
    records = []
    epochs = np.sort(rng.choice(np.arange(0, 300), size=60, replace=False))
    values = rng.normal(20, 2, size=60)
    for e, v in zip(epochs, values):
        records.append(rec(int(e), 9, float(v)))
    cfg = SyncConfig(node_ids=(9,), grid_start=0, grid_end=300, max_gap=300)
    frames = synchronize(records, cfg)
    for frame in frames:
        if frame.present[0]:
            assert values.min() - 1e-9 <= frame.values[0] <= values.max() + 1e-9


def test_duplicate_epochs_collapse_to_mean():
    records = [rec(10, 9, 20.0), rec(10, 9, 22.0)]
    cfg = SyncConfig(node_ids=(9,), grid_start=10, grid_end=11)
    (frame,) = synchronize(records, cfg)
    assert frame.values[0] == pytest.approx(21.0)


def test_day_filter():
    records = [rec(10, 9, 20.0), rec(10, 9, 99.0, date="2004-03-01")]
    cfg = SyncConfig(node_ids=(9,), grid_start=10, grid_end=11, day="2004-02-28")
    (frame,) = synchronize(records, cfg)
    assert frame.values[0] == pytest.approx(20.0)


def test_column_order_follows_node_ids():
    records = [rec(10, 9, 1.0), rec(10, 13, 2.0)]
    cfg = SyncConfig(node_ids=(13, 9), grid_start=10, grid_end=11)
    (frame,) = synchronize(records, cfg)
    assert frame.values.tolist() == [2.0, 1.0]


def test_synchronize_deterministic():
    records, _ = parse_dataset(EXCERPT)
    cfg = SyncConfig(grid_end=100)
    a = synchronize(records, cfg)
    b = synchronize(records, cfg)
    assert all(
        np.array_equal(x.values, y.values, equal_nan=True) for x, y in zip(a, b)
    )


def test_intel_profile_threshold_constant():
    assert INTEL_AGREEMENT_THRESHOLD == 2.0
