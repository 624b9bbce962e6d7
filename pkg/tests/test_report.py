"""Reporting tests: the CSV summary and the rendered histogram figures."""

from __future__ import annotations

import csv
import json

from figforge.report import SUMMARY_NAME, read_feedback, write_report
from figforge.service import LIKERT_METRICS


def _write_log(data_dir, records):
    data_dir.mkdir(parents=True, exist_ok=True)
    with open(data_dir / "feedback.ndjson", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


def _record(score: int, usable: int) -> dict:
    return {
        "semantic_correctness": score,
        "information_completeness": score,
        "visual_quality": score,
        "style_consistency": score,
        "conversion_correctness": score,
        "usability": usable,
    }


def test_read_feedback_missing_log_is_empty(tmp_path):
    assert read_feedback(tmp_path) == []


def test_summary_csv_has_exact_statistics(tmp_path):
    _write_log(tmp_path / "data", [_record(5, 1), _record(4, 0), _record(3, 1)])
    written = write_report(tmp_path / "data", tmp_path / "out")
    assert written[0].name == SUMMARY_NAME

    with open(tmp_path / "out" / SUMMARY_NAME, newline="", encoding="utf-8") as fh:
        rows = {row["metric"]: row for row in csv.DictReader(fh)}
    assert set(rows) == set(LIKERT_METRICS) | {"usability"}
    for metric in LIKERT_METRICS:
        row = rows[metric]
        assert row["n"] == "3"
        assert row["mean"] == "4.0000"
        assert [row[f"count_{i}"] for i in range(1, 6)] == ["0", "0", "1", "1", "1"]
    assert rows["usability"]["n"] == "3"
    assert rows["usability"]["positive"] == "2"
    assert rows["usability"]["mean"] == "0.6667"


def test_histogram_png_per_metric(tmp_path):
    _write_log(tmp_path / "data", [_record(4, 1)])
    written = write_report(tmp_path / "data", tmp_path / "out")
    pngs = {p.name for p in written if p.suffix == ".png"}
    assert pngs == {f"{m}.png" for m in LIKERT_METRICS}
    for path in written:
        assert path.exists() and path.stat().st_size > 0
        if path.suffix == ".png":
            assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_empty_log_writes_summary_but_no_figures(tmp_path):
    written = write_report(tmp_path / "data", tmp_path / "out")
    assert [p.name for p in written] == [SUMMARY_NAME]
    with open(tmp_path / "out" / SUMMARY_NAME, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert all(row["n"] == "0" and row["mean"] == "" for row in rows)


def test_partial_records_are_counted_per_metric(tmp_path):
    _write_log(tmp_path / "data", [
        {"semantic_correctness": 2, "usability": 0},
        _record(4, 1),
    ])
    write_report(tmp_path / "data", tmp_path / "out")
    with open(tmp_path / "out" / SUMMARY_NAME, newline="", encoding="utf-8") as fh:
        rows = {row["metric"]: row for row in csv.DictReader(fh)}
    assert rows["semantic_correctness"]["n"] == "2"
    assert rows["semantic_correctness"]["mean"] == "3.0000"
    assert rows["visual_quality"]["n"] == "1"
