"""Feedback reporting: delimited summary plus rendered histogram figures.

Reads the service's append-only feedback log and writes a CSV of exact
per-metric statistics alongside one histogram PNG per Likert metric.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from figforge.service import LIKERT_METRICS, aggregate_feedback

SUMMARY_NAME = "feedback_summary.csv"


def read_feedback(data_dir: str | Path) -> list[dict]:
    path = Path(data_dir) / "feedback.ndjson"
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]


def write_report(data_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Aggregate the feedback log into out_dir; returns the files written."""
    records = read_feedback(data_dir)
    aggregate = aggregate_feedback(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    summary = out_dir / SUMMARY_NAME
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["metric", "n", "mean", "positive", "count_1", "count_2", "count_3", "count_4", "count_5"]
        )
        for metric in LIKERT_METRICS:
            entry = aggregate["metrics"][metric]
            mean = f"{entry['mean']:.4f}" if "mean" in entry else ""
            writer.writerow([metric, entry["n"], mean, ""] + entry["histogram"])
        usability = aggregate["usability"]
        mean = f"{usability['positive'] / usability['n']:.4f}" if usability["n"] else ""
        writer.writerow(
            ["usability", usability["n"], mean, usability["positive"], "", "", "", "", ""]
        )
    written.append(summary)

    for metric in LIKERT_METRICS:
        entry = aggregate["metrics"][metric]
        if not entry["n"]:
            continue
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.bar(range(1, 6), entry["histogram"], color="#4878a8")
        ax.set_xticks(range(1, 6))
        ax.set_xlabel("rating")
        ax.set_ylabel("responses")
        ax.set_title(f"{metric} (n={entry['n']}, mean={entry['mean']:.2f})", fontsize=9)
        fig.tight_layout()
        path = out_dir / f"{metric}.png"
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)
    return written
