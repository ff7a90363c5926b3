"""
Reports - Per-run CSVs, the across-seed summary CSV, SVG line charts and a text report
"""

import csv
import logging
import os
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "dialogue-toolkit"
matplotlib.rcParams["font.size"] = 10

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from evaluation.metrics import METRIC_COLUMNS  # noqa: E402
from evaluation.selection import select_run  # noqa: E402

logger = logging.getLogger(__name__)

LOSS_COLUMNS = ("step", "mle_loss", "sem_loss", "d_sem", "advantage", "alpha", "total")
CHART_LABELS = {
    "bleu": "BLEU-4",
    "distinct1": "distinct-1",
    "distinct2": "distinct-2",
    "unseen_frac": "unseen bigram fraction",
    "word_repeat_frac": "word-repeat fraction",
    "mean_d_sem": "mean d_SEM",
}


def save_rows_csv(path: Path, rows: List[Dict[str, Any]], fieldnames: Sequence[str]) -> Path:
    """Write rows with a fixed header; an empty row list still gets the header."""
    os.makedirs(path.parent, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return path


def aggregate_mean_min_max(records: Sequence) -> List[Dict[str, Any]]:
    """One row per evaluation step: mean, min and max of every metric across the runs that reached it."""
    buckets: Dict[int, List[Dict[str, float]]] = defaultdict(list)
    for record in records:
        for row in record.metric_rows():
            buckets[row["step"]].append(row)

    out = []
    for step in sorted(buckets):
        items = buckets[step]
        row: Dict[str, Any] = {"step": step, "n_runs": len(items)}
        for column in METRIC_COLUMNS[1:]:
            values = np.array([item[column] for item in items], dtype=np.float64)
            row[f"{column}_mean"] = float(values.mean())
            row[f"{column}_min"] = float(values.min())
            row[f"{column}_max"] = float(values.max())
        out.append(row)
    return out


def summary_columns() -> List[str]:
    columns = ["step", "n_runs"]
    for column in METRIC_COLUMNS[1:]:
        columns.extend([f"{column}_mean", f"{column}_min", f"{column}_max"])
    return columns


def plot_metric(records: Sequence, column: str, path: Path) -> Path:
    """Line chart of one metric against steps: one line per seed plus the mean."""
    fig, ax = plt.subplots(figsize=(6.0, 3.7))
    for record in records:
        steps, values = record.metric_series(column)
        if steps:
            ax.plot(steps, values, lw=1, alpha=0.5, label=f"seed {record.seed}")
    summary = aggregate_mean_min_max(records)
    if summary:
        steps = [row["step"] for row in summary]
        ax.plot(steps, [row[f"{column}_mean"] for row in summary], lw=2, color="black", label="mean")
        ax.fill_between(steps, [row[f"{column}_min"] for row in summary],
                        [row[f"{column}_max"] for row in summary], color="grey", alpha=0.2)

    ax.set_xlabel("step")
    ax.set_ylabel(CHART_LABELS.get(column, column))
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    if records:
        ax.legend(fontsize=8, frameon=False)

    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path


def format_report(records: Sequence) -> str:
    """Pretty-printed final metrics per seed plus both selection criteria."""
    lines = []
    for record in records:
        lines.append(f"== seed {record.seed} ==")
        if record.diverged:
            lines.append(f"diverged at step {record.diverged_step}")
        final = record.final_metrics()
        if final is None:
            lines.append("no evaluations")
        else:
            lines.append(f"step {record.metrics[-1][0]}")
            lines.append(final.format())
        lines.append("")
    evaluated = [r for r in records if r.metrics]
    if evaluated:
        for criterion in ("best-bleu", "distinct2-early-saturation"):
            lines.append(f"selected by {criterion}: seed {select_run(evaluated, criterion).seed}")
    return "\n".join(lines) + "\n"


def emit_reports(records: Sequence, out_dir: str, run_manager: Optional[Any] = None) -> List[Path]:
    """
    Write every report for a set of runs and return the artifact paths.

    Per seed: seed_<s>/metrics.csv and seed_<s>/train_log.csv. Across seeds:
    metrics_mean.csv, one <metric>.svg per metric column and report.txt.
    With a run manager the manifest is written too.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: List[Path] = []

    for record in records:
        run_dir = out / f"seed_{record.seed}"
        artifacts.append(save_rows_csv(run_dir / "metrics.csv", record.metric_rows(), METRIC_COLUMNS))
        artifacts.append(save_rows_csv(run_dir / "train_log.csv", record.loss_rows(), LOSS_COLUMNS))
        artifacts.extend(Path(p) for p in record.checkpoint_paths)

    artifacts.append(save_rows_csv(out / "metrics_mean.csv", aggregate_mean_min_max(records), summary_columns()))
    for column in METRIC_COLUMNS[1:]:
        artifacts.append(plot_metric(records, column, out / f"{column}.svg"))

    report_path = out / "report.txt"
    report_path.write_text(format_report(records), encoding="utf-8")
    artifacts.append(report_path)

    if run_manager is not None:
        config_snapshot = out / run_manager.config_snapshot_name
        if config_snapshot.exists():
            artifacts.append(config_snapshot)
        artifacts.append(run_manager.write_manifest(artifacts, {"seeds": [r.seed for r in records]}))

    logger.info(f"Reports written to {out} ({len(artifacts)} files)")
    return artifacts
