"""Evaluation reports: delimited output, a readable summary, and figures.

Every report lands as one TSV (machine side), one .txt rendering of the
same rows with any skip reasons spelled out, and one bar chart per
evaluation group saved next to the TSV.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("evaluation", "condition", "metric", "value", "n", "skipped")

FIGURE_STYLE = {
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.axisbelow": True,
}


@dataclass
class EvalRecord:
    """One reported number: which evaluation, under which condition.

    ``value`` of None marks a row that could not be computed; ``note``
    carries the reason into the text rendering. ``n`` counts evaluated
    items and ``skipped`` the ones dropped (for instance OOV pairs).
    """

    evaluation: str
    condition: str
    metric: str
    value: float | None
    n: int
    skipped: int = 0
    note: str = ""


def _format_value(value: float | None) -> str:
    return "NA" if value is None else f"{value:.6g}"


def emit_report(records: list[EvalRecord], path, figures: bool = True) -> Path:
    """Write the TSV at ``path`` plus the .txt summary and .png figures.

    Returns the TSV path. Figures can be disabled for headless contexts
    that only want numbers.
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(REPORT_COLUMNS) + "\n")
        for rec in records:
            fh.write(
                f"{rec.evaluation}\t{rec.condition}\t{rec.metric}\t"
                f"{_format_value(rec.value)}\t{rec.n}\t{rec.skipped}\n"
            )

    text_path = path.with_suffix(".txt")
    with open(text_path, "w", encoding="utf-8") as fh:
        for evaluation in _group_order(records):
            fh.write(f"== {evaluation} ==\n")
            for rec in records:
                if rec.evaluation != evaluation:
                    continue
                line = (
                    f"  {rec.condition:<24} {rec.metric:<12} "
                    f"{_format_value(rec.value):>8}   n={rec.n} skipped={rec.skipped}"
                )
                if rec.note:
                    line += f"   ({rec.note})"
                fh.write(line + "\n")
            fh.write("\n")

    if figures:
        render_figures(records, path)
    return path


def read_report(path) -> list[EvalRecord]:
    """Parse a report TSV back into records (notes are not stored there)."""
    records: list[EvalRecord] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != REPORT_COLUMNS:
            raise ValueError(f"{path}: unexpected report header {header}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != len(REPORT_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(REPORT_COLUMNS)} columns")
            value = None if fields[3] == "NA" else float(fields[3])
            records.append(
                EvalRecord(
                    evaluation=fields[0],
                    condition=fields[1],
                    metric=fields[2],
                    value=value,
                    n=int(fields[4]),
                    skipped=int(fields[5]),
                )
            )
    return records


def _group_order(records: list[EvalRecord]) -> list[str]:
    seen: list[str] = []
    for rec in records:
        if rec.evaluation not in seen:
            seen.append(rec.evaluation)
    return seen


def render_figures(records: list[EvalRecord], tsv_path) -> list[Path]:
    """One grouped bar chart per evaluation: value by condition and metric."""
    tsv_path = Path(tsv_path)
    out: list[Path] = []
    with plt.rc_context(FIGURE_STYLE):
        for evaluation in _group_order(records):
            rows = [
                r for r in records
                if r.evaluation == evaluation and r.value is not None
            ]
            if not rows:
                continue
            metrics: list[str] = []
            conditions: list[str] = []
            for r in rows:
                if r.metric not in metrics:
                    metrics.append(r.metric)
                if r.condition not in conditions:
                    conditions.append(r.condition)
            fig, ax = plt.subplots(
                figsize=(max(4.0, 1.8 * len(metrics) * max(1, len(conditions))), 3.6)
            )
            width = 0.8 / max(1, len(conditions))
            for ci, condition in enumerate(conditions):
                xs, ys = [], []
                for mi, metric in enumerate(metrics):
                    for r in rows:
                        if r.condition == condition and r.metric == metric:
                            xs.append(mi + ci * width)
                            ys.append(r.value)
                if xs:
                    ax.bar(xs, ys, width=width * 0.95, label=condition)
            ax.set_xticks(
                [i + width * (len(conditions) - 1) / 2 for i in range(len(metrics))]
            )
            ax.set_xticklabels(metrics)
            ax.set_ylabel("value")
            ax.set_title(evaluation)
            if all(0.0 <= r.value <= 1.0 for r in rows):
                ax.set_ylim(0.0, 1.05)
            if len(conditions) > 1:
                ax.legend(fontsize="small")
            fig.tight_layout()
            safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in evaluation)
            fig_path = tsv_path.with_name(f"{tsv_path.stem}_{safe}.png")
            fig.savefig(fig_path)
            plt.close(fig)
            out.append(fig_path)
            logger.info("figure written to %s", fig_path)
    return out
