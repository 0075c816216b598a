"""Run outputs: JSONL report logs, summary CSVs, and F1-curve figures.

All delimited output is deterministic for a fixed run (timing fields are
excluded from the summary tables; they live only in the JSONL log).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from almatch.evaluation import IterationReport, auc_f1


def write_reports_jsonl(reports: list[IterationReport], path: str | Path) -> None:
    """One report per line, key order fixed by IterationReport.to_dict."""
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(report.to_json() + "\n")


def read_reports_jsonl(path: str | Path) -> list[IterationReport]:
    reports = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                reports.append(IterationReport.from_dict(json.loads(line)))
    return reports


def _auc_prefix(reports: list[IterationReport], upto: int) -> str:
    # running AUC over the first (upto+1) curve points; undefined below 2
    if upto < 1:
        return ""
    pts = [(r.labels_used, r.f1) for r in reports[: upto + 1]]
    if any(f is None for _, f in pts):
        return ""
    return f"{auc_f1(pts):.4f}"


def write_summary_csv(reports: list[IterationReport], path: str | Path) -> None:
    """Per-iteration table: iteration, labels_used, f1, auc_so_far."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "labels_used", "f1", "auc_so_far"])
        for i, report in enumerate(reports):
            f1 = "" if report.f1 is None else f"{report.f1:.4f}"
            writer.writerow([report.iteration, report.labels_used, f1, _auc_prefix(reports, i)])


def write_compare_csv(runs: dict[str, list[IterationReport]], path: str | Path) -> None:
    """Side-by-side strategy table, one row per labels_used value."""
    axes = sorted({r.labels_used for reports in runs.values() for r in reports})
    names = sorted(runs)
    lookup = {name: {r.labels_used: r.f1 for r in runs[name]} for name in names}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["labels_used"] + [f"f1_{name}" for name in names])
        for x in axes:
            row: list[str] = [str(x)]
            for name in names:
                value = lookup[name].get(x)
                row.append("" if value is None else f"{value:.4f}")
            writer.writerow(row)
        auc_row = ["auc"]
        for name in names:
            reports = runs[name]
            if len(reports) >= 2 and all(r.f1 is not None for r in reports):
                auc_row.append(f"{auc_f1([(r.labels_used, r.f1) for r in reports]):.4f}")
            else:
                auc_row.append("")
        writer.writerow(auc_row)


def plot_f1_curve(reports: list[IterationReport], path: str | Path, title: str = "F1 vs labels") -> None:
    """Render the labels/F1 curve of a single run to a PNG."""
    scored = [r for r in reports if r.f1 is not None]
    xs = [r.labels_used for r in scored]
    ys = [r.f1 * 100 for r in scored]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, marker="o")
    ax.set_xlabel("labels used")
    ax.set_ylabel("F1 (%)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_compare(runs: dict[str, list[IterationReport]], path: str | Path) -> None:
    """Overlay the F1 curves of several strategies in one PNG."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(runs):
        scored = [r for r in runs[name] if r.f1 is not None]
        ax.plot(
            [r.labels_used for r in scored],
            [r.f1 * 100 for r in scored],
            marker="o",
            label=name,
        )
    ax.set_xlabel("labels used")
    ax.set_ylabel("F1 (%)")
    ax.set_title("strategy comparison")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_run_outputs(
    reports: list[IterationReport], out_dir: str | Path, name: str = "run"
) -> dict[str, Path]:
    """Write the full report bundle for one run; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "reports": out / f"{name}_reports.jsonl",
        "summary": out / f"{name}_summary.csv",
        "figure": out / f"{name}_f1_curve.png",
    }
    write_reports_jsonl(reports, paths["reports"])
    write_summary_csv(reports, paths["summary"])
    plot_f1_curve(reports, paths["figure"], title=f"F1 vs labels ({name})")
    return paths
