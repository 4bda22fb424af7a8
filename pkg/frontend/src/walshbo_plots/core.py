"""Read experiment CSVs and draw static result figures.

Consumes only the optimizer CLI's file formats: per-run CSVs with columns
run_id,iteration,batch_id,point_bits,objective,best_so_far,batch_diversity,
wall_time_s and summary CSVs with iteration,mean_best_so_far,
stderr_best_so_far.  The only statistics computed here are means and
standard errors recomputed from per-run files; plotting returns the data
arrays it drew so tests compare numbers, not pixels.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

DPI = 150

SUMMARY_COLUMNS = ("iteration", "mean_best_so_far", "stderr_best_so_far")
RUN_COLUMNS = ("run_id", "iteration", "batch_id", "point_bits", "objective",
               "best_so_far", "batch_diversity", "wall_time_s")


class SchemaError(ValueError):
    """A CSV is missing a required column or has no rows."""


@dataclass
class CurveSpec:
    label: str
    path: str
    color_index: int = 0


def _read_rows(path, required):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_summary(path):
    """Summary CSV as (iterations, mean, stderr) arrays."""
    rows = _read_rows(path, SUMMARY_COLUMNS)
    its = np.array([int(r["iteration"]) for r in rows])
    mean = np.array([float(r["mean_best_so_far"]) for r in rows])
    stderr = np.array([float(r["stderr_best_so_far"]) for r in rows])
    return its, mean, stderr


def read_run(path):
    """Per-run CSV as a list of dicts with typed fields."""
    rows = _read_rows(path, RUN_COLUMNS)
    out = []
    for r in rows:
        out.append({
            "iteration": int(r["iteration"]),
            "batch_id": int(r["batch_id"]),
            "best_so_far": float(r["best_so_far"]),
            "batch_diversity": (float(r["batch_diversity"])
                                if r["batch_diversity"] != "" else None),
        })
    return out


def recompute_summary(run_paths):
    """Mean and standard error of best-so-far across per-run files."""
    columns = []
    for path in run_paths:
        rows = read_run(path)
        columns.append([r["best_so_far"] for r in rows])
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise SchemaError(f"runs disagree on iteration counts: {sorted(lengths)}")
    stack = np.array(columns)
    repeats = stack.shape[0]
    mean = stack.mean(axis=0)
    if repeats > 1:
        stderr = stack.std(axis=0, ddof=1) / math.sqrt(repeats)
    else:
        stderr = np.zeros_like(mean)
    its = np.arange(1, stack.shape[1] + 1)
    return its, mean, stderr


def run_batch_size(path):
    """Infer the selection batch size: modal row count per non-init batch."""
    rows = read_run(path)
    counts = Counter(r["batch_id"] for r in rows if r["batch_id"] >= 1)
    if not counts:
        return 0
    return Counter(counts.values()).most_common(1)[0][0]


def run_mean_diversity(path):
    """Mean recorded diversity over this run's selection batches."""
    rows = read_run(path)
    seen = {}
    for r in rows:
        if r["batch_id"] >= 1 and r["batch_diversity"] is not None:
            seen[r["batch_id"]] = r["batch_diversity"]
    if not seen:
        raise SchemaError(f"{path}: no selection-batch diversity values")
    return float(np.mean(list(seen.values())))


def plot_convergence(curves, out_path):
    """Mean best-so-far lines with +-2 stderr bands; returns drawn data."""
    if not curves:
        raise SchemaError("need at least one curve")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    drawn = []
    grids = set()
    for spec in curves:
        its, mean, stderr = read_summary(spec.path)
        grids.add(tuple(its.tolist()))
        color = f"C{spec.color_index}"
        band_lo = mean - 2.0 * stderr
        band_hi = mean + 2.0 * stderr
        ax.plot(its, mean, label=spec.label, color=color)
        ax.fill_between(its, band_lo, band_hi, color=color, alpha=0.25,
                        linewidth=0)
        drawn.append({"label": spec.label, "iterations": its, "mean": mean,
                      "stderr": stderr, "band_lo": band_lo,
                      "band_hi": band_hi})
    if len(grids) != 1:
        raise SchemaError("curves disagree on iteration grids")
    ax.set_xlabel("evaluations")
    ax.set_ylabel("best value so far")
    ax.legend()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return drawn


def plot_diversity(groups, out_path):
    """Bar chart of mean batch diversity per group with 2-stderr error bars.

    ``groups`` maps a label to its per-run CSV paths; returns drawn data.
    """
    if not groups:
        raise SchemaError("need at least one group")
    labels, heights, errors = [], [], []
    for label, paths in groups.items():
        values = [run_mean_diversity(p) for p in paths]
        labels.append(label)
        heights.append(float(np.mean(values)))
        if len(values) > 1:
            errors.append(2.0 * float(np.std(values, ddof=1))
                          / math.sqrt(len(values)))
        else:
            errors.append(0.0)
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    ax.bar(range(len(labels)), heights, yerr=errors, capsize=4,
           color=[f"C{i}" for i in range(len(labels))])
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels)
    ax.set_ylabel("mean batch Hamming diversity")
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return {"labels": labels, "heights": heights, "errors": errors}
