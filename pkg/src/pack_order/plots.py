"""Figure rendering for evaluation and benchmark reports.

All figures are written to files next to the delimited output; nothing is
shown interactively.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finite_series(rows, key):
    xs, ys = [], []
    for row in rows:
        value = row[key]
        if value is None or value == "-inf":
            continue
        if isinstance(value, float) and not math.isfinite(value):
            continue
        xs.append(row["scene_size"])
        ys.append(value)
    return xs, ys


def render_report_figures(report: dict, outdir) -> list[Path]:
    """Consistency and satisfaction over scene size, plus per-class F1 bars."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    rows = report["by_scene_size"]
    xs, ys = _finite_series(rows, "aC")
    fig, ax = plt.subplots(figsize=(6, 4))
    if xs:
        ax.plot(xs, ys, marker="o")
    ax.set_xlabel("scene size")
    ax.set_ylabel("average consistency score")
    ax.set_title("Packing consistency over scene size")
    ax.grid(True, alpha=0.3)
    path = outdir / "consistency_by_scene_size.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    xs, ys = _finite_series(rows, "satisfaction_rate")
    fig, ax = plt.subplots(figsize=(6, 4))
    if xs:
        ax.plot(xs, ys, marker="o", color="black")
    ax.set_xlabel("scene size")
    ax.set_ylabel("constraint satisfaction rate")
    ax.set_ylim(0, 1.05)
    ax.set_title("Constraint satisfaction over scene size")
    ax.grid(True, alpha=0.3)
    path = outdir / "satisfaction_by_scene_size.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    per_class = report["detection"]["per_class"]
    names = sorted(c for c, v in per_class.items() if v["tp"] + v["fn"] > 0)
    if names:
        fig, ax = plt.subplots(figsize=(max(6, 0.45 * len(names)), 4))
        ax.bar(range(len(names)), [per_class[c]["f1"] for c in names])
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=60, ha="right", fontsize=8)
        ax.set_ylabel("F1")
        ax.set_ylim(0, 1.05)
        ax.set_title("Per-class detection F1")
        path = outdir / "per_class_f1.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    return written


def render_bench_figure(series: dict[str, list[dict]], outdir) -> Path:
    """One consistency-vs-scene-size line per planning method."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in sorted(series):
        xs, ys = _finite_series(series[method], "aC")
        if xs:
            ax.plot(xs, ys, marker="o", label=method)
    ax.set_xlabel("scene size")
    ax.set_ylabel("average consistency score")
    ax.set_title("Planner comparison over scene size")
    ax.grid(True, alpha=0.3)
    ax.legend()
    path = outdir / "bench_by_scene_size.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
