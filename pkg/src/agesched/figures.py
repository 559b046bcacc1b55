"""Rendering of figure data files to PNG.

Each figure data CSV (columns x, series, y, y_stderr) maps to one PNG with
a line per series, error bars where the stderr column is nonzero, and axis
labels fixed by the figure kind. Rendering uses the Agg backend so it works
headless; files land next to the data unless a path is given.
"""

from __future__ import annotations

import csv
import math
import os
from typing import Optional

__all__ = ["render_figure", "render_all"]

_AXES = {
    "fig2": ("fraction of degraded links", "weighted peak age per link"),
    "fig3": ("fraction of degraded links", "weighted average age per link"),
    "fig4": ("slots", "running weighted peak age per link"),
    "fig5": ("age exponent shift", "weighted age per link"),
}

_MARKERS = ["o", "s", "^", "D", "v", "P", "X", "*"]


def _load(path: str) -> dict:
    series = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            series.setdefault(row["series"], []).append(
                (float(row["x"]), float(row["y"]), float(row["y_stderr"]))
            )
    for pts in series.values():
        pts.sort()
    return series


def render_figure(kind: str, data_path: str, png_path: Optional[str] = None) -> str:
    """Render one figure data CSV to PNG; returns the written path."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if kind not in _AXES:
        raise ValueError(f"unknown figure kind {kind!r}")
    if png_path is None:
        png_path = os.path.splitext(data_path)[0] + ".png"
    xlabel, ylabel = _AXES[kind]
    series = _load(data_path)

    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for i, (name, pts) in enumerate(sorted(series.items())):
        pts = [p for p in pts if math.isfinite(p[1])]
        if not pts:
            continue
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        errs = [p[2] for p in pts]
        style = dict(marker=_MARKERS[i % len(_MARKERS)], markersize=4, linewidth=1.4)
        if name.startswith("lower-bound"):
            style = dict(linestyle="--", linewidth=1.2, color="0.35")
        if any(e > 0 for e in errs):
            ax.errorbar(xs, ys, yerr=errs, capsize=2, label=name, **style)
        else:
            ax.plot(xs, ys, label=name, **style)
    if kind == "fig4":
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return png_path


def render_all(data_dir: str) -> dict:
    """Render every known figure data file found in data_dir."""
    from .experiments import FIGURE_FILES

    out = {}
    for kind, fname in FIGURE_FILES.items():
        path = os.path.join(data_dir, fname)
        if os.path.exists(path):
            out[kind] = render_figure(kind, path)
    return out
