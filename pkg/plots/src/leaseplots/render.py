"""Deterministic figure rendering from experiment CSVs.

The CSV format is the primary tool's: ``#`` metadata lines (including the
experiment kind), a header row, then numeric rows.  Rendering is pure:
the same CSVs and recipe produce byte-identical image files.
"""

from __future__ import annotations

import math
import pathlib

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .recipe import FigureRecipe, RecipeError

#: rcParams pinned so output bytes do not depend on user configuration.
_RC = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "svg.hashsalt": "leaseplots",
}


def read_csv(path):
    """Returns (meta, header, rows) with rows as float arrays per column."""
    meta, header, rows = {}, None, []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, val = body.split(":", 1)
                    meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        raise RecipeError(f"{path}: no header row found")
    return meta, header, rows


def load_table(recipe: FigureRecipe, csv_paths):
    """Concatenated column arrays from one or more schema-matching CSVs."""
    if not csv_paths:
        raise RecipeError("at least one CSV is required")
    header = None
    meta0 = None
    all_rows = []
    for path in csv_paths:
        meta, hdr, rows = read_csv(path)
        kind = meta.get("kind")
        if kind is not None and kind != recipe.kind:
            raise RecipeError(
                f"{path}: CSV kind {kind!r} does not match recipe kind "
                f"{recipe.kind!r}")
        if header is None:
            header, meta0 = hdr, meta
        elif hdr != header:
            raise RecipeError(f"{path}: header {hdr} differs from {header}")
        all_rows.extend(rows)
    needed = [recipe.x] + [p.y for p in recipe.panels]
    missing = [c for c in needed if c not in header]
    if missing:
        raise RecipeError(
            f"recipe references missing columns {missing}; CSV has {header}")
    cols = {}
    for name in needed:
        i = header.index(name)
        cols[name] = np.array([float(r[i]) for r in all_rows])
    return meta0, cols


def aggregate_panel(x, y, mode: str):
    """Per-x aggregation: (xs, means, stds, n_dropped).

    ``mean-std`` groups rows by x value and reports the sample mean and
    sample std across replicates; non-finite y values (infeasible-baseline
    rows) are dropped from the aggregation and counted.
    """
    finite = np.isfinite(y)
    dropped = int((~finite).sum())
    x, y = x[finite], y[finite]
    if mode == "none":
        order = np.argsort(x, kind="stable")
        return x[order], y[order], np.zeros(len(y)), dropped
    xs = np.unique(x)
    means = np.empty(len(xs))
    stds = np.empty(len(xs))
    for i, xv in enumerate(xs):
        vals = y[x == xv]
        means[i] = vals.mean()
        stds[i] = vals.std(ddof=1) if len(vals) > 1 else 0.0
    return xs, means, stds, dropped


def render(recipe: FigureRecipe, csv_paths, out_dir) -> pathlib.Path:
    """Render one figure; returns the written image path."""
    meta, cols = load_table(recipe, csv_paths)
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / recipe.out_name

    n = len(recipe.panels)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(n, 1, sharex=True,
                                 figsize=(5.0, 1.9 * n + 0.7))
        if n == 1:
            axes = [axes]
        for ax, panel in zip(axes, recipe.panels):
            xs, means, stds, dropped = aggregate_panel(
                cols[recipe.x], cols[panel.y], recipe.aggregate)
            if len(xs) == 0:
                raise RecipeError(
                    f"panel {panel.y!r}: no finite rows to plot")
            if recipe.aggregate == "mean-std" and np.any(stds > 0):
                ax.errorbar(xs, means, yerr=stds, fmt="o-", capsize=2)
            else:
                ax.plot(xs, means, "o-")
            ax.set_ylabel(panel.label or panel.y)
            if dropped:
                ax.annotate(f"{dropped} infeasible rows dropped",
                            xy=(0.02, 0.04), xycoords="axes fraction",
                            fontsize=7, color="0.35")
        axes[-1].set_xlabel(recipe.x_label or recipe.x)
        if recipe.title:
            axes[0].set_title(recipe.title)
        fig.align_ylabels(axes)
        fig.tight_layout()
        fig.savefig(out_path, metadata=_strip_metadata(out_path))
        plt.close(fig)
    return out_path


def _strip_metadata(out_path: pathlib.Path):
    # drop the writer-version text chunk so bytes depend only on content
    if out_path.suffix.lower() == ".png":
        return {"Software": None}
    if out_path.suffix.lower() == ".svg":
        return {"Date": None}
    return None
