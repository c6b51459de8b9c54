"""Matplotlib figures for training logs, sweeps and depth visualizations."""

from __future__ import annotations

import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_convergence",
    "plot_val_curve",
    "plot_sweep",
    "depth_to_png",
]


def _read_csv(path: str) -> list[dict]:
    with open(path) as f:
        return list(csv.DictReader(f))


def plot_convergence(log_csv: str, out_png: str):
    """Per-step loss curves from a trainer log."""
    rows = _read_csv(log_csv)
    steps = [int(r["step"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    for col, label in (("loss_g", "generator"), ("loss_pd", "pair disc"),
                       ("loss_dd", "depth disc"), ("loss_l1", "masked L1")):
        ys = [(s, float(r[col])) for s, r in zip(steps, rows)
              if not math.isnan(float(r[col]))]
        if ys:
            ax.plot([p[0] for p in ys], [p[1] for p in ys], label=label, lw=1)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=110)
    plt.close(fig)


def plot_val_curve(val_csv: str, out_png: str):
    rows = _read_csv(val_csv)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot([int(r["epoch"]) for r in rows], [float(r["val_l1"]) for r in rows],
            marker="o", ms=3)
    ax.set_xlabel("epoch")
    ax.set_ylabel("validation L1 (m)")
    fig.tight_layout()
    fig.savefig(out_png, dpi=110)
    plt.close(fig)


def plot_sweep(results_csv: str, out_png: str, metric: str = "rmse"):
    """One metric against the sweep's grid values."""
    rows = _read_csv(results_csv)
    if not rows:
        raise ValueError(f"{results_csv} has no finished points")
    values = [r["value"] for r in rows]
    try:
        xs = [float(v) for v in values]
        categorical = False
    except ValueError:
        xs = list(range(len(values)))
        categorical = True
    ys = [float(r[metric]) for r in rows]
    order = np.argsort(xs)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot([xs[i] for i in order], [ys[i] for i in order], marker="o", ms=4)
    if categorical:
        ax.set_xticks(xs, values)
    ax.set_xlabel(rows[0]["kind"])
    ax.set_ylabel(metric)
    fig.tight_layout()
    fig.savefig(out_png, dpi=110)
    plt.close(fig)


def depth_to_png(depth: np.ndarray, path: str, cmap: str = "viridis",
                 vmin: float | None = None, vmax: float | None = None):
    """Colormapped depth image; defaults to per-image min/max normalization."""
    d = np.asarray(depth, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError(f"depth image must be 2-D, got shape {d.shape}")
    lo = float(d.min()) if vmin is None else vmin
    hi = float(d.max()) if vmax is None else vmax
    if hi <= lo:
        hi = lo + 1e-6
    plt.imsave(path, d, cmap=cmap, vmin=lo, vmax=hi)
