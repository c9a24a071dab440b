"""Static figures rendered next to the delimited report output.

Figures default to SVG with a fixed hash salt and no embedded date so that
reruns of the same seeded experiment produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_figure", "track_figure", "ecdf_figure", "sandwich_figure"]

matplotlib.rcParams["svg.hashsalt"] = "gwbound"
matplotlib.rcParams["figure.figsize"] = (7.0, 4.2)
matplotlib.rcParams["figure.dpi"] = 110


def save_figure(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None,
                bbox_inches="tight")
    plt.close(fig)
    return path


def track_figure(checkpoints, quantiles_by_label: dict, title: str,
                 ylabel: str, path: Path) -> Path:
    """Quantile fan of a normalized-track statistic against path depth."""
    fig, ax = plt.subplots()
    for label, qs in quantiles_by_label.items():
        qs = np.asarray(qs)
        ax.plot(checkpoints, qs[:, 1], marker="o", label=f"{label} median")
        ax.fill_between(checkpoints, qs[:, 0], qs[:, 2], alpha=0.2)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("path depth n")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    return save_figure(fig, path)


def ecdf_figure(sample_sets: dict, title: str, path: Path,
                reference=None) -> Path:
    """Overlaid empirical CDFs, optionally against a reference curve."""
    fig, ax = plt.subplots()
    for label, xs in sample_sets.items():
        xs = np.sort(np.asarray(xs, dtype=float))
        ax.step(xs, np.arange(1, xs.size + 1) / xs.size, where="post",
                label=label, lw=1.0)
    if reference is not None:
        ref_label, ref_cdf = reference
        lo = min(float(np.min(np.asarray(v))) for v in sample_sets.values())
        hi = max(float(np.max(np.asarray(v))) for v in sample_sets.values())
        grid = np.linspace(lo, hi, 400)
        ax.plot(grid, ref_cdf(grid), "k--", lw=1.2, label=ref_label)
    ax.set_xlabel("x")
    ax.set_ylabel("F(x)")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(True, alpha=0.3)
    return save_figure(fig, path)


def sandwich_figure(grid, lower, middle, upper, title: str, path: Path) -> Path:
    """The two-sided decomposability bound around the tail difference."""
    fig, ax = plt.subplots()
    ax.plot(grid, lower, label="lower bound", color="tab:green")
    ax.plot(grid, middle, label="tail difference", color="tab:blue")
    ax.plot(grid, upper, label="upper bound", color="tab:red")
    ax.set_yscale("log")
    ax.set_xlabel("x")
    ax.set_ylabel("probability")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return save_figure(fig, path)
