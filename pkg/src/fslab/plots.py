"""Figure rendering for the CLI report paths.

Each helper takes the already-computed rows behind a delimited report and
writes a PNG next to it; nothing here recomputes statistics.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_sweep(rows, path) -> None:
    """Accuracy vs k with 95% CI bars; ``rows`` are (k, mean, ci) tuples."""
    ks = [r[0] for r in rows]
    means = [r[1] for r in rows]
    cis = [r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(ks, means, yerr=cis, marker="o", capsize=3)
    ax.set_xlabel("k")
    ax.set_ylabel("mean accuracy")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_mmc_scatter(rows, path) -> None:
    """Per-channel before/after MMC scatter with the y=x reference line."""
    before = [r[1] for r in rows]
    after = [r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    lim = max(max(before), max(after)) * 1.05
    ax.plot([0, lim], [0, lim], color="gray", linewidth=0.8, label="y = x")
    ax.scatter(before, after, s=12, alpha=0.7)
    ax.set_xlabel("MMC before")
    ax.set_ylabel("MMC after")
    ax.set_xlim(0, lim)
    ax.set_ylim(0, lim)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_transform_curves(grid, columns, path) -> None:
    """Transform value curves over a lambda grid.

    ``columns`` maps a curve label to its list of values along ``grid``.
    """
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, values in columns.items():
        ax.plot(grid, values, label=label)
    ax.set_xlabel("input value")
    ax.set_ylabel("transformed value")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
