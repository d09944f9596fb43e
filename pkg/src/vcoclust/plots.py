"""Figure rendering for the report path.

Every plot lands next to its delimited counterpart so a run directory is
browsable without extra tooling. The Agg backend keeps this usable in
headless batch jobs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "savefig.dpi": 130,
}


def _new_axes():
    plt.rcParams.update(_STYLE)
    return plt.subplots()


def plot_loss_curves(history, path):
    """Total loss plus the bound terms over epochs; phase switch marked."""
    fig, ax = _new_axes()
    epochs = [e for e, _, _ in history]
    ax.plot(epochs, [r.total for _, _, r in history], label="total", lw=1.8)
    ax.plot(epochs, [-r.elbo for _, _, r in history], label="-bound", lw=1.0)
    ax.plot(epochs, [r.cah for _, _, r in history], label="hardening", lw=1.0)
    ax.plot(epochs, [r.mutual_distance for _, _, r in history],
            label="center distance", lw=1.0)
    switch = next((e for e, phase, _ in history if phase == "alternating"), None)
    if switch is not None:
        ax.axvline(switch, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_embedding_scatter(points2d, groups, path, title=""):
    """2-D embedding scatter colored by cluster or label ids."""
    points2d = np.asarray(points2d)
    groups = np.asarray(groups)
    fig, ax = _new_axes()
    for g in np.unique(groups):
        mask = groups == g
        ax.scatter(points2d[mask, 0], points2d[mask, 1], s=8, alpha=0.7, label=str(g))
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    if title:
        ax.set_title(title)
    if len(np.unique(groups)) <= 12:
        ax.legend(loc="best", fontsize=8, markerscale=1.5)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(rows, path):
    """Clustering quality against embedding size; one line per metric."""
    fig, ax = _new_axes()
    js = [r["j"] for r in rows]
    ax.plot(js, [r["nmi"] for r in rows], marker="o", label="NMI")
    ax.plot(js, [r["ari"] for r in rows], marker="s", label="ARI")
    ax.set_xscale("log", base=2)
    ax.set_xticks(js)
    ax.set_xticklabels([str(j) for j in js])
    ax.set_xlabel("embedding size")
    ax.set_ylabel("score")
    ax.set_ylim(bottom=0)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
