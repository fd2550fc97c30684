# app/utils/plotting.py
"""SVG figures for run records and convergence reports (no display needed)."""
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

# stable element ids so identical data gives identical files
plt.rcParams["svg.hashsalt"] = "vortexkit"
SVG_METADATA = {"Date": None}


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    logger.info(f"Wrote plot {path}.")
    return path


def _draw_boundary(ax, domain):
    if domain is None:
        return
    for nodes in domain.nodes:
        closed = np.vstack([nodes.points, nodes.points[:1]])
        ax.plot(closed[:, 0], closed[:, 1], color="0.3", linewidth=1.0)


def plot_trajectories(record, path, domain=None):
    """Point-vortex paths Y_i(t) and, when available, centers of vorticity X_i(t)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    _draw_boundary(ax, domain)
    Y = np.array([f.Y for f in record.frames])
    for i in range(Y.shape[1]):
        ax.plot(Y[:, i, 0], Y[:, i, 1], linewidth=1.2, label=f"Y_{i}")
    if record.frames and record.frames[0].X is not None:
        X = np.array([f.X for f in record.frames])
        for i in range(X.shape[1]):
            ax.plot(X[:, i, 0], X[:, i, 1], linestyle="--", linewidth=1.0, label=f"X_{i}")
    ax.set_aspect("equal")
    ax.set_title(f"{record.name}: trajectories")
    ax.legend(loc="upper right", fontsize="small")
    return _save(fig, path)


def plot_w2(record, path):
    """W2 of every patch to its point vortex against time."""
    fig, ax = plt.subplots(figsize=(6, 4))
    t = record.times
    W2 = np.array([f.W2 for f in record.frames if f.W2 is not None])
    if len(W2):
        for i in range(W2.shape[1]):
            ax.plot(t[: len(W2)], W2[:, i], label=f"patch {i}")
        ax.legend(fontsize="small")
    ax.set_xlabel("t")
    ax.set_ylabel("W2")
    ax.set_title(f"{record.name}: concentration")
    return _save(fig, path)


def plot_rates(report: dict, path):
    """Log-log error against eps for every fitted quantity."""
    fig, ax = plt.subplots(figsize=(6, 4))
    eps = np.array([r["eps"] for r in report["runs"]])
    for key, slope in report.get("slopes", {}).items():
        errors = np.array([r["errors"][key] for r in report["runs"]])
        if np.all(errors > 0):
            ax.loglog(eps, errors, marker="o", label=f"{key} (slope {slope:.2f})")
    ax.set_xlabel("eps")
    ax.set_ylabel("max_t error")
    ax.set_title(f"{report['scenario']}: rates")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize="small")
    return _save(fig, path)
