"""Matplotlib figure rendering (Agg backend, files only)."""

from __future__ import annotations

import os
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import DecayReport
from .kernel import KernelSeries
from .pde_sim import Trajectory

__all__ = [
    "plot_trajectory",
    "plot_decay",
    "plot_gain_profile",
    "plot_term_norms",
    "plot_boundary_input",
]

_DPI = 150


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_trajectory(path: str, traj: Trajectory, title: str = "state evolution",
                    max_lines: int = 24) -> str:
    """Snapshot curves over x, shaded from early (light) to late (dark)."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    n = len(traj.snapshots)
    stride = max(1, n // max_lines)
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    cmap = plt.get_cmap("viridis")
    for rank, i in enumerate(idx):
        snap = traj.snapshots[i]
        ax.plot(snap.x, snap.values, lw=0.9,
                color=cmap(rank / max(1, len(idx) - 1)))
    ax.set_xlabel("x")
    ax.set_ylabel("u(x, t)")
    label = title
    if traj.diverged:
        label += f"  (diverged at t={traj.t_diverged:.4g})"
    ax.set_title(label)
    sm = plt.cm.ScalarMappable(
        cmap=cmap,
        norm=plt.Normalize(traj.times[0], traj.times[-1]))
    fig.colorbar(sm, ax=ax, label="t")
    return _save(fig, path)


def plot_decay(path: str, report: DecayReport,
               title: Optional[str] = None) -> str:
    """Norm history on a log scale against the claimed exponential bound."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.semilogy(report.times, report.values, lw=1.2, label=f"{report.norm} norm")
    bound = report.values[0] * np.exp(-report.claimed_rate * report.times)
    ax.semilogy(report.times, bound, "--", lw=1.0,
                label=f"exp(-{report.claimed_rate:g} t) bound")
    ax.axvspan(*report.window, alpha=0.12, color="gray", label="fit window")
    ax.set_xlabel("t")
    ax.set_ylabel("norm value")
    ax.set_title(title or
                 f"decay: fitted {report.fitted_rate:.3g}, "
                 f"claimed {report.claimed_rate:g}")
    ax.legend()
    return _save(fig, path)


def plot_gain_profile(path: str, ks: KernelSeries, n_nodes: int = 201) -> str:
    """Feedback gains k(1, y, t) at three times across the validity window."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    y = np.linspace(0.0, 1.0, n_nodes)
    ones = np.ones_like(y)
    for t in (0.0, 0.5 * ks.t_valid, ks.t_valid):
        ax.plot(y, ks.eval(ones, y, t), lw=1.1, label=f"t={t:g}")
    ax.set_xlabel("y")
    ax.set_ylabel("k(1, y, t)")
    ax.set_title(f"gain profile ({ks.family.value} family)")
    ax.legend()
    return _save(fig, path)


def plot_term_norms(path: str, ks: KernelSeries) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    sups = np.asarray(ks.term_sup_norms())
    ax.semilogy(np.arange(sups.size), np.maximum(sups, 1e-300), "o-", lw=1.0)
    ax.set_xlabel("term index n")
    ax.set_ylabel("sup norm at t_valid")
    ax.set_title("series term magnitudes")
    return _save(fig, path)


def plot_boundary_input(path: str, traj: Trajectory) -> str:
    fig, ax = plt.subplots(figsize=(7.0, 3.5))
    ax.plot(traj.boundary_inputs[:, 0], traj.boundary_inputs[:, 1], lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("control value")
    ax.set_title("boundary input history")
    return _save(fig, path)
