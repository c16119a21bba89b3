"""Delimited output: CSV dumps, flat key=value metadata, decay summaries.

All floats are written with a fixed %.12g format so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import os
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from .analysis import DecayReport
from .kernel import KernelSeries, ResidualReport
from .pde_sim import Trajectory

__all__ = [
    "write_kernel_dump",
    "write_gain_table",
    "write_term_norms",
    "write_residuals",
    "write_trajectory_csv",
    "write_boundary_csv",
    "write_metadata",
    "write_decay_csv",
    "write_decay_summary",
    "emit_plot_script",
]

_F = "{:.12g}".format


def _ensure_dir(path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def write_kernel_dump(path: str, ks: KernelSeries):
    """Raw series data: one row per term, t-power, and triangle node."""
    _ensure_dir(path)
    m1 = ks.grid_m + 1
    nodes = np.linspace(0.0, 1.0, m1)
    with open(path, "w") as fh:
        fh.write("family,n,xi,eta,t_power,value\n")
        for term in ks.terms:
            for p in range(term.tpoly_grids.shape[0]):
                grid = term.tpoly_grids[p]
                for i in range(m1):
                    row = grid[i]
                    for j in range(i + 1):
                        fh.write(f"{ks.family.value},{term.order_n},"
                                 f"{_F(nodes[i])},{_F(nodes[j])},{p},"
                                 f"{_F(row[j])}\n")


def write_gain_table(path: str, ks: KernelSeries, n_nodes: int = 201,
                     times: Optional[Sequence[float]] = None):
    """Controller gain profile: k(1, y, t) and k_x(1, y, t) on a y-grid."""
    _ensure_dir(path)
    if times is None:
        times = (0.0, 0.5 * ks.t_valid, ks.t_valid)
    y = np.linspace(0.0, 1.0, n_nodes)
    ones = np.ones_like(y)
    with open(path, "w") as fh:
        fh.write("x,y,t,k,k_x\n")
        for t in times:
            k = ks.eval(ones, y, t)
            kx = ks.eval_dx(ones, y, t)
            for j in range(n_nodes):
                fh.write(f"1,{_F(y[j])},{_F(t)},{_F(k[j])},{_F(kx[j])}\n")


def write_term_norms(path: str, ks: KernelSeries):
    _ensure_dir(path)
    sups = ks.term_sup_norms()
    with open(path, "w") as fh:
        fh.write("n,sup_norm\n")
        for n, s in enumerate(sups):
            fh.write(f"{n},{_F(s)}\n")


def write_residuals(path: str, report: ResidualReport):
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write(f"max_pde_residual={_F(report.max_pde_residual)}\n")
        fh.write(f"max_bc_residual={_F(report.max_bc_residual)}\n")
        fh.write(f"max_diagonal_residual={_F(report.max_diagonal_residual)}\n")
        if report.max_pde_residual_no_tderiv is not None:
            fh.write("max_pde_residual_no_tderiv="
                     f"{_F(report.max_pde_residual_no_tderiv)}\n")
        fh.write(f"grid_m={report.grid_m}\n")
        fh.write(f"fd_step={_F(report.fd_step)}\n")


def write_trajectory_csv(path: str, traj: Trajectory):
    """Long-format state history: one row per (snapshot time, node)."""
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write("t,x,u\n")
        for t, snap in zip(traj.times, traj.snapshots):
            xs = snap.x
            vals = snap.values
            ts = _F(t)
            for j in range(vals.size):
                fh.write(f"{ts},{_F(xs[j])},{_F(vals[j])}\n")


def write_boundary_csv(path: str, traj: Trajectory):
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write("t,control_value\n")
        for t, v in traj.boundary_inputs:
            fh.write(f"{_F(t)},{_F(v)}\n")


def write_metadata(path: str, entries: Dict[str, object]):
    _ensure_dir(path)
    with open(path, "w") as fh:
        for key, val in entries.items():
            if isinstance(val, float):
                val = _F(val)
            fh.write(f"{key}={val}\n")


def write_decay_csv(path: str, report: DecayReport):
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write("t,norm_value,claimed_bound,margin\n")
        v0 = report.values[0]
        for t, v, m in zip(report.times, report.values, report.margin_series):
            bound = v0 * np.exp(-report.claimed_rate * t)
            fh.write(f"{_F(t)},{_F(v)},{_F(bound)},{_F(m)}\n")


def write_decay_summary(path: str, report: DecayReport):
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write(f"norm={report.norm}\n")
        fh.write(f"fitted_rate={_F(report.fitted_rate)}\n")
        fh.write(f"claimed_rate={_F(report.claimed_rate)}\n")
        fh.write(f"estimated_M={_F(report.estimated_M)}\n")
        fh.write(f"window_lo={_F(report.window[0])}\n")
        fh.write(f"window_hi={_F(report.window[1])}\n")
        fh.write(f"n_samples={report.times.size}\n")
        fh.write(f"min_margin={_F(float(np.min(report.margin_series)))}\n")


_PLOT_SCRIPT = '''\
#!/usr/bin/env python3
"""Render the trajectory CSV produced alongside this script.

Usage: python3 plot_trajectory.py [trajectory.csv [out.png]]
"""
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "trajectory.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "trajectory_from_csv.png"

rows = {}
with open(src) as fh:
    for rec in csv.DictReader(fh):
        rows.setdefault(float(rec["t"]), []).append(
            (float(rec["x"]), float(rec["u"])))

fig, ax = plt.subplots(figsize=(7, 4.5))
times = sorted(rows)
stride = max(1, len(times) // 24)
for t in times[::stride]:
    pts = sorted(rows[t])
    ax.plot([p[0] for p in pts], [p[1] for p in pts], lw=0.9,
            label=f"t={t:g}" if len(times) <= 8 else None)
ax.set_xlabel("x")
ax.set_ylabel("u(x, t)")
ax.set_title(f"{len(times)} snapshots from {src}")
if len(times) <= 8:
    ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=150)
print(f"wrote {dst}")
'''


def emit_plot_script(out_dir: str) -> str:
    """Write a standalone plotting script next to the CSVs; returns its path."""
    path = os.path.join(out_dir, "plot_trajectory.py")
    _ensure_dir(path)
    with open(path, "w") as fh:
        fh.write(_PLOT_SCRIPT)
    return path
