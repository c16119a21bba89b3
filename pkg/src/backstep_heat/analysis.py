"""Energy functionals and decay-rate estimation for recorded trajectories.

The controlled plant is supposed to inherit the target dynamics' exponential
decay: L2/H1 norms of u at rate lam, the transformed-state energy
E_w = (1/2) int w^2 at rate 2 lam.  fit_decay measures the realized rate by a
log-linear least-squares fit over a time window that excludes the initial
transient, and reports the slack against the claimed bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .kernel import KernelSeries
from .pde_sim import Trajectory
from .transform import SampledFunction, forward

__all__ = [
    "DecayReport",
    "energy",
    "h1_seminorm_sq",
    "h1_norm",
    "fit_decay",
    "diff_trajectories",
]

_NORMS = ("l2", "h1", "w_energy")
_MIN_FIT_SAMPLES = 10


def _gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Central differences inside, second-order one-sided at the ends."""
    g = np.empty_like(values)
    g[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    g[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    g[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    return g


def energy(f: SampledFunction) -> float:
    """E = (1/2) int_0^1 f^2 dx (composite trapezoid)."""
    return float(0.5 * trapezoid(f.values**2, dx=1.0 / f.nx))


def h1_seminorm_sq(f: SampledFunction) -> float:
    """int_0^1 (f')^2 dx with the finite-difference gradient."""
    h = 1.0 / f.nx
    return float(trapezoid(_gradient(f.values, h) ** 2, dx=h))


def h1_norm(f: SampledFunction) -> float:
    """Full H1 norm sqrt(int f^2 + int (f')^2)."""
    l2sq = float(trapezoid(f.values**2, dx=1.0 / f.nx))
    return float(np.sqrt(l2sq + h1_seminorm_sq(f)))


def _norm_series(traj: Trajectory, norm: str,
                 kernel: Optional[KernelSeries]) -> np.ndarray:
    if norm == "l2":
        return np.array([np.sqrt(2.0 * energy(s)) for s in traj.snapshots])
    if norm == "h1":
        return np.array([h1_norm(s) for s in traj.snapshots])
    if norm == "w_energy":
        if kernel is None:
            raise ValueError("w_energy requires the kernel used for control")
        return np.array([
            energy(forward(kernel, s, float(t)))
            for s, t in zip(traj.snapshots, traj.times)
        ])
    raise ValueError(f"norm must be one of {_NORMS}, got {norm!r}")


@dataclass(frozen=True)
class DecayReport:
    """Outcome of a decay fit.

    fitted_rate is the log-linear slope of the measured series inside the
    window; claimed_rate is lam (norms of u) or 2 lam (w-energy).
    estimated_M is the smallest constant that makes
    value(t) <= M * value(0) * exp(-claimed_rate t) hold over every sample.
    margin_series is the per-sample slack
    value(0) * exp(-claimed_rate t) - value(t): the M = 1 bound, which is the
    natural inequality for the transformed energy and may go negative for
    u-norms (that is what estimated_M absorbs).
    """

    fitted_rate: float
    claimed_rate: float
    estimated_M: float
    margin_series: np.ndarray
    times: np.ndarray
    values: np.ndarray
    norm: str
    window: Tuple[float, float]


def fit_decay(traj: Trajectory, norm: str, lam: float,
              window: Optional[Tuple[float, float]] = None,
              kernel: Optional[KernelSeries] = None) -> DecayReport:
    """Fit an exponential decay rate to a trajectory's norm series.

    The window defaults to (0.2, 0.9) * t_final, which drops the initial
    transient and the tail; it must contain at least 10 snapshots, and every
    windowed value must be positive (a non-positive value makes the log fit
    degenerate and raises).
    """
    times = np.asarray(traj.times, dtype=float)
    values = _norm_series(traj, norm, kernel)
    t_final = times[-1]
    if window is None:
        window = (0.2 * t_final, 0.9 * t_final)
    lo, hi = window
    if not (0.0 <= lo < hi <= t_final + 1e-12):
        raise ValueError(f"window {window} outside trajectory span [0, {t_final:g}]")
    mask = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    if int(np.sum(mask)) < _MIN_FIT_SAMPLES:
        raise ValueError(
            f"only {int(np.sum(mask))} samples in window; need >= {_MIN_FIT_SAMPLES}"
        )
    if np.any(values[mask] <= 0.0):
        raise ValueError("degenerate fit: non-positive norm values in window")
    slope, _ = np.polyfit(times[mask], np.log(values[mask]), 1)
    claimed = 2.0 * lam if norm == "w_energy" else float(lam)
    v0 = values[0]
    if v0 <= 0.0:
        raise ValueError("degenerate fit: initial norm is non-positive")
    bound = v0 * np.exp(-claimed * times)
    with np.errstate(over="ignore"):
        ratios = values * np.exp(claimed * times) / v0
    est_m = float(np.max(ratios))
    return DecayReport(
        fitted_rate=float(-slope),
        claimed_rate=claimed,
        estimated_M=est_m,
        margin_series=bound - values,
        times=times,
        values=values,
        norm=norm,
        window=(float(lo), float(hi)),
    )


def diff_trajectories(a: Trajectory, b: Trajectory) -> Trajectory:
    """Pointwise difference a - b of two runs on matching grids and times."""
    if a.nx != b.nx:
        raise ValueError("trajectories sampled on different grids")
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times,
                                                       rtol=0.0, atol=1e-12):
        raise ValueError("trajectories recorded at different times")
    snaps = [SampledFunction(sa.values - sb.values)
             for sa, sb in zip(a.snapshots, b.snapshots)]
    if a.boundary_inputs.shape == b.boundary_inputs.shape:
        boundary = np.column_stack([
            a.boundary_inputs[:, 0],
            a.boundary_inputs[:, 1] - b.boundary_inputs[:, 1],
        ]) if a.boundary_inputs.size else a.boundary_inputs.copy()
    else:
        raise ValueError("boundary input records have different lengths")
    return Trajectory(snaps, a.times.copy(), boundary,
                      a.diverged or b.diverged,
                      a.t_diverged if a.t_diverged is not None else b.t_diverged)
