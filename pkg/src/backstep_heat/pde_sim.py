"""Explicit finite-difference simulation of the controlled plant.

The plant u_t = u_xx + a(x, t) u is stepped with the classical explicit
scheme on nx + 1 uniform nodes:

    u_i <- u_i + r (u_{i+1} - 2 u_i + u_{i-1}) + dt a(x_i, t) u_i,
    r = dt * nx^2,

with boundary closures chosen by the uncontrolled-edge condition and the
actuation mode at x = 1:

* left Dirichlet zero: u_0 = 0; left Neumann zero: u_0 = (4 u_1 - u_2) / 3.
* no actuation: the right end mirrors the left condition (homogeneous).
* Dirichlet feedback: u_N = -int_0^1 k(1, y, t) u(y, t) dy.
* Neumann feedback: the flux g = -k(1,1,t) u(1,t) - int_0^1 k_x(1,y,t) u dy
  is realized through the one-sided second-order difference
  (3 u_N - 4 u_{N-1} + u_{N-2}) / (2h) = g, solved for u_N.

Feedback always reads the pre-step state (fully explicit coupling).  Blowing
up is not an error: once sup|u| passes the divergence threshold (or goes
non-finite) the run stops early and the trajectory carries a flag.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import trapezoid

from .coefficient import CoefficientPolyT
from .kernel import KernelFamily, KernelSeries
from .transform import SampledFunction

__all__ = [
    "LeftBC",
    "Actuation",
    "SimConfig",
    "Trajectory",
    "step",
    "run",
    "apply_dirichlet_feedback",
    "apply_neumann_feedback",
    "check_compatibility",
    "compatibilize",
]

DIVERGENCE_THRESHOLD = 1e12
_KX_STEP = 1e-4


class LeftBC(str, enum.Enum):
    DIRICHLET_ZERO = "dirichlet"
    NEUMANN_ZERO = "neumann"


class Actuation(str, enum.Enum):
    NONE = "none"
    DIRICHLET_FEEDBACK = "dirichlet"
    NEUMANN_FEEDBACK = "neumann"


_FAMILY_FOR_LEFT_BC = {
    LeftBC.DIRICHLET_ZERO: KernelFamily.DIRICHLET_LEFT,
    LeftBC.NEUMANN_ZERO: KernelFamily.NEUMANN_LEFT,
}


@dataclass
class SimConfig:
    """Everything one run needs.  Treat as immutable once constructed.

    The stability invariant dt * nx^2 <= 0.5 * safety is enforced at
    construction; safety < 1 keeps the explicit scheme away from its
    marginal ratio r = 1/2.
    """

    nx: int
    dt: float
    t_end: float
    coefficient: CoefficientPolyT
    initial: SampledFunction
    left_bc: LeftBC = LeftBC.DIRICHLET_ZERO
    actuation: Actuation = Actuation.NONE
    lam: float = 0.0
    kernel: Optional[KernelSeries] = None
    snapshot_stride: int = 1
    safety: float = 0.9
    divergence_threshold: float = DIVERGENCE_THRESHOLD
    _ctx: Optional["_StepContext"] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.nx < 2:
            raise ValueError("nx must be >= 2")
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("dt must be positive and t_end non-negative")
        if self.dt * self.nx**2 > 0.5 * self.safety + 1e-12:
            raise ValueError(
                f"explicit scheme unstable: dt*nx^2 = {self.dt * self.nx**2:.4g} "
                f"exceeds 0.5*safety = {0.5 * self.safety:.4g}"
            )
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        if self.initial.nx != self.nx:
            raise ValueError(
                f"initial state has nx={self.initial.nx}, config says {self.nx}"
            )
        if self.actuation is not Actuation.NONE:
            if self.kernel is None:
                raise ValueError("feedback actuation requires a kernel")
            want = _FAMILY_FOR_LEFT_BC[self.left_bc]
            if self.kernel.family is not want:
                raise ValueError(
                    f"kernel family {self.kernel.family.value!r} does not match "
                    f"left boundary condition {self.left_bc.value!r}"
                )

    def context(self) -> "_StepContext":
        if self._ctx is None:
            self._ctx = _StepContext(self)
        return self._ctx


@dataclass
class Trajectory:
    """Recorded run: strided state snapshots plus every boundary input.

    boundary_inputs has one row (t, control value) per time step; the value
    is the Dirichlet boundary value or Neumann flux imposed at that time
    (0 when uncontrolled).  diverged marks an early stop, with t_diverged
    the time at which the threshold was crossed.
    """

    snapshots: List[SampledFunction]
    times: np.ndarray
    boundary_inputs: np.ndarray
    diverged: bool = False
    t_diverged: Optional[float] = None

    def __post_init__(self):
        if len(self.snapshots) != len(self.times):
            raise ValueError("snapshots and times must align")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def nx(self) -> int:
        return self.snapshots[0].nx

    def snapshot_at(self, t: float) -> SampledFunction:
        """Snapshot closest to time t (must match within half a stride)."""
        i = int(np.argmin(np.abs(self.times - t)))
        return self.snapshots[i]


class _StepContext:
    """Per-run precomputation: coefficient columns and boundary gain rows.

    The kernel's t-dependence is polynomial, so the boundary gains
    k(1, y_j, .), k_x(1, y_j, .) and k(1, 1, .) are cached as per-power rows
    and collapsed by Horner at each step.
    """

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        nx = cfg.nx
        self.h = 1.0 / nx
        self.r = cfg.dt / self.h**2
        nodes = np.linspace(0.0, 1.0, nx + 1)
        self.nodes = nodes
        self.coeff_cols = cfg.coefficient.coeff_values(nodes)
        # trapezoid weights on the full interval
        self.trap_w = np.full(nx + 1, self.h)
        self.trap_w[0] *= 0.5
        self.trap_w[-1] *= 0.5
        self.k_rows = None
        self.kx_rows = None
        self.k11_coeffs = None
        ks = cfg.kernel
        if cfg.actuation is Actuation.DIRICHLET_FEEDBACK:
            xi = (1.0 + nodes) / 2.0
            eta = (1.0 - nodes) / 2.0
            self.k_rows = ks._interp_powers(xi, eta)
        elif cfg.actuation is Actuation.NEUMANN_FEEDBACK:
            d = _KX_STEP
            rows = []
            for xv in (1.0, 1.0 - d, 1.0 - 2.0 * d):
                x_arr = np.full_like(nodes, xv)
                xi = np.clip((x_arr + nodes) / 2.0, 0.0, 1.0)
                eta = (x_arr - nodes) / 2.0
                rows.append(ks._interp_powers(xi, eta))
            self.kx_rows = (3.0 * rows[0] - 4.0 * rows[1] + rows[2]) / (2.0 * d)
            self.k11_coeffs = ks._interp_powers(np.array([1.0]), np.array([0.0]))[:, 0]
            self.k_rows = rows[0]  # k(1, y, .) powers, for u(1) weighting

    @staticmethod
    def _horner_rows(rows: np.ndarray, t: float) -> np.ndarray:
        acc = rows[-1].copy()
        for p in range(rows.shape[0] - 2, -1, -1):
            acc = acc * t + rows[p]
        return acc

    def reaction(self, t: float) -> np.ndarray:
        return self._horner_rows(self.coeff_cols, t)

    def control_value(self, u: np.ndarray, t: float) -> float:
        """Boundary input computed from the (pre-step) state at time t."""
        cfg = self.cfg
        if cfg.actuation is Actuation.DIRICHLET_FEEDBACK:
            gain = self._horner_rows(self.k_rows, t)
            return float(-(gain * u) @ self.trap_w)
        if cfg.actuation is Actuation.NEUMANN_FEEDBACK:
            gain_x = self._horner_rows(self.kx_rows, t)
            k11 = self._horner_rows(self.k11_coeffs[:, None], t)[0]
            return float(-k11 * u[-1] - (gain_x * u) @ self.trap_w)
        return 0.0

    def advance(self, u: np.ndarray, t: float) -> tuple:
        """One explicit step from time t; returns (new state, control value)."""
        cfg = self.cfg
        control = self.control_value(u, t)
        new = u.copy()
        new[1:-1] = (u[1:-1]
                     + self.r * (u[2:] - 2.0 * u[1:-1] + u[:-2])
                     + cfg.dt * self.reaction(t)[1:-1] * u[1:-1])
        # left closure
        if cfg.left_bc is LeftBC.DIRICHLET_ZERO:
            new[0] = 0.0
        else:
            new[0] = (4.0 * new[1] - new[2]) / 3.0
        # right closure
        if cfg.actuation is Actuation.DIRICHLET_FEEDBACK:
            new[-1] = control
        elif cfg.actuation is Actuation.NEUMANN_FEEDBACK:
            new[-1] = (4.0 * new[-2] - new[-3] + 2.0 * self.h * control) / 3.0
        elif cfg.left_bc is LeftBC.DIRICHLET_ZERO:
            new[-1] = 0.0
        else:
            new[-1] = (4.0 * new[-2] - new[-3]) / 3.0
        return new, control


def step(state: SampledFunction, t: float, cfg: SimConfig) -> SampledFunction:
    """Advance one dt from time t.  Interior first, then boundary closures;
    feedback reads the pre-step state."""
    new, _ = cfg.context().advance(state.values, t)
    return SampledFunction(new)


def run(cfg: SimConfig) -> Trajectory:
    """March the scheme to t_end, recording every snapshot_stride-th state
    and all boundary inputs; stops early (flagged, not raised) on divergence."""
    ctx = cfg.context()
    n_steps = int(round(cfg.t_end / cfg.dt))
    u = cfg.initial.values.copy()
    snapshots = [SampledFunction(u.copy())]
    times = [0.0]
    boundary = np.zeros((n_steps, 2))
    diverged = False
    t_diverged = None
    k_done = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            t = k * cfg.dt
            u, control = ctx.advance(u, t)
            t_next = (k + 1) * cfg.dt
            boundary[k] = (t_next, control)
            k_done = k + 1
            finite = bool(np.all(np.isfinite(u)))
            sup = float(np.max(np.abs(u))) if finite else np.inf
            if not finite or sup > cfg.divergence_threshold:
                diverged = True
                t_diverged = t_next
                if finite:
                    snapshots.append(SampledFunction(u.copy()))
                    times.append(t_next)
                break
            if (k + 1) % cfg.snapshot_stride == 0 or k + 1 == n_steps:
                snapshots.append(SampledFunction(u.copy()))
                times.append(t_next)
    return Trajectory(snapshots, np.asarray(times), boundary[:k_done],
                      diverged, t_diverged)


# ----------------------------------------------------------------------
# Feedback laws as standalone calculators (the stepper assigns the result).

def apply_dirichlet_feedback(state: SampledFunction, t: float,
                             ks: KernelSeries) -> float:
    """Boundary value the Dirichlet controller imposes at the right end."""
    y = state.x
    gain = ks.eval(np.ones_like(y), y, t)
    return float(-trapezoid(gain * state.values, dx=1.0 / state.nx))


def apply_neumann_feedback(state: SampledFunction, t: float,
                           ks: KernelSeries) -> float:
    """Boundary flux the Neumann controller imposes at the right end."""
    y = state.x
    gain_x = ks.eval_dx(np.ones_like(y), y, t, step=_KX_STEP)
    k11 = ks.eval(1.0, 1.0, t)
    return float(-k11 * state.values[-1]
                 - trapezoid(gain_x * state.values, dx=1.0 / state.nx))


def _feedback_residual(u0: SampledFunction, ks: KernelSeries,
                       actuation: Actuation) -> float:
    if actuation is Actuation.DIRICHLET_FEEDBACK:
        return u0.values[-1] - apply_dirichlet_feedback(u0, 0.0, ks)
    if actuation is Actuation.NEUMANN_FEEDBACK:
        h = 1.0 / u0.nx
        v = u0.values
        du_right = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
        return du_right - apply_neumann_feedback(u0, 0.0, ks)
    return 0.0


def check_compatibility(u0: SampledFunction, ks: Optional[KernelSeries],
                        actuation: Actuation) -> float:
    """|feedback-law residual of the initial state at t = 0|.

    A nonzero margin means the initial data does not satisfy the control law;
    the simulation proceeds regardless (the first step enforces it), but the
    value belongs in run reports.
    """
    if actuation is Actuation.NONE or ks is None:
        return 0.0
    return float(abs(_feedback_residual(u0, ks, actuation)))


def compatibilize(u0: SampledFunction, ks: KernelSeries,
                  actuation: Actuation) -> SampledFunction:
    """Project the initial state onto the feedback law by overwriting the
    right-end node (Dirichlet feedback only; other modes returned unchanged)."""
    if actuation is not Actuation.DIRICHLET_FEEDBACK:
        return u0
    vals = u0.values.copy()
    vals[-1] = 0.0
    # the law couples to the end node itself through the trapezoid end weight;
    # solve u_N = -(s + (h/2) k(1,1,0) u_N) for u_N exactly
    s = -apply_dirichlet_feedback(SampledFunction(vals), 0.0, ks)
    k11 = ks.eval(1.0, 1.0, 0.0)
    denom = 1.0 + 0.5 * k11 / u0.nx
    if abs(denom) < 1e-12:
        raise ValueError("feedback projection singular at the end node")
    vals[-1] = -s / denom
    return SampledFunction(vals)