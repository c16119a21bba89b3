"""Volterra state transform between plant and target coordinates.

Forward:  w(x, t) = u(x, t) + int_0^x k(x, y, t) u(y, t) dy
Inverse:  recovered as a Neumann series u = w - sum_n v_n with
          v_0 = int_0^x k w dy   and   v_n = -int_0^x k v_{n-1} dy,
stopping once sup|v_n| falls below a tolerance.  The iterate norms collapse
factorially (sup|v_n| <= M^{n+1} ||w||_L2 x^n / n! with M = sup|k|), so a few
dozen sweeps always suffice for sane kernels.

States are uniform samplings of [0, 1]; integrals are composite trapezoid on
the sampling nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import KernelSeries

__all__ = [
    "SampledFunction",
    "BacksteppingTransform",
    "InverseConvergenceError",
    "forward",
    "inverse",
]


class InverseConvergenceError(RuntimeError):
    """Inverse-transform series failed to reach tolerance within max_iter."""

    def __init__(self, last_sup: float, max_iter: int):
        self.last_sup = last_sup
        self.max_iter = max_iter
        super().__init__(
            f"inverse transform not converged after {max_iter} iterations; "
            f"last iterate sup-norm {last_sup:.3e}"
        )


@dataclass(frozen=True)
class SampledFunction:
    """A function of x on [0, 1] sampled at nx + 1 uniform nodes."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)  # defensive copy
        if vals.ndim != 1 or vals.size < 3:
            raise ValueError("need a 1-D sampling with at least 3 nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def nx(self) -> int:
        return self.values.size - 1

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.size)

    @classmethod
    def from_callable(cls, fn, nx: int) -> "SampledFunction":
        return cls(np.asarray(fn(np.linspace(0.0, 1.0, nx + 1)), dtype=float))


def _kernel_weight_matrix(ks: KernelSeries, nx: int, t: float) -> np.ndarray:
    """(K * W)[i, j] with K the kernel on the node lattice and W trapezoid
    weights for int_0^{x_i}; row i applies the running integral up to x_i."""
    nodes = np.linspace(0.0, 1.0, nx + 1)
    xg, yg = np.meshgrid(nodes, nodes, indexing="ij")
    mask = yg <= xg + 1e-15
    kmat = np.zeros_like(xg)
    kmat[mask] = ks.eval(xg[mask], np.minimum(yg[mask], xg[mask]), t)
    h = 1.0 / nx
    wmat = np.tril(np.full((nx + 1, nx + 1), h))
    wmat[:, 0] *= 0.5
    ii = np.arange(nx + 1)
    wmat[ii, ii] *= 0.5
    wmat[0, 0] = 0.0
    return kmat * wmat


def forward(ks: KernelSeries, u: SampledFunction, t: float) -> SampledFunction:
    """Push a plant state through the transform: w = u + int_0^x k u dy."""
    kw = _kernel_weight_matrix(ks, u.nx, t)
    return SampledFunction(u.values + kw @ u.values)


def inverse(ks: KernelSeries, w: SampledFunction, t: float,
            tol: float = 1e-12, max_iter: int = 60) -> SampledFunction:
    """Recover the plant state from a target state by the Neumann series.

    Raises InverseConvergenceError (carrying the last iterate sup-norm) if
    max_iter sweeps do not bring sup|v_n| below tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    kw = _kernel_weight_matrix(ks, w.nx, t)
    v = kw @ w.values
    total = v.copy()
    for _ in range(max_iter):
        if np.max(np.abs(v)) <= tol:
            return SampledFunction(w.values - total)
        v = -(kw @ v)
        total += v
    raise InverseConvergenceError(float(np.max(np.abs(v))), max_iter)


@dataclass(frozen=True)
class BacksteppingTransform:
    """A kernel series packaged with its forward/inverse application."""

    ks: KernelSeries

    def forward(self, u: SampledFunction, t: float) -> SampledFunction:
        return forward(self.ks, u, t)

    def inverse(self, w: SampledFunction, t: float,
                tol: float = 1e-12, max_iter: int = 60) -> SampledFunction:
        return inverse(self.ks, w, t, tol=tol, max_iter=max_iter)
