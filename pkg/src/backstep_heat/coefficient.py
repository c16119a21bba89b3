"""Reaction coefficients a(x, t) that are polynomial in time.

The plant is u_t = u_xx + a(x, t) u on the unit interval.  Everything in this
package manipulates the coefficient through the representation

    a(x, t) = sum_j c_j(x) * t**j,        0 <= j <= degree_t,

which keeps the time derivative exact (a coefficient shift) during kernel
synthesis.  The spatial factors c_j are arbitrary callables on [0, 1]; the
factory functions at the bottom build the families understood by the CLI
config format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "CoefficientPolyT",
    "zero_coefficient",
    "constant_coefficient",
    "x_linear_t_coefficient",
    "coefficient_from_params",
]

# Construction-time finiteness screen: each spatial factor is probed on this
# many uniform points.  Full-resolution checks happen in dominant_constant.
_CONSTRUCTION_PROBE = 33


def _as_grid_values(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Evaluate a spatial factor on an array, tolerating scalar-only callables."""
    out = np.asarray(fn(x), dtype=float)
    if out.shape != x.shape:
        out = np.broadcast_to(out, x.shape).astype(float)
    return out


@dataclass(frozen=True)
class CoefficientPolyT:
    """Reaction coefficient a(x, t) = sum_j c_j(x) t**j on x in [0, 1].

    Parameters
    ----------
    degree_t : int
        Polynomial degree in t (>= 0).
    coeff_fns : sequence of callables
        Spatial factors c_0 .. c_degree_t; each maps [0, 1] arrays to values.
    label : str
        Human-readable tag used in reports and CSV metadata.
    """

    degree_t: int
    coeff_fns: Sequence[Callable[[np.ndarray], np.ndarray]] = field(repr=False)
    label: str = ""

    def __post_init__(self):
        if self.degree_t < 0:
            raise ValueError(f"degree_t must be >= 0, got {self.degree_t}")
        if len(self.coeff_fns) != self.degree_t + 1:
            raise ValueError(
                f"need {self.degree_t + 1} spatial factors, got {len(self.coeff_fns)}"
            )
        probe = np.linspace(0.0, 1.0, _CONSTRUCTION_PROBE)
        for j, fn in enumerate(self.coeff_fns):
            vals = _as_grid_values(fn, probe)
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"spatial factor c_{j} is not finite on [0, 1]")

    # ------------------------------------------------------------------
    def coeff_values(self, x: np.ndarray) -> np.ndarray:
        """Stack c_j(x) for all powers; shape (degree_t + 1, len(x))."""
        x = np.asarray(x, dtype=float)
        return np.stack([_as_grid_values(fn, x) for fn in self.coeff_fns])

    def eval(self, x, t: float):
        """Evaluate a(x, t) by Horner recursion over the t-powers.

        x may be a scalar or an ndarray; every entry must lie in [0, 1].
        """
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x_arr < 0.0) or np.any(x_arr > 1.0):
            raise ValueError("x outside the domain [0, 1]")
        cs = self.coeff_values(x_arr)
        acc = cs[-1].copy()
        for j in range(self.degree_t - 1, -1, -1):
            acc = acc * t + cs[j]
        return float(acc[0]) if np.isscalar(x) or np.ndim(x) == 0 else acc

    def dominant_constant(self, lam: float, n_samples: int = 1001) -> float:
        """Sampled sup-norm constant C = max(sup|c_0 + lam|, max_j sup|c_j|).

        C majorizes |a(x, t) + lam| by C / (1 - t) on 0 <= t < 1, which is the
        growth scale the kernel series inherits.  Sampling is on n_samples
        uniform points (>= 2 required).
        """
        if n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        xs = np.linspace(0.0, 1.0, n_samples)
        cs = self.coeff_values(xs)
        if not np.all(np.isfinite(cs)):
            raise ValueError("coefficient is not finite on [0, 1]")
        sups = np.max(np.abs(cs), axis=1)
        sups[0] = np.max(np.abs(cs[0] + lam))
        return float(np.max(sups))


# ----------------------------------------------------------------------
# Named families for the CLI config format.

def zero_coefficient() -> CoefficientPolyT:
    """a(x, t) = 0."""
    return CoefficientPolyT(0, [lambda x: np.zeros_like(x)], label="zero")


def constant_coefficient(mu: float) -> CoefficientPolyT:
    """a(x, t) = mu (space- and time-independent)."""
    return CoefficientPolyT(0, [lambda x, _m=float(mu): np.full_like(x, _m)],
                            label=f"constant(mu={mu:g})")


def x_linear_t_coefficient(b: float, c: float) -> CoefficientPolyT:
    """a(x, t) = x * (b t + c): linear ramp in both space and time."""
    b = float(b)
    c = float(c)
    return CoefficientPolyT(
        1,
        [lambda x, _c=c: _c * x, lambda x, _b=b: _b * x],
        label=f"x_linear_t(b={b:g}, c={c:g})",
    )


def coefficient_from_params(family: str, params: dict) -> CoefficientPolyT:
    """Build a coefficient from the flat (family, numeric params) config form."""
    family = family.strip().lower()
    if family == "zero":
        return zero_coefficient()
    if family == "constant":
        return constant_coefficient(float(params["mu"]))
    if family == "x_linear_t":
        return x_linear_t_coefficient(float(params["b"]), float(params["c"]))
    raise ValueError(f"unknown coefficient family {family!r}")
