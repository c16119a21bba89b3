"""Gain-kernel synthesis by successive approximation.

The control gain k(x, y, t) lives on the triangle 0 <= y <= x <= 1 and solves

    k_xx - k_yy - k_t = (a(y, t) + lam) k,

with either k(x, 0, t) = 0 (Dirichlet-left family) or k_y(x, 0, t) = 0
(Neumann-left family) on the uncontrolled edge, and the diagonal growth law
d/dx k(x, x, t) = (a(x, t) + lam) / 2 in both families.

In the characteristic variables xi = (x + y)/2, eta = (x - y)/2 the problem
becomes G_{xi eta} = (a(xi - eta, t) + lam + d/dt) G on 0 <= eta <= xi <= 1
and integrates into a fixed-point equation solved term by term:

* Dirichlet-left: G_0(xi, eta, t) = (1/2) * int_eta^xi (a(tau, t) + lam) dtau,
  and each successor integrates the source of its predecessor over
  [0, eta] x [eta, xi].
* Neumann-left: the left condition becomes a symmetry condition on the
  xi = eta edge; the update maps H = int_0^eta (a + lam + d/dt) G(xi, s) ds
  to  G_next(xi, eta) = 2 int_0^eta H(s, s) ds + int_eta^xi H(tau, eta) dtau,
  seeded by the coefficient-only part and pinned by G(0, 0, t) = 0.

Because a(x, t) is polynomial in t, every term is stored as a short stack of
triangular node grids, one per t-power; the time derivative in the source is
an exact coefficient shift, and quadrature is composite trapezoid via
cumulative prefix sums (O(grid_m^2) per term and power).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .coefficient import CoefficientPolyT

__all__ = [
    "KernelFamily",
    "KernelTermGrid",
    "KernelSeries",
    "ResidualReport",
    "KernelSynthesisError",
    "KernelValidityWarning",
    "synthesize_dirichlet",
    "synthesize_neumann",
    "verify_residual",
]

_MIN_GRID_M = 8
_DOMAIN_EPS = 1e-12


class KernelFamily(str, enum.Enum):
    """Which homogeneous condition the plant satisfies at x = 0."""

    DIRICHLET_LEFT = "dirichlet"
    NEUMANN_LEFT = "neumann"


class KernelSynthesisError(RuntimeError):
    """Raised when a series term comes out non-finite."""

    def __init__(self, term_index: int, message: str = ""):
        self.term_index = term_index
        super().__init__(message or f"kernel series term {term_index} is not finite")


class KernelValidityWarning(UserWarning):
    """Evaluation requested beyond the series' validity horizon t_valid."""


@dataclass(frozen=True)
class KernelTermGrid:
    """One series term: node values per t-power on the (xi, eta) triangle.

    tpoly_grids has shape (n_powers, grid_m + 1, grid_m + 1); entry [p, i, j]
    is the t^p coefficient at (xi_i, eta_j) = (i h, j h).  Entries above the
    diagonal (j > i) are outside the triangle and held at zero.
    """

    order_n: int
    tpoly_grids: np.ndarray


@dataclass(frozen=True)
class ResidualReport:
    """Max-norm residuals of a synthesized kernel against its defining problem."""

    max_pde_residual: float
    max_bc_residual: float
    max_diagonal_residual: float
    grid_m: int
    fd_step: float
    # PDE residual when the time derivative is dropped from the equation.
    # Populated for the Neumann-left family, where the source text of the
    # kernel problem admits both readings; None otherwise.
    max_pde_residual_no_tderiv: Optional[float] = None


@dataclass
class KernelSeries:
    """Truncated successive-approximation series for the gain kernel.

    The object is immutable in use (synthesis fills it once); the only mutable
    piece is a lazily built evaluation cache.  t_valid is the horizon within
    which the series construction is trusted; evaluation past it proceeds but
    raises KernelValidityWarning.
    """

    terms: List[KernelTermGrid]
    lam: float
    family: KernelFamily
    grid_m: int
    coefficient: CoefficientPolyT
    t_valid: float = 0.9
    _eval_grids: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    # ------------------------------------------------------------------
    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def h(self) -> float:
        return 1.0 / self.grid_m

    def _eval_stack(self) -> np.ndarray:
        """Per-power sums of all terms, reflected across xi = eta for evaluation.

        Odd reflection for the Dirichlet-left family keeps k(x, 0, t) = 0
        exact under bilinear interpolation; even reflection realizes the
        Neumann-left symmetry k_y(x, 0, t) = 0.
        """
        if self._eval_grids is None:
            m1 = self.grid_m + 1
            n_pow = max(t.tpoly_grids.shape[0] for t in self.terms)
            stack = np.zeros((n_pow, m1, m1))
            for term in self.terms:
                p = term.tpoly_grids.shape[0]
                stack[:p] += term.tpoly_grids
            swapped = np.swapaxes(stack, 1, 2)
            if self.family is KernelFamily.DIRICHLET_LEFT:
                full = stack - swapped
            else:
                full = stack + swapped
                ii = np.arange(m1)
                full[:, ii, ii] -= stack[:, ii, ii]
            object.__setattr__(self, "_eval_grids", full)
        return self._eval_grids

    def _interp_powers(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of every t-power grid; shape (n_pow, npts).

        eta slightly below 0 (stencils brushing the y = x edge) extrapolates
        the first cell linearly, which continues the kernel to second order.
        """
        stack = self._eval_stack()
        m = self.grid_m
        gi = xi * m
        gj = eta * m
        i = np.clip(np.floor(gi).astype(np.intp), 0, m - 1)
        j = np.clip(np.floor(gj).astype(np.intp), 0, m - 1)
        u = gi - i
        v = gj - j
        f00 = stack[:, i, j]
        f10 = stack[:, i + 1, j]
        f01 = stack[:, i, j + 1]
        f11 = stack[:, i + 1, j + 1]
        return (f00 * (1 - u) * (1 - v) + f10 * u * (1 - v)
                + f01 * (1 - u) * v + f11 * u * v)

    def _check_t(self, t: float):
        if t < 0:
            raise ValueError(f"t must be >= 0, got {t}")
        if t > self.t_valid:
            warnings.warn(
                f"kernel evaluated at t={t:g} beyond its validity horizon "
                f"t_valid={self.t_valid:g}",
                KernelValidityWarning,
                stacklevel=3,
            )

    def _horner(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        acc = coeffs[-1].copy()
        for p in range(coeffs.shape[0] - 2, -1, -1):
            acc = acc * t + coeffs[p]
        return acc

    def eval(self, x, y, t: float):
        """k(x, y, t) for scalar or array x, y with 0 <= y <= x <= 1."""
        self._check_t(t)
        scalar = np.ndim(x) == 0 and np.ndim(y) == 0
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        x_arr, y_arr = np.broadcast_arrays(x_arr, y_arr)
        if (np.any(y_arr < -_DOMAIN_EPS) or np.any(x_arr > 1.0 + _DOMAIN_EPS)
                or np.any(y_arr > x_arr + _DOMAIN_EPS)):
            raise ValueError("kernel arguments must satisfy 0 <= y <= x <= 1")
        xi = np.clip((x_arr + y_arr) / 2.0, 0.0, 1.0)
        eta = np.clip((x_arr - y_arr) / 2.0, 0.0, 1.0)
        vals = self._horner(self._interp_powers(xi.ravel(), eta.ravel()), t)
        vals = vals.reshape(x_arr.shape)
        return float(vals[0]) if scalar else vals

    def _eval_unchecked(self, x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
        """Evaluation without domain checks; y may exceed x by O(step)."""
        xi = np.clip((x + y) / 2.0, 0.0, 1.0)
        eta = (x - y) / 2.0  # may be slightly negative: linear extrapolation
        return self._horner(self._interp_powers(xi, eta), t)

    def eval_dx(self, x, y, t: float, step: float = 1e-4):
        """d/dx k(x, y, t) by central differences, one-sided at x = 1.

        Central stencils whose lower point crosses the y = x edge are allowed;
        the interpolant continues linearly through that edge (second-order
        consistent continuation), so the formula stays O(step^2) away from the
        (1, 1) corner and degrades gracefully to O(step) in its last cell.
        """
        self._check_t(t)
        scalar = np.ndim(x) == 0 and np.ndim(y) == 0
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        x_arr, y_arr = np.broadcast_arrays(x_arr, y_arr)
        if (np.any(y_arr < -_DOMAIN_EPS) or np.any(x_arr > 1.0 + _DOMAIN_EPS)
                or np.any(y_arr > x_arr + _DOMAIN_EPS)):
            raise ValueError("kernel arguments must satisfy 0 <= y <= x <= 1")
        if step <= 0 or step > 0.25:
            raise ValueError("step must lie in (0, 0.25]")
        xf = x_arr.ravel()
        yf = y_arr.ravel()
        central = xf + step <= 1.0 + _DOMAIN_EPS
        out = np.empty_like(xf)
        if np.any(central):
            xc, yc = xf[central], yf[central]
            kp = self._eval_unchecked(np.minimum(xc + step, 1.0), yc, t)
            km = self._eval_unchecked(xc - step, yc, t)
            out[central] = (kp - km) / (2.0 * step)
        if np.any(~central):
            xo, yo = xf[~central], yf[~central]
            k0 = self._eval_unchecked(xo, yo, t)
            k1 = self._eval_unchecked(xo - step, yo, t)
            k2 = self._eval_unchecked(xo - 2.0 * step, yo, t)
            out[~central] = (3.0 * k0 - 4.0 * k1 + k2) / (2.0 * step)
        out = out.reshape(x_arr.shape)
        return float(out[0]) if scalar else out

    def eval_dt(self, x, y, t: float):
        """d/dt k(x, y, t), exact in t via the stored polynomial coefficients."""
        self._check_t(t)
        scalar = np.ndim(x) == 0 and np.ndim(y) == 0
        x_arr = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        y_arr = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
        x_arr, y_arr = np.broadcast_arrays(x_arr, y_arr)
        xi = np.clip((x_arr + y_arr) / 2.0, 0.0, 1.0)
        eta = np.clip((x_arr - y_arr) / 2.0, 0.0, 1.0)
        powers = self._interp_powers(xi, eta)
        if powers.shape[0] == 1:
            vals = np.zeros_like(x_arr)
        else:
            shifted = powers[1:] * np.arange(1, powers.shape[0])[:, None]
            vals = self._horner(shifted, t)
        return float(vals[0]) if scalar else vals

    def term_sup_norms(self) -> np.ndarray:
        """Sup over triangle nodes of |term_n(xi, eta, t_valid)| for each n."""
        sups = np.empty(self.n_terms)
        for n, term in enumerate(self.terms):
            acc = term.tpoly_grids[-1].copy()
            for p in range(term.tpoly_grids.shape[0] - 2, -1, -1):
                acc = acc * self.t_valid + term.tpoly_grids[p]
            sups[n] = np.max(np.abs(acc))
        return sups


# ----------------------------------------------------------------------
# Synthesis.

def _coefficient_rows(a: CoefficientPolyT, lam: float, grid_m: int) -> np.ndarray:
    """A[p, k] = c_p(x_k) + lam[p == 0] on the synthesis nodes x_k = k h."""
    xs = np.linspace(0.0, 1.0, grid_m + 1)
    rows = a.coeff_values(xs)
    rows[0] = rows[0] + lam
    return rows


def _shifted_coefficient_grids(rows: np.ndarray, tril: np.ndarray) -> np.ndarray:
    """A_p evaluated at x = xi_i - eta_j; shape (d + 1, m + 1, m + 1)."""
    m1 = rows.shape[1]
    idx = np.arange(m1)[:, None] - np.arange(m1)[None, :]
    idx_c = np.clip(idx, 0, m1 - 1)
    return rows[:, idx_c] * tril


def _source_grids(g: np.ndarray, a_diag: np.ndarray, degree_t: int) -> np.ndarray:
    """(a + lam + d/dt) applied to a term's t-power stack.

    Polynomial product against the shifted coefficient plus the exact
    derivative shift; output has degree_t more powers than the input.
    """
    p_in = g.shape[0]
    p_out = p_in + degree_t
    w = np.zeros((p_out,) + g.shape[1:])
    for p in range(p_out):
        for q in range(max(0, p - degree_t), min(p_in, p + 1)):
            w[p] += a_diag[p - q] * g[q]
        if p + 1 < p_in:
            w[p] += (p + 1) * g[p + 1]
    return w


def _validate_synthesis_args(a: CoefficientPolyT, n_terms: int, grid_m: int):
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms}")
    if grid_m < _MIN_GRID_M:
        raise ValueError(f"grid_m must be >= {_MIN_GRID_M}, got {grid_m}")
    if not isinstance(a, CoefficientPolyT):
        raise TypeError("coefficient must be a CoefficientPolyT")


def synthesize_dirichlet(a: CoefficientPolyT, lam: float, n_terms: int,
                         grid_m: int, t_valid: float = 0.9) -> KernelSeries:
    """Synthesize the Dirichlet-left family kernel series.

    Term 0 is the characteristic integral of (a + lam) between eta and xi;
    each successor integrates its predecessor's source over
    [0, eta] x [eta, xi].  All terms vanish identically on xi = eta, which
    realizes k(x, 0, t) = 0 exactly.
    """
    _validate_synthesis_args(a, n_terms, grid_m)
    h = 1.0 / grid_m
    m1 = grid_m + 1
    tril = np.tril(np.ones((m1, m1)))
    rows = _coefficient_rows(a, lam, grid_m)
    a_diag = _shifted_coefficient_grids(rows, tril)
    prefix = cumulative_trapezoid(rows, dx=h, axis=1, initial=0.0)

    # G_0[p, i, j] = (prefix_p(xi_i) - prefix_p(eta_j)) / 2 on the triangle.
    g = 0.5 * (prefix[:, :, None] - prefix[:, None, :]) * tril
    if not np.all(np.isfinite(g)):
        raise KernelSynthesisError(0)
    terms = [KernelTermGrid(0, g)]
    for n in range(1, n_terms):
        w = _source_grids(terms[-1].tpoly_grids, a_diag, a.degree_t)
        inner = cumulative_trapezoid(w, dx=h, axis=2, initial=0.0)
        outer = cumulative_trapezoid(inner, dx=h, axis=1, initial=0.0)
        diag = np.einsum("pii->pi", outer)
        g = (outer - diag[:, None, :]) * tril
        if not np.all(np.isfinite(g)):
            raise KernelSynthesisError(n)
        terms.append(KernelTermGrid(n, g))
    return KernelSeries(terms, float(lam), KernelFamily.DIRICHLET_LEFT,
                        grid_m, a, float(t_valid))


def synthesize_neumann(a: CoefficientPolyT, lam: float, n_terms: int,
                       grid_m: int, t_valid: float = 0.9) -> KernelSeries:
    """Synthesize the Neumann-left family kernel series.

    Seeded by the coefficient-only part G_0 = (P(xi) + P(eta)) / 2 with
    P the prefix integral of (a + lam); successors push their predecessor
    through H(xi, eta) = int_0^eta source ds and
    G_next = 2 int_0^eta H(s, s) ds + int_eta^xi H(tau, eta) dtau.
    The normalization G(0, 0, t) = 0 holds term by term.
    """
    _validate_synthesis_args(a, n_terms, grid_m)
    h = 1.0 / grid_m
    m1 = grid_m + 1
    tril = np.tril(np.ones((m1, m1)))
    rows = _coefficient_rows(a, lam, grid_m)
    a_diag = _shifted_coefficient_grids(rows, tril)
    prefix = cumulative_trapezoid(rows, dx=h, axis=1, initial=0.0)

    g = 0.5 * (prefix[:, :, None] + prefix[:, None, :]) * tril
    if not np.all(np.isfinite(g)):
        raise KernelSynthesisError(0)
    terms = [KernelTermGrid(0, g)]
    for n in range(1, n_terms):
        w = _source_grids(terms[-1].tpoly_grids, a_diag, a.degree_t)
        h_grid = cumulative_trapezoid(w, dx=h, axis=2, initial=0.0)
        diag_h = np.einsum("pii->pi", h_grid)
        twice_diag = 2.0 * cumulative_trapezoid(diag_h, dx=h, axis=1, initial=0.0)
        outer = cumulative_trapezoid(h_grid, dx=h, axis=1, initial=0.0)
        diag_outer = np.einsum("pii->pi", outer)
        g = (twice_diag[:, None, :] + outer - diag_outer[:, None, :]) * tril
        if not np.all(np.isfinite(g)):
            raise KernelSynthesisError(n)
        terms.append(KernelTermGrid(n, g))
    return KernelSeries(terms, float(lam), KernelFamily.NEUMANN_LEFT,
                        grid_m, a, float(t_valid))


# ----------------------------------------------------------------------
# Residual verification.

def verify_residual(ks: KernelSeries, a=None, lam: Optional[float] = None,
                    n_samples: int = 24, fd_step: Optional[float] = None) -> ResidualReport:
    """Substitute the synthesized kernel back into its defining problem.

    Second derivatives in x and y come from central differences with step
    fd_step (default: two grid cells, which refines jointly with the grid);
    the time derivative is exact from the stored t-polynomials.  Sample
    points are a deterministic lattice strictly inside the triangle, at
    times strictly inside (0, t_valid).

    a and lam default to the series' own coefficient and shift; passing
    others measures the mismatch against a different problem (useful for
    fault injection).
    """
    if a is None:
        a = ks.coefficient
    if lam is None:
        lam = ks.lam
    if fd_step is None:
        fd_step = 2.0 / ks.grid_m
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    d = fd_step
    if 4.0 * d >= 1.0:
        raise ValueError(f"fd_step {d:g} too large to stay inside the triangle")

    ts = np.array([0.25, 0.5, 0.75]) * ks.t_valid
    margin = 1e-9

    # --- PDE residual on an interior lattice -------------------------------
    xs = np.linspace(2 * d + margin, 1.0 - d - margin, n_samples)
    max_pde = 0.0
    max_pde_static = 0.0
    for t in ts:
        for x in xs:
            ys = np.linspace(d + margin, x - d - margin, n_samples)
            xv = np.full_like(ys, x)
            k_xx = (ks._eval_unchecked(xv + d, ys, t)
                    - 2.0 * ks._eval_unchecked(xv, ys, t)
                    + ks._eval_unchecked(xv - d, ys, t)) / d**2
            k_yy = (ks._eval_unchecked(xv, ys + d, t)
                    - 2.0 * ks._eval_unchecked(xv, ys, t)
                    + ks._eval_unchecked(xv, ys - d, t)) / d**2
            k_t = ks.eval_dt(xv, ys, t)
            rhs = (np.asarray(a.eval(ys, t)) + lam) * ks.eval(xv, ys, t)
            res = k_xx - k_yy - k_t - rhs
            res_static = k_xx - k_yy - rhs
            max_pde = max(max_pde, float(np.max(np.abs(res))))
            max_pde_static = max(max_pde_static, float(np.max(np.abs(res_static))))

    # --- uncontrolled-edge residual at y = 0 --------------------------------
    xb = np.linspace(2 * d + margin, 1.0 - margin, n_samples)
    max_bc = 0.0
    for t in ts:
        if ks.family is KernelFamily.DIRICHLET_LEFT:
            vals = ks.eval(xb, np.zeros_like(xb), t)
            max_bc = max(max_bc, float(np.max(np.abs(vals))))
        else:
            k0 = ks.eval(xb, np.zeros_like(xb), t)
            k1 = ks.eval(xb, np.full_like(xb, d), t)
            k2 = ks.eval(xb, np.full_like(xb, 2 * d), t)
            k_y0 = (-3.0 * k0 + 4.0 * k1 - k2) / (2.0 * d)
            max_bc = max(max_bc, float(np.max(np.abs(k_y0))))

    # --- diagonal growth law -------------------------------------------------
    xd = np.linspace(d + margin, 1.0 - d - margin, n_samples)
    max_diag = 0.0
    for t in ts:
        kp = ks.eval(xd + d, xd + d, t)
        km = ks.eval(xd - d, xd - d, t)
        lhs = 2.0 * (kp - km) / (2.0 * d)
        rhs = np.asarray(a.eval(xd, t)) + lam
        max_diag = max(max_diag, float(np.max(np.abs(lhs - rhs))))

    no_dt = max_pde_static if ks.family is KernelFamily.NEUMANN_LEFT else None
    return ResidualReport(max_pde, max_bc, max_diag, ks.grid_m, d, no_dt)
