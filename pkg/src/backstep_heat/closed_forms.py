"""Closed-form reference kernels for constant reaction coefficients.

For a(x, t) = mu constant the gain kernel is known exactly in terms of the
modified Bessel function I_1.  With beta = mu + lambda and
z = sqrt(beta (x^2 - y^2)):

    Dirichlet-left family:  k(x, y) = beta * y * I_1(z) / z
    Neumann-left family:    k(x, y) = beta * x * I_1(z) / z

Both reduce to k(x, x) = beta x / 2 on the diagonal.  These expressions serve
as an independent oracle for the series synthesis; they are themselves
validated (in the test suite) by substituting them into the kernel PDE with
high-order finite differences, so neither route leans on the other.

Everything is expressed through the entire function

    phi(w) = I_1(sqrt(w)) / sqrt(w) = (1/2) * sum_m (w/4)^m / (m! (m+1)!),

which continues smoothly through w <= 0 (J_1 branch), so beta < 0 and the
diagonal z -> 0 need no special casing by callers.
"""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = [
    "bessel_ratio",
    "bessel_ratio_deriv",
    "kernel_const_dirichlet",
    "kernel_const_neumann",
    "kernel_const_dirichlet_dx",
    "kernel_const_neumann_dx",
]

# |w| below which the power series replaces the scipy Bessel quotient; the
# series is summed to machine precision there.
_SERIES_CUTOFF = 1e-6


def bessel_ratio(w):
    """phi(w) = I_1(sqrt(w))/sqrt(w), entire in w (J_1 branch for w < 0)."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    pos = w > _SERIES_CUTOFF
    neg = w < -_SERIES_CUTOFF
    mid = ~(pos | neg)
    if np.any(pos):
        z = np.sqrt(w[pos])
        out[pos] = special.iv(1, z) / z
    if np.any(neg):
        z = np.sqrt(-w[neg])
        out[neg] = special.jv(1, z) / z
    if np.any(mid):
        wm = w[mid]
        # first series terms: 1/2 (1 + w/8 + w^2/192)
        out[mid] = 0.5 * (1.0 + wm / 8.0 + wm * wm / 192.0)
    return out if out.ndim else float(out)


def bessel_ratio_deriv(w):
    """phi'(w) = I_2(sqrt(w)) / (2 w) = (1/8) sum_m (w/4)^m / (m! (m+2)!)."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    pos = w > _SERIES_CUTOFF
    neg = w < -_SERIES_CUTOFF
    mid = ~(pos | neg)
    if np.any(pos):
        z = np.sqrt(w[pos])
        out[pos] = special.iv(2, z) / (2.0 * w[pos])
    if np.any(neg):
        z = np.sqrt(-w[neg])
        # phi(w) = J_1(z)/z with z = sqrt(-w); d/dw picks up a sign from z^2 = -w
        out[neg] = special.jv(2, z) / (2.0 * w[neg]) * (-1.0)
    if np.any(mid):
        wm = w[mid]
        out[mid] = (1.0 + wm / 12.0 + wm * wm / 384.0) / 16.0
    return out if out.ndim else float(out)


def kernel_const_dirichlet(x, y, beta: float):
    """Exact gain kernel, Dirichlet-left family, a = const, beta = mu + lambda."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = beta * (x * x - y * y)
    return beta * y * bessel_ratio(w)


def kernel_const_neumann(x, y, beta: float):
    """Exact gain kernel, Neumann-left family, a = const."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = beta * (x * x - y * y)
    return beta * x * bessel_ratio(w)


def kernel_const_dirichlet_dx(x, y, beta: float):
    """d/dx of the Dirichlet-left constant-coefficient kernel."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = beta * (x * x - y * y)
    return beta * y * bessel_ratio_deriv(w) * 2.0 * beta * x


def kernel_const_neumann_dx(x, y, beta: float):
    """d/dx of the Neumann-left constant-coefficient kernel."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = beta * (x * x - y * y)
    return beta * bessel_ratio(w) + beta * x * bessel_ratio_deriv(w) * 2.0 * beta * x
