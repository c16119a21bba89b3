"""The constant-coefficient closed forms are this suite's reference answers,
so they get validated on their own terms first: against scipy's Bessel
functions on both real branches, against high-precision mpmath values inside
the small-argument series window, and by direct substitution into the
defining boundary-value problem."""

import mpmath
import numpy as np
import pytest
from scipy.special import iv, jv

from backstep_heat import (bessel_ratio, bessel_ratio_deriv,
                           kernel_const_dirichlet, kernel_const_dirichlet_dx,
                           kernel_const_neumann, kernel_const_neumann_dx)


def _ratio_reference(w: float) -> float:
    s = mpmath.sqrt(abs(w))
    if w == 0:
        return 0.5
    if w > 0:
        return float(mpmath.besseli(1, s) / s)
    return float(mpmath.besselj(1, s) / s)


def test_ratio_positive_branch_matches_scipy():
    w = np.linspace(1e-3, 80.0, 57)
    s = np.sqrt(w)
    np.testing.assert_allclose(bessel_ratio(w), iv(1, s) / s, rtol=1e-13)


def test_ratio_negative_branch_matches_scipy():
    w = np.linspace(-60.0, -1e-3, 57)
    s = np.sqrt(-w)
    np.testing.assert_allclose(bessel_ratio(w), jv(1, s) / s, rtol=1e-12)


@pytest.mark.parametrize("w", [0.0, 1e-12, -1e-12, 3e-7, -3e-7, 9.9e-7])
def test_ratio_series_window_matches_mpmath(w):
    assert bessel_ratio(np.array([w]))[0] == pytest.approx(
        _ratio_reference(w), rel=1e-13, abs=1e-15)


def test_ratio_is_continuous_across_branch_switches():
    for edge in (1e-6, -1e-6):
        lo, hi = bessel_ratio(np.array([edge * 0.999, edge * 1.001]))
        assert lo == pytest.approx(hi, rel=1e-9)


def test_ratio_derivative_matches_central_difference():
    w = np.linspace(-20.0, 40.0, 41)
    h = 1e-5 * np.maximum(1.0, np.abs(w))
    fd = (bessel_ratio(w + h) - bessel_ratio(w - h)) / (2 * h)
    np.testing.assert_allclose(bessel_ratio_deriv(w), fd, rtol=2e-8,
                               atol=1e-12)


# ----------------------------------------------------------------------
# substitution into the defining problem, beta = mu + lam

BETA = 8.0


def _fd_lap(kfun, x, y, h=1e-3):
    """k_xx - k_yy by 5-point central differences."""
    kxx = (kfun(x + h, y, BETA) - 2 * kfun(x, y, BETA)
           + kfun(x - h, y, BETA)) / h**2
    kyy = (kfun(x, y + h, BETA) - 2 * kfun(x, y, BETA)
           + kfun(x, y - h, BETA)) / h**2
    return kxx - kyy


@pytest.mark.parametrize("kfun", [kernel_const_dirichlet,
                                  kernel_const_neumann])
def test_closed_form_satisfies_interior_equation(kfun):
    rng = np.random.default_rng(42)
    x = rng.uniform(0.15, 0.95, 40)
    y = x * rng.uniform(0.1, 0.9, 40)
    resid = _fd_lap(kfun, x, y) - BETA * kfun(x, y, BETA)
    scale = np.max(np.abs(BETA * kfun(x, y, BETA)))
    assert np.max(np.abs(resid)) <= 1e-4 * scale


def test_closed_form_edge_conditions():
    x = np.linspace(0.0, 1.0, 33)
    # vanishing left edge for the first family
    np.testing.assert_allclose(kernel_const_dirichlet(x, 0.0 * x, BETA),
                               0.0, atol=1e-15)
    # reflecting left edge for the second: k_y(x, 0) = 0
    h = 1e-5
    ky = (kernel_const_neumann(x, h + 0 * x, BETA)
          - kernel_const_neumann(x, 0.0 * x, BETA)) / h
    assert np.max(np.abs(ky)) <= 1e-3
    # both families share the ramp along y = x
    for kfun in (kernel_const_dirichlet, kernel_const_neumann):
        np.testing.assert_allclose(kfun(x, x, BETA), BETA * x / 2.0,
                                   rtol=1e-13, atol=1e-14)


@pytest.mark.parametrize("kfun,dxfun", [
    (kernel_const_dirichlet, kernel_const_dirichlet_dx),
    (kernel_const_neumann, kernel_const_neumann_dx),
])
def test_closed_form_x_derivative(kfun, dxfun):
    rng = np.random.default_rng(3)
    x = rng.uniform(0.1, 0.99, 30)
    y = x * rng.uniform(0.0, 0.95, 30)
    h = 1e-6
    fd = (kfun(x + h, y, BETA) - kfun(x - h, y, BETA)) / (2 * h)
    np.testing.assert_allclose(dxfun(x, y, BETA), fd, rtol=5e-8, atol=1e-10)
