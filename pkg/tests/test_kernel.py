"""Kernel synthesis against three independent oracles.

1. Constant coefficient: every series term has a hand-derived closed form,
   and the summed series has a Bessel-function limit.
2. Time-varying coefficient: the recursion is replayed in exact rational
   arithmetic with sympy and compared term by term, t-power by t-power.
3. The assembled series is pushed back through the defining equations by
   finite differences (verify_residual) under grid refinement.
"""

import math

import numpy as np
import pytest
import sympy as sp

from backstep_heat import (CoefficientPolyT, KernelFamily,
                           KernelSynthesisError, KernelValidityWarning,
                           constant_coefficient, kernel_const_dirichlet,
                           kernel_const_dirichlet_dx, kernel_const_neumann,
                           synthesize_dirichlet, synthesize_neumann,
                           verify_residual, x_linear_t_coefficient)
from conftest import BETA_CONST

# ----------------------------------------------------------------------
# constant coefficient: per-term closed form  beta*(xi -+ eta)/2 * q^n/(n!(n+1)!)
# with q = beta*xi*eta; '-' for the vanishing-edge family, '+' for the
# reflecting-edge family.


def _const_term_exact(n, xi, eta, beta, sign):
    q = beta * xi * eta
    lead = beta * (xi + sign * eta) / 2.0
    return lead * q**n / (math.factorial(n) * math.factorial(n + 1))


@pytest.mark.parametrize("family,sign", [("dirichlet", -1.0),
                                         ("neumann", +1.0)])
def test_each_const_term_matches_hand_formula(family, sign, const_kernel_d,
                                              const_kernel_n):
    ks = const_kernel_d if family == "dirichlet" else const_kernel_n
    m1 = ks.grid_m + 1
    nodes = np.linspace(0.0, 1.0, m1)
    xi, eta = np.meshgrid(nodes, nodes, indexing="ij")
    tril = eta <= xi
    exact = [_const_term_exact(t.order_n, xi[tril], eta[tril], BETA_CONST,
                               sign) for t in ks.terms]
    lead_scale = max(np.max(np.abs(e)) for e in exact)
    for term, want in zip(ks.terms, exact):
        assert term.tpoly_grids.shape[0] == 1  # no t dependence
        err = np.max(np.abs(term.tpoly_grids[0][tril] - want))
        if term.order_n == 0 or (term.order_n == 1 and sign < 0):
            # integrands stay at most bilinear on these paths: the
            # trapezoid rule reproduces them exactly
            assert err <= 1e-13 * lead_scale
        else:
            # deep terms inherit the quadrature error of the dominant ones,
            # so the floor scales with the series lead, not the tiny tail
            own = max(np.max(np.abs(want)), 1e-30)
            assert err <= max(5e-3 * own, 1e-4 * lead_scale), \
                f"term {term.order_n} deviates from the closed form"


def test_const_series_sums_to_bessel_form(const_kernel_d, const_kernel_n):
    pts = np.linspace(0.0, 1.0, 41)
    x, y = np.meshgrid(pts, pts, indexing="ij")
    keep = y <= x
    x, y = x[keep], y[keep]
    exact_d = kernel_const_dirichlet(x, y, BETA_CONST)
    exact_n = kernel_const_neumann(x, y, BETA_CONST)
    err_d = np.max(np.abs(const_kernel_d.eval(x, y, 0.0) - exact_d))
    err_n = np.max(np.abs(const_kernel_n.eval(x, y, 0.0) - exact_n))
    assert err_d <= 1e-3 * np.max(np.abs(exact_d))
    assert err_n <= 1e-3 * np.max(np.abs(exact_n))


def test_truncation_tail_is_factorially_small(const_kernel_d, tv_kernel_d,
                                              tv_kernel_n):
    for ks in (const_kernel_d, tv_kernel_d, tv_kernel_n):
        sups = ks.term_sup_norms()
        assert sups[-1] < 1e-2 * max(sups[0], 1e-30)


# ----------------------------------------------------------------------
# time-varying coefficient: exact symbolic replay of the recursion


def _symbolic_terms(family: str, b, c, lam, n_terms: int):
    xi, eta, t = sp.symbols("xi eta t")
    tau, s = sp.symbols("tau s")

    def f(arg):
        return arg * (b * t + c) + lam

    if family == "dirichlet":
        terms = [sp.Rational(1, 2) * sp.integrate(f(tau), (tau, eta, xi))]
        for _ in range(n_terms - 1):
            g = terms[-1].subs({xi: tau, eta: s})
            integrand = f(tau - s) * g + sp.diff(g, t)
            inner = sp.integrate(integrand, (s, 0, eta))
            terms.append(sp.expand(sp.integrate(inner, (tau, eta, xi))))
    else:
        prefix = sp.integrate(f(tau), (tau, 0, xi))
        terms = [(prefix + prefix.subs(xi, eta)) / 2]
        for _ in range(n_terms - 1):
            g = terms[-1].subs(eta, s)
            integrand = f(xi - s) * g + sp.diff(g, t)
            h_fn = sp.integrate(integrand, (s, 0, eta))
            diag = 2 * sp.integrate(h_fn.subs({xi: s, eta: s}), (s, 0, eta))
            sweep = sp.integrate(h_fn.subs(xi, tau), (tau, eta, xi))
            terms.append(sp.expand(diag + sweep))
    return (xi, eta, t), terms


def _tpower_grids(expr, syms, grid_m: int):
    """Evaluate each t-power coefficient of expr on the triangle lattice."""
    xi, eta, t = syms
    nodes = np.linspace(0.0, 1.0, grid_m + 1)
    xg, yg = np.meshgrid(nodes, nodes, indexing="ij")
    tril = yg <= xg
    coeffs = sp.Poly(expr, t).all_coeffs()[::-1]  # ascending powers
    out = []
    for cexpr in coeffs:
        fn = sp.lambdify((xi, eta), cexpr, "numpy")
        grid = np.zeros_like(xg)
        grid[tril] = np.broadcast_to(fn(xg[tril], yg[tril]),
                                     grid[tril].shape)
        out.append(grid)
    return np.array(out)


@pytest.mark.parametrize("family", ["dirichlet", "neumann"])
def test_series_terms_match_exact_symbolic_recursion(family):
    b, c, lam = sp.Rational(1, 5), sp.Rational(1, 2), 2
    n_terms = 4
    _, sym_terms = _symbolic_terms(family, b, c, lam, n_terms)
    a = x_linear_t_coefficient(0.2, 0.5)
    synth = synthesize_dirichlet if family == "dirichlet" else synthesize_neumann

    errs = {}
    for grid_m in (64, 128):
        ks = synth(a, 2.0, n_terms, grid_m)
        worst = np.zeros(n_terms)
        for n, (term, expr) in enumerate(zip(ks.terms, sym_terms)):
            syms = sp.symbols("xi eta t")
            exact = _tpower_grids(expr, syms, grid_m)
            assert term.tpoly_grids.shape == exact.shape, \
                f"term {n}: t-degree disagrees with the exact recursion"
            scale = max(np.max(np.abs(exact)), 1e-30)
            worst[n] = np.max(np.abs(term.tpoly_grids - exact)) / scale
        errs[grid_m] = worst

    # the quadrature converges to the exact recursion at second order
    assert np.max(errs[128]) <= 2e-3
    for n in range(n_terms):
        if errs[128][n] > 1e-12:
            assert errs[64][n] / errs[128][n] >= 2.8, \
                f"term {n} error does not shrink like a quadrature error"


def test_tpower_count_grows_linearly_with_term_order(tv_kernel_d, tv_kernel_n):
    # degree-1 time dependence: term n carries powers t^0 .. t^(n+1)
    for ks in (tv_kernel_d, tv_kernel_n):
        counts = [t.tpoly_grids.shape[0] for t in ks.terms]
        assert counts == [n + 2 for n in range(len(ks.terms))]


def test_all_terms_nonnegative_for_nonnegative_data(tv_kernel_d, tv_kernel_n):
    for ks in (tv_kernel_d, tv_kernel_n):
        worst = min(float(t.tpoly_grids.min()) for t in ks.terms)
        assert worst >= 0.0


# ----------------------------------------------------------------------
# diagonal and edge behavior of the assembled series


def test_diagonal_ramp_is_exact_at_lattice_points():
    b, c, lam = 200.0, 5.0, 10.0
    ks = synthesize_dirichlet(x_linear_t_coefficient(b, c), lam, 3, 100)
    for t in (0.0, 0.45, 0.9):
        for x in (0.5, 1.0):
            want = 0.5 * ((b * t + c) * x**2 / 2.0 + lam * x)
            got = float(ks.eval(x, x, t))
            assert got == pytest.approx(want, rel=1e-12), (t, x)


def test_vanishing_left_edge_is_exact(tv_kernel_d):
    x = np.linspace(0.0, 1.0, 23)
    vals = tv_kernel_d.eval(x, np.zeros_like(x), 0.4)
    np.testing.assert_allclose(vals, 0.0, atol=1e-15)


def test_reflecting_left_edge_has_flat_slope(tv_kernel_n):
    ks = tv_kernel_n
    d = 2.0 / ks.grid_m  # stride-aligned step
    x = np.linspace(0.3, 1.0, 15)
    k0 = ks.eval(x, np.zeros_like(x), 0.4)
    k1 = ks.eval(x, np.full_like(x, d), 0.4)
    k2 = ks.eval(x, np.full_like(x, 2 * d), 0.4)
    ky = (-3 * k0 + 4 * k1 - k2) / (2 * d)
    scale = np.max(np.abs(k0))
    assert np.max(np.abs(ky)) <= 5e-3 * max(scale, 1.0)


def test_residual_shrinks_under_grid_refinement():
    a = x_linear_t_coefficient(0.2, 0.5)
    r48 = verify_residual(synthesize_dirichlet(a, 2.0, 5, 48))
    r96 = verify_residual(synthesize_dirichlet(a, 2.0, 5, 96))
    assert r96.max_pde_residual < r48.max_pde_residual
    assert r48.max_pde_residual / r96.max_pde_residual >= 2.5
    assert r96.max_bc_residual <= 1e-12
    assert r96.max_diagonal_residual <= 1e-10


def test_reflecting_family_residual_reports_both_time_readings(tv_kernel_n):
    rep = verify_residual(tv_kernel_n)
    assert rep.max_pde_residual_no_tderiv is not None
    # dropping the time-derivative from the balance must hurt, not help
    assert rep.max_pde_residual_no_tderiv > rep.max_pde_residual


# ----------------------------------------------------------------------
# evaluation semantics


def test_eval_derivatives_match_finite_differences(tv_kernel_d):
    ks = tv_kernel_d
    x, y, t = 0.7, 0.3, 0.4
    dt = 1e-4
    fd_t = (ks.eval(x, y, t + dt) - ks.eval(x, y, t - dt)) / (2 * dt)
    assert float(ks.eval_dt(x, y, t)) == pytest.approx(float(fd_t), rel=1e-6)


def test_eval_dx_tracks_const_closed_form(const_kernel_d):
    y = np.linspace(0.0, 0.95, 20)
    got = const_kernel_d.eval_dx(np.ones_like(y), y, 0.0)
    want = kernel_const_dirichlet_dx(np.ones_like(y), y, BETA_CONST)
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got - want)) <= 2e-2 * scale


def test_eval_rejects_points_off_the_triangle(tv_kernel_d):
    with pytest.raises(ValueError):
        tv_kernel_d.eval(0.3, 0.5, 0.1)  # y > x
    with pytest.raises(ValueError):
        tv_kernel_d.eval(1.2, 0.1, 0.1)
    with pytest.raises(ValueError):
        tv_kernel_d.eval(0.5, 0.1, -0.2)  # negative time


def test_eval_warns_past_validity_horizon():
    a = x_linear_t_coefficient(0.2, 0.5)
    ks = synthesize_dirichlet(a, 2.0, 3, 32, t_valid=0.5)
    with pytest.warns(KernelValidityWarning):
        ks.eval(0.6, 0.2, 0.75)
    # inside the horizon: silence
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("error", KernelValidityWarning)
        ks.eval(0.6, 0.2, 0.4)


def test_eval_accepts_scalars_and_arrays(tv_kernel_d):
    scalar = tv_kernel_d.eval(0.8, 0.2, 0.3)
    arr = tv_kernel_d.eval(np.array([0.8, 0.9]), np.array([0.2, 0.1]), 0.3)
    assert np.shape(scalar) == ()
    assert arr.shape == (2,)
    assert float(arr[0]) == pytest.approx(float(scalar))


# ----------------------------------------------------------------------
# failure modes


def test_synthesis_rejects_bad_sizes():
    a = constant_coefficient(1.0)
    with pytest.raises(ValueError):
        synthesize_dirichlet(a, 1.0, 3, 7)  # grid too coarse
    with pytest.raises(ValueError):
        synthesize_dirichlet(a, 1.0, 0, 32)  # no terms


def test_synthesis_flags_non_finite_terms():
    # finite on the construction probe lattice, singular on the synthesis grid
    pole = 1.0 / 64.0
    bad = CoefficientPolyT(
        degree_t=0,
        coeff_fns=[lambda x: 1.0 / (x - pole)],
        label="singular",
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        with pytest.raises(KernelSynthesisError) as exc:
            synthesize_dirichlet(bad, 1.0, 2, 64)
    assert exc.value.term_index == 0


def test_families_are_distinct(tv_kernel_d, tv_kernel_n):
    assert tv_kernel_d.family is KernelFamily.DIRICHLET_LEFT
    assert tv_kernel_n.family is KernelFamily.NEUMANN_LEFT
    # same data, different edge handling: interior values must differ
    assert float(tv_kernel_d.eval(0.9, 0.1, 0.2)) != pytest.approx(
        float(tv_kernel_n.eval(0.9, 0.1, 0.2)))
