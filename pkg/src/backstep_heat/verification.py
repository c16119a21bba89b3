"""Self-check battery: closed-form anchors, residuals, transform identities.

Each check returns a CheckResult row; run_battery collects them so the CLI
can print one line per check and exit nonzero when anything fails.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .analysis import energy
from .closed_forms import kernel_const_dirichlet, kernel_const_neumann
from .coefficient import (CoefficientPolyT, constant_coefficient,
                          x_linear_t_coefficient, zero_coefficient)
from .kernel import (KernelFamily, KernelSeries, synthesize_dirichlet,
                     synthesize_neumann, verify_residual)
from .pde_sim import (Actuation, LeftBC, SimConfig, compatibilize, run)
from .transform import SampledFunction, forward, inverse

__all__ = ["CheckResult", "run_battery", "corrupt_kernel", "CHECK_NAMES"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def corrupt_kernel(ks: KernelSeries, term_index: int = 0,
                   scale: float = 1.05) -> KernelSeries:
    """Return a copy of ks with one term rescaled (for fault injection)."""
    if not 0 <= term_index < len(ks.terms):
        raise IndexError(f"term_index {term_index} out of range")
    terms = list(ks.terms)
    old = terms[term_index]
    terms[term_index] = dataclasses.replace(
        old, tpoly_grids=old.tpoly_grids * scale)
    return KernelSeries(terms=terms, lam=ks.lam, family=ks.family,
                        grid_m=ks.grid_m, coefficient=ks.coefficient,
                        t_valid=ks.t_valid)


# ----------------------------------------------------------------------
# individual checks
# ----------------------------------------------------------------------

def _check_const_closed_form(family: KernelFamily, grid_m: int,
                             n_terms: int) -> CheckResult:
    mu, lam = 3.0, 5.0
    a = constant_coefficient(mu)
    if family is KernelFamily.DIRICHLET_LEFT:
        ks = synthesize_dirichlet(a, lam, n_terms, grid_m)
        exact_fn = kernel_const_dirichlet
    else:
        ks = synthesize_neumann(a, lam, n_terms, grid_m)
        exact_fn = kernel_const_neumann
    xs, ys = np.meshgrid(np.linspace(0, 1, 41), np.linspace(0, 1, 41),
                         indexing="ij")
    mask = ys <= xs
    x, y = xs[mask], ys[mask]
    got = ks.eval(x, y, 0.0)
    want = exact_fn(x, y, mu + lam)
    scale = np.max(np.abs(want))
    err = float(np.max(np.abs(got - want)) / scale)
    return CheckResult(
        f"const_kernel_{family.value}_closed_form", err <= 1e-3,
        f"rel_err={err:.3e} (tol 1e-3, grid_m={grid_m}, n_terms={n_terms})")


def _check_residual_refinement(coarse: int = 64, fine: int = 128) -> CheckResult:
    a = x_linear_t_coefficient(0.2, 0.5)
    lam, n_terms = 2.0, 6
    r_lo = verify_residual(synthesize_dirichlet(a, lam, n_terms, coarse))
    r_hi = verify_residual(synthesize_dirichlet(a, lam, n_terms, fine))
    floor = 1e-12
    if r_lo.max_pde_residual < floor and r_hi.max_pde_residual < floor:
        return CheckResult("residual_refinement", True,
                           f"both residuals below {floor:g}")
    ratio = r_lo.max_pde_residual / max(r_hi.max_pde_residual, 1e-300)
    ok = ratio >= 2.5
    return CheckResult(
        "residual_refinement", ok,
        f"pde residual {r_lo.max_pde_residual:.3e} -> "
        f"{r_hi.max_pde_residual:.3e}, ratio {ratio:.2f} (need >= 2.5)")


def _check_residual_detects_corruption() -> CheckResult:
    a = x_linear_t_coefficient(0.2, 0.5)
    ks = synthesize_dirichlet(a, 2.0, 6, 64)
    base = verify_residual(ks).max_pde_residual
    bad = verify_residual(corrupt_kernel(ks, 0, 1.05)).max_pde_residual
    ok = bad > 1e-3 and bad > 50.0 * max(base, 1e-12)
    return CheckResult(
        "residual_detects_corruption", ok,
        f"baseline {base:.3e}, corrupted {bad:.3e}")


def _check_transform_roundtrip(nx: int = 200) -> CheckResult:
    a = x_linear_t_coefficient(0.2, 0.5)
    ks = synthesize_dirichlet(a, 2.0, 6, 64)
    rng = np.random.default_rng(7)
    x = np.linspace(0, 1, nx + 1)
    worst = 0.0
    for _ in range(5):
        c = rng.normal(size=4)
        u = SampledFunction(sum(cj * np.sin((j + 1) * np.pi * x)
                                for j, cj in enumerate(c)))
        back = inverse(ks, forward(ks, u, 0.3), 0.3)
        worst = max(worst, float(np.max(np.abs(back.values - u.values))))
    return CheckResult("transform_roundtrip", worst <= 1e-6,
                       f"max roundtrip error {worst:.3e} (tol 1e-6)")


def _check_target_decay(lam: float) -> CheckResult:
    nx = 200
    dt = 0.45 / nx ** 2
    x = np.linspace(0, 1, nx + 1)
    cfg = SimConfig(nx=nx, dt=dt, t_end=0.3,
                    coefficient=constant_coefficient(-lam),
                    initial=SampledFunction(np.sin(np.pi * x)),
                    left_bc=LeftBC.DIRICHLET_ZERO,
                    actuation=Actuation.NONE,
                    snapshot_stride=max(1, int(round(0.01 / dt))))
    traj = run(cfg)
    e0 = energy(traj.snapshots[0])
    worst = 0.0
    for t, snap in zip(traj.times[1:], traj.snapshots[1:]):
        bound = e0 * np.exp(-2.0 * lam * t)
        worst = max(worst, energy(snap) / bound)
    ok = (not traj.diverged) and worst <= 1.05
    return CheckResult(f"damped_diffusion_energy_lam{lam:g}", ok,
                       f"max energy / exp(-2*{lam:g}*t) bound = {worst:.4f}")


def _check_closed_loop(nx: int = 64, t_end: float = 0.05) -> CheckResult:
    lam = 2.0
    a = x_linear_t_coefficient(0.2, 0.5)
    ks = synthesize_dirichlet(a, lam, 6, 64)
    x = np.linspace(0, 1, nx + 1)
    bump = (0.25 - (x - 0.5) ** 2)
    u0 = compatibilize(
        SampledFunction(10 * bump * np.sin(4 * np.pi * x) + 5 * bump),
        ks, Actuation.DIRICHLET_FEEDBACK)
    dt = 0.45 / nx ** 2
    cfg = SimConfig(nx=nx, dt=dt, t_end=t_end, coefficient=a, initial=u0,
                    left_bc=LeftBC.DIRICHLET_ZERO,
                    actuation=Actuation.DIRICHLET_FEEDBACK, lam=lam,
                    kernel=ks, snapshot_stride=20)
    traj = run(cfg)
    w0 = energy(forward(ks, traj.snapshots[0], traj.times[0]))
    worst = 0.0
    for t, snap in zip(traj.times[1:], traj.snapshots[1:]):
        ew = energy(forward(ks, snap, t))
        worst = max(worst, ew / (w0 * np.exp(-2.0 * lam * t)))
    ok = (not traj.diverged) and worst <= 1.10
    return CheckResult(
        "closed_loop_transformed_energy", ok,
        f"max transformed-energy ratio {worst:.4f} (slack 1.10)")


def _check_series_positivity() -> CheckResult:
    a = x_linear_t_coefficient(0.2, 0.5)
    ks = synthesize_dirichlet(a, 2.0, 4, 64)
    worst = min(float(term.tpoly_grids.min()) for term in ks.terms)
    return CheckResult("series_term_positivity", worst >= 0.0,
                       f"min node value {worst:.3e}")


def _check_free_diffusion() -> CheckResult:
    nx = 200
    dt = 0.45 / nx ** 2
    t_end = 0.1
    x = np.linspace(0, 1, nx + 1)
    cfg = SimConfig(nx=nx, dt=dt, t_end=t_end,
                    coefficient=zero_coefficient(),
                    initial=SampledFunction(np.sin(np.pi * x)),
                    left_bc=LeftBC.DIRICHLET_ZERO,
                    actuation=Actuation.NONE,
                    snapshot_stride=10 ** 9)
    traj = run(cfg)
    t = traj.times[-1]
    exact = np.exp(-np.pi ** 2 * t) * np.sin(np.pi * x)
    err = float(np.max(np.abs(traj.snapshots[-1].values - exact))
                / np.max(np.abs(exact)))
    return CheckResult("free_diffusion_accuracy", err <= 0.01,
                       f"rel_err={err:.3e} at t={t:g} (tol 1e-2)")


# ----------------------------------------------------------------------

def run_battery(quick: bool = True,
                progress: Optional[Callable[[CheckResult], None]] = None
                ) -> List[CheckResult]:
    """Run the checks; quick=False uses larger grids and an extra rate."""
    grid_m, n_terms = (128, 12) if quick else (200, 20)
    steps: List[Callable[[], CheckResult]] = [
        lambda: _check_const_closed_form(KernelFamily.DIRICHLET_LEFT,
                                         grid_m, n_terms),
        lambda: _check_const_closed_form(KernelFamily.NEUMANN_LEFT,
                                         grid_m, n_terms),
        _check_residual_refinement if quick else
        (lambda: _check_residual_refinement(100, 200)),
        _check_residual_detects_corruption,
        _check_transform_roundtrip,
        lambda: _check_target_decay(2.0),
        _check_series_positivity,
        _check_free_diffusion,
        _check_closed_loop if quick else
        (lambda: _check_closed_loop(100, 0.3)),
    ]
    if not quick:
        steps.insert(6, lambda: _check_target_decay(10.0))
    results = []
    for step in steps:
        res = step()
        results.append(res)
        if progress is not None:
            progress(res)
    return results


CHECK_NAMES = (
    "const_kernel_dirichlet_closed_form",
    "const_kernel_neumann_closed_form",
    "residual_refinement",
    "residual_detects_corruption",
    "transform_roundtrip",
    "damped_diffusion_energy_lam2",
    "damped_diffusion_energy_lam10",
    "series_term_positivity",
    "free_diffusion_accuracy",
    "closed_loop_transformed_energy",
)
