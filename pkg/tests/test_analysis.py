import numpy as np
import pytest

from backstep_heat import (Actuation, DecayReport, LeftBC, SampledFunction,
                           SimConfig, Trajectory, diff_trajectories, energy,
                           fit_decay, forward, h1_norm, h1_seminorm_sq, run,
                           zero_coefficient)


def _sine(nx=200):
    x = np.linspace(0.0, 1.0, nx + 1)
    return SampledFunction(np.sin(np.pi * x))


def test_energy_of_unit_sine():
    # (1/2) int sin^2 = 1/4
    assert energy(_sine()) == pytest.approx(0.25, rel=1e-4)


def test_h1_seminorm_of_unit_sine():
    # int (pi cos)^2 = pi^2 / 2
    assert h1_seminorm_sq(_sine(400)) == pytest.approx(np.pi**2 / 2,
                                                       rel=1e-3)


def test_h1_norm_combines_both_pieces():
    f = _sine(400)
    want = np.sqrt(0.5 + np.pi**2 / 2)
    assert h1_norm(f) == pytest.approx(want, rel=1e-3)


def _synthetic_decay(rate, n=60, t_end=1.0, nx=40):
    times = np.linspace(0.0, t_end, n)
    x = np.linspace(0.0, 1.0, nx + 1)
    snaps = [SampledFunction(np.exp(-rate * t) * np.sin(np.pi * x))
             for t in times]
    return Trajectory(snaps, times, np.zeros((0, 2)), False, None)


def test_fit_recovers_a_clean_exponential_rate():
    traj = _synthetic_decay(np.pi**2)
    rep = fit_decay(traj, "l2", lam=np.pi**2)
    assert rep.fitted_rate == pytest.approx(np.pi**2, rel=1e-9)
    assert rep.claimed_rate == pytest.approx(np.pi**2)
    assert rep.estimated_M == pytest.approx(1.0, rel=1e-9)
    # the M = 1 bound holds with zero slack on exact data
    assert np.min(rep.margin_series) >= -1e-9


def test_fit_on_simulated_diffusion():
    nx = 100
    cfg = SimConfig(nx=nx, dt=0.45 / nx**2, t_end=0.4,
                    coefficient=zero_coefficient(), initial=_sine(nx),
                    left_bc=LeftBC.DIRICHLET_ZERO, actuation=Actuation.NONE,
                    snapshot_stride=50)
    rep = fit_decay(run(cfg), "l2", lam=np.pi**2)
    assert rep.fitted_rate == pytest.approx(np.pi**2, rel=2e-2)


def test_fit_window_control():
    traj = _synthetic_decay(3.0, n=101, t_end=2.0)
    rep = fit_decay(traj, "l2", lam=3.0, window=(0.5, 1.5))
    assert rep.window == (0.5, 1.5)
    assert rep.fitted_rate == pytest.approx(3.0, rel=1e-9)
    with pytest.raises(ValueError, match="window"):
        fit_decay(traj, "l2", lam=3.0, window=(1.9, 5.0))


def test_fit_needs_enough_samples():
    traj = _synthetic_decay(1.0, n=8)
    with pytest.raises(ValueError, match="samples"):
        fit_decay(traj, "l2", lam=1.0)


def test_fit_rejects_dead_signal():
    x = np.linspace(0.0, 1.0, 33)
    snaps = [SampledFunction(np.zeros_like(x)) for _ in range(40)]
    traj = Trajectory(snaps, np.linspace(0, 1, 40), np.zeros((0, 2)),
                      False, None)
    with pytest.raises(ValueError, match="degenerate"):
        fit_decay(traj, "l2", lam=1.0)


def test_transformed_energy_rate_doubles_the_claim(tv_kernel_d):
    traj = _synthetic_decay(2.0, t_end=0.8)  # inside the validity horizon
    rep = fit_decay(traj, "w_energy", lam=2.0, kernel=tv_kernel_d)
    assert rep.claimed_rate == 4.0
    with pytest.raises(ValueError, match="kernel"):
        fit_decay(traj, "w_energy", lam=2.0)


def test_unknown_norm_is_rejected():
    traj = _synthetic_decay(1.0)
    with pytest.raises(ValueError, match="norm"):
        fit_decay(traj, "sup", lam=1.0)


def test_transformed_energy_series_uses_the_snapshot_times(tv_kernel_d):
    # freezing the state while t advances must still change w through k(.,t)
    x = np.linspace(0.0, 1.0, 65)
    frozen = SampledFunction(np.sin(np.pi * x))
    e_early = energy(forward(tv_kernel_d, frozen, 0.0))
    e_late = energy(forward(tv_kernel_d, frozen, 0.8))
    assert e_early != pytest.approx(e_late, rel=1e-6)


def test_diff_trajectories_checks_alignment():
    a = _synthetic_decay(1.0, n=20, nx=40)
    b = _synthetic_decay(2.0, n=20, nx=40)
    d = diff_trajectories(a, b)
    assert np.max(np.abs(d.snapshots[0].values)) == 0.0  # same start
    assert np.max(np.abs(d.snapshots[-1].values)) > 0.0
    with pytest.raises(ValueError, match="grid"):
        diff_trajectories(a, _synthetic_decay(1.0, n=20, nx=50))
    with pytest.raises(ValueError, match="times"):
        diff_trajectories(a, _synthetic_decay(1.0, n=21, nx=40))


def test_report_is_a_plain_record():
    traj = _synthetic_decay(1.0)
    rep = fit_decay(traj, "h1", lam=1.0)
    assert isinstance(rep, DecayReport)
    assert rep.norm == "h1"
    assert rep.times.shape == rep.values.shape == rep.margin_series.shape
