"""Command-line entry point.

Subcommands:
  kernel     synthesize a gain kernel and dump grids, gains, and residuals
  simulate   run one closed- or open-loop experiment and write its outputs
  reproduce  run the six benchmark scenarios into per-scenario directories
  verify     run the self-check battery; exit 0 only if every check passes

Scenario selection is either --preset NAME (fixed table), --config FILE
(INI), or individual parameter flags on top of the defaults.  A preset is a
frozen record: combining --preset with parameter flags is an error rather
than a silent override.  BACKSTEP_HEAT_THREADS caps the worker pool used for
multi-run commands.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import plotting, reporting
from .analysis import DecayReport, diff_trajectories, fit_decay
from .kernel import KernelFamily, KernelSeries, verify_residual
from .pde_sim import Actuation, Trajectory, run
from .presets import (ExperimentConfig, PRESET_NAMES, REPRODUCE_PRESETS,
                      load_config, preset_config)
from .verification import run_battery

__all__ = ["main"]

_PARAM_DESTS = ("nx", "dt", "t_end", "lam", "n_terms", "grid_m", "family",
                "actuation")


def _thread_cap(n_jobs: int) -> int:
    raw = os.environ.get("BACKSTEP_HEAT_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise SystemExit(
                f"BACKSTEP_HEAT_THREADS must be a positive integer, got {raw!r}")
        if cap < 1:
            raise SystemExit(
                f"BACKSTEP_HEAT_THREADS must be >= 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def _add_scenario_flags(p: argparse.ArgumentParser):
    sel = p.add_mutually_exclusive_group()
    sel.add_argument("--preset", choices=PRESET_NAMES,
                     help="named scenario (exclusive of parameter flags)")
    sel.add_argument("--config", metavar="FILE",
                     help="INI scenario file")
    p.add_argument("--nx", type=int, help="simulation nodes per unit length")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--t-end", dest="t_end", type=float, help="final time")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="target decay rate")
    p.add_argument("--n-terms", dest="n_terms", type=int,
                   help="series terms in the kernel")
    p.add_argument("--grid-m", dest="grid_m", type=int,
                   help="kernel quadrature grid intervals")
    p.add_argument("--family", choices=[f.value for f in KernelFamily],
                   help="kernel boundary family")
    p.add_argument("--actuation", choices=[a.value for a in Actuation],
                   help="boundary feedback mode")
    p.add_argument("--out", default="out", metavar="DIR",
                   help="output directory (default: ./out)")


def _scenario_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {d: getattr(args, d) for d in _PARAM_DESTS
                 if getattr(args, d) is not None}
    if args.preset:
        if overrides:
            raise SystemExit(
                "--preset is exclusive of parameter flags; drop: "
                + ", ".join(sorted(overrides)))
        return preset_config(args.preset)
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if "family" in overrides:
        overrides["family"] = KernelFamily(overrides["family"])
    if "actuation" in overrides:
        overrides["actuation"] = Actuation(overrides["actuation"])
    return replace(cfg, **overrides)


# ----------------------------------------------------------------------
# kernel subcommand
# ----------------------------------------------------------------------

def cmd_kernel(args: argparse.Namespace) -> int:
    cfg = _scenario_from_args(args)
    out = args.out
    os.makedirs(out, exist_ok=True)
    ks = cfg.make_kernel()
    report = verify_residual(ks)
    reporting.write_kernel_dump(os.path.join(out, "kernel.csv"), ks)
    reporting.write_gain_table(os.path.join(out, "gain_table.csv"), ks)
    reporting.write_term_norms(os.path.join(out, "term_norms.csv"), ks)
    reporting.write_residuals(os.path.join(out, "residuals.txt"), report)
    reporting.write_metadata(os.path.join(out, "metadata.txt"),
                             cfg.metadata())
    plotting.plot_gain_profile(os.path.join(out, "gain_profile.png"), ks)
    plotting.plot_term_norms(os.path.join(out, "term_norms.png"), ks)
    print(f"kernel: {cfg.n_terms} terms on grid_m={cfg.grid_m}, "
          f"max pde residual {report.max_pde_residual:.3e}")
    print(f"wrote kernel outputs to {out}")
    return 0


# ----------------------------------------------------------------------
# simulate / reproduce
# ----------------------------------------------------------------------

@dataclass
class _RunResult:
    cfg: ExperimentConfig
    kernel: Optional[KernelSeries]
    traj: Trajectory
    decay: Optional[DecayReport]
    decay_note: str = ""
    alt_traj: Optional[Trajectory] = None
    alt_decay: Optional[DecayReport] = None
    diff: Optional[Trajectory] = None


def _fit_or_note(traj: Trajectory, cfg: ExperimentConfig):
    if cfg.actuation is Actuation.NONE:
        return None, "skipped: no boundary feedback"
    if traj.diverged:
        return None, f"skipped: trajectory diverged at t={traj.t_diverged:g}"
    try:
        return fit_decay(traj, "l2", cfg.lam), ""
    except ValueError as exc:
        return None, f"failed: {exc}"


def _compute(cfg: ExperimentConfig, threads: int) -> _RunResult:
    kernel = (cfg.make_kernel()
              if cfg.actuation is not Actuation.NONE else None)
    needs_alt = cfg.compare_n_terms is not None and kernel is not None
    if needs_alt:
        alt_kernel = cfg.make_kernel(cfg.compare_n_terms)
        sims = (cfg.make_sim(kernel), cfg.make_sim(alt_kernel))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=2) as pool:
                traj, alt = pool.map(run, sims)
        else:
            traj, alt = run(sims[0]), run(sims[1])
        diff = diff_trajectories(alt, traj)
        decay, note = _fit_or_note(traj, cfg)
        alt_decay, _ = _fit_or_note(alt, cfg)
        return _RunResult(cfg, kernel, traj, decay, note, alt, alt_decay,
                          diff)
    traj = run(cfg.make_sim(kernel))
    decay, note = _fit_or_note(traj, cfg)
    return _RunResult(cfg, kernel, traj, decay, note)


def _write_outputs(res: _RunResult, out: str) -> Dict[str, str]:
    os.makedirs(out, exist_ok=True)
    cfg, traj = res.cfg, res.traj
    reporting.write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj)
    reporting.write_boundary_csv(os.path.join(out, "boundary.csv"), traj)
    reporting.emit_plot_script(out)
    plotting.plot_trajectory(os.path.join(out, "trajectory.png"), traj,
                             title=cfg.preset or "state evolution")
    plotting.plot_boundary_input(os.path.join(out, "boundary.png"), traj)

    md = cfg.metadata()
    md["diverged"] = str(traj.diverged).lower()
    if traj.t_diverged is not None:
        md["t_diverged"] = f"{traj.t_diverged:.12g}"
    md["final_time"] = f"{traj.times[-1]:.12g}"
    md["final_sup"] = f"{np.max(np.abs(traj.snapshots[-1].values)):.12g}"
    md["n_snapshots"] = str(len(traj.snapshots))

    if res.kernel is not None:
        plotting.plot_gain_profile(os.path.join(out, "gain_profile.png"),
                                   res.kernel)
        reporting.write_gain_table(os.path.join(out, "gain_table.csv"),
                                   res.kernel)
    if res.decay is not None:
        reporting.write_decay_csv(os.path.join(out, "decay.csv"), res.decay)
        reporting.write_decay_summary(os.path.join(out, "decay_summary.txt"),
                                      res.decay)
        plotting.plot_decay(os.path.join(out, "decay.png"), res.decay)
        md["fitted_rate"] = f"{res.decay.fitted_rate:.12g}"
        md["estimated_M"] = f"{res.decay.estimated_M:.12g}"
    elif res.decay_note:
        md["decay_fit"] = res.decay_note

    if res.alt_traj is not None:
        reporting.write_trajectory_csv(
            os.path.join(out, "trajectory_alt.csv"), res.alt_traj)
        md["alt_n_terms"] = str(cfg.compare_n_terms)
        if res.alt_decay is not None:
            md["fitted_rate_alt"] = f"{res.alt_decay.fitted_rate:.12g}"
    if res.diff is not None:
        reporting.write_trajectory_csv(
            os.path.join(out, "diff_trajectory.csv"), res.diff)
        sup = max(float(np.max(np.abs(s.values)))
                  for s in res.diff.snapshots)
        md["max_abs_diff"] = f"{sup:.12g}"
        plotting.plot_trajectory(
            os.path.join(out, "diff_trajectory.png"), res.diff,
            title=f"difference: {cfg.compare_n_terms} vs {cfg.n_terms} terms")

    reporting.write_metadata(os.path.join(out, "metadata.txt"), md)
    return md


def _summarize(name: str, md: Dict[str, str]):
    bits = [f"diverged={md['diverged']}"]
    if "t_diverged" in md:
        bits.append(f"t_diverged={md['t_diverged']}")
    if "fitted_rate" in md:
        bits.append(f"fitted_rate={md['fitted_rate']}")
    if "max_abs_diff" in md:
        bits.append(f"max_abs_diff={md['max_abs_diff']}")
    print(f"{name}: " + ", ".join(bits))


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _scenario_from_args(args)
    threads = _thread_cap(2 if cfg.compare_n_terms is not None else 1)
    res = _compute(cfg, threads)
    md = _write_outputs(res, args.out)
    _summarize(cfg.preset or "run", md)
    print(f"wrote simulation outputs to {args.out}")
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    names = [args.preset] if args.preset else list(REPRODUCE_PRESETS)
    threads = _thread_cap(len(names))
    inner = 1 if threads > 1 else _thread_cap(2)
    configs = [preset_config(n) for n in names]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _compute(c, inner), configs))
    else:
        results = [_compute(c, inner) for c in configs]
    # figure rendering is not thread safe; write everything from this thread
    for name, res in zip(names, results):
        md = _write_outputs(res, os.path.join(args.out, name))
        _summarize(name, md)
    print(f"wrote {len(names)} scenario director"
          f"{'y' if len(names) == 1 else 'ies'} under {args.out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    def show(res):
        tag = "pass" if res.passed else "FAIL"
        print(f"[{tag}] {res.name}: {res.detail}")

    results = run_battery(quick=not args.full, progress=show)
    n_bad = sum(not r.passed for r in results)
    print(f"{len(results) - n_bad}/{len(results)} checks passed")
    return 1 if n_bad else 0


# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="backstep-heat",
        description="boundary-feedback stabilization of an unstable "
                    "reaction-diffusion rod: kernel synthesis, simulation, "
                    "and self checks")
    sub = p.add_subparsers(dest="command", required=True)

    pk = sub.add_parser("kernel", help="synthesize a kernel and dump outputs")
    _add_scenario_flags(pk)
    pk.set_defaults(fn=cmd_kernel)

    ps = sub.add_parser("simulate", help="run one experiment")
    _add_scenario_flags(ps)
    ps.set_defaults(fn=cmd_simulate)

    pr = sub.add_parser("reproduce",
                        help="run the benchmark scenario set")
    pr.add_argument("--preset", choices=REPRODUCE_PRESETS,
                    help="run a single benchmark scenario instead of all six")
    pr.add_argument("--out", default="out", metavar="DIR",
                    help="root output directory (default: ./out)")
    pr.set_defaults(fn=cmd_reproduce)

    pv = sub.add_parser("verify", help="run the self-check battery")
    pv.add_argument("--full", action="store_true",
                    help="larger grids, more terms, extra decay rate")
    pv.set_defaults(fn=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
