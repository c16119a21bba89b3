"""Experiment configuration: named presets and the key=value config format.

A preset fully determines every parameter of a run — that is the
reproducibility contract, so presets cannot be combined with parameter
overrides.  Config files use INI sections of flat key=value pairs:

    [coefficient]
    family = x_linear_t
    b = 200
    c = 5

    [kernel]
    family = dirichlet
    lambda = 10
    n_terms = 3
    grid_m = 100

    [simulation]
    nx = 100
    dt = 1e-5
    t_end = 1.0
    left_bc = dirichlet
    actuation = dirichlet
    snapshot_stride = 1000

    [initial]
    family = ripple_bump

The fig1a..fig1f presets march through one benchmark story: an open-loop
plant with a space- and time-growing reaction term blows up (a, c), boundary
feedback built from a 3-term kernel holds it down (b), a stiffer target (d)
and a 4-term kernel (e) decay faster, and the loop stays bounded far past the
kernel's nominal validity horizon (f).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from .coefficient import CoefficientPolyT, coefficient_from_params
from .kernel import (KernelFamily, KernelSeries, synthesize_dirichlet,
                     synthesize_neumann)
from .pde_sim import Actuation, LeftBC, SimConfig
from .transform import SampledFunction

__all__ = [
    "ExperimentConfig",
    "initial_from_name",
    "load_config",
    "preset_config",
    "PRESET_NAMES",
    "REPRODUCE_PRESETS",
]


def _ripple_bump(x: np.ndarray) -> np.ndarray:
    """Benchmark initial profile: parabolic bump with a two-period ripple."""
    bump = 0.25 - (x - 0.5) ** 2
    return 10.0 * bump * np.sin(4.0 * np.pi * x) + 5.0 * bump


_INITIAL_FAMILIES = {
    "ripple_bump": _ripple_bump,
    "sin_pi": lambda x: np.sin(np.pi * x),
    "zero": lambda x: np.zeros_like(x),
}


def initial_from_name(name: str, nx: int) -> SampledFunction:
    try:
        fn = _INITIAL_FAMILIES[name.strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown initial family {name!r}; choose from {sorted(_INITIAL_FAMILIES)}"
        ) from None
    return SampledFunction.from_callable(fn, nx)


@dataclass
class ExperimentConfig:
    """Flat bundle of every knob a CLI run may touch."""

    preset: Optional[str] = None
    # coefficient
    coefficient_family: str = "x_linear_t"
    coefficient_params: Dict[str, float] = field(
        default_factory=lambda: {"b": 200.0, "c": 5.0})
    # kernel
    family: KernelFamily = KernelFamily.DIRICHLET_LEFT
    lam: float = 10.0
    n_terms: int = 3
    grid_m: int = 100
    t_valid: float = 0.9
    # simulation
    nx: int = 100
    dt: float = 1e-5
    t_end: float = 1.0
    left_bc: LeftBC = LeftBC.DIRICHLET_ZERO
    actuation: Actuation = Actuation.NONE
    snapshot_stride: int = 1000
    initial_family: str = "ripple_bump"
    # fig1e-style comparison: also run with this many terms and diff
    compare_n_terms: Optional[int] = None

    # ------------------------------------------------------------------
    def make_coefficient(self) -> CoefficientPolyT:
        return coefficient_from_params(self.coefficient_family,
                                       self.coefficient_params)

    def make_kernel(self, n_terms: Optional[int] = None) -> KernelSeries:
        synth = (synthesize_dirichlet
                 if self.family is KernelFamily.DIRICHLET_LEFT
                 else synthesize_neumann)
        return synth(self.make_coefficient(), self.lam,
                     n_terms or self.n_terms, self.grid_m, self.t_valid)

    def make_initial(self) -> SampledFunction:
        return initial_from_name(self.initial_family, self.nx)

    def make_sim(self, kernel: Optional[KernelSeries] = None) -> SimConfig:
        if self.actuation is not Actuation.NONE and kernel is None:
            kernel = self.make_kernel()
        return SimConfig(
            nx=self.nx, dt=self.dt, t_end=self.t_end,
            coefficient=self.make_coefficient(),
            initial=self.make_initial(),
            left_bc=self.left_bc, actuation=self.actuation,
            lam=self.lam, kernel=kernel,
            snapshot_stride=self.snapshot_stride,
        )

    def metadata(self) -> Dict[str, str]:
        md = {
            "preset": self.preset or "",
            "coefficient": self.make_coefficient().label,
            "kernel_family": self.family.value,
            "lambda": f"{self.lam:.12g}",
            "n_terms": str(self.n_terms),
            "grid_m": str(self.grid_m),
            "t_valid": f"{self.t_valid:.12g}",
            "nx": str(self.nx),
            "dt": f"{self.dt:.12g}",
            "t_end": f"{self.t_end:.12g}",
            "left_bc": self.left_bc.value,
            "actuation": self.actuation.value,
            "snapshot_stride": str(self.snapshot_stride),
            "initial": self.initial_family,
        }
        if self.compare_n_terms is not None:
            md["compare_n_terms"] = str(self.compare_n_terms)
        return md


# ----------------------------------------------------------------------
# Preset table.

def _benchmark_base(**kw) -> ExperimentConfig:
    base = ExperimentConfig(
        coefficient_family="x_linear_t",
        coefficient_params={"b": 200.0, "c": 5.0},
        family=KernelFamily.DIRICHLET_LEFT,
        lam=10.0, n_terms=3, grid_m=100,
        nx=100, dt=1e-5, t_end=1.0,
        left_bc=LeftBC.DIRICHLET_ZERO,
        actuation=Actuation.NONE,
        snapshot_stride=1000,
        initial_family="ripple_bump",
    )
    return replace(base, **kw)


def _presets() -> Dict[str, ExperimentConfig]:
    table = {
        # open loop, strongly ramped reaction: blows up well before t = 1
        "fig1a": _benchmark_base(preset="fig1a"),
        # the same plant under Dirichlet feedback from a 3-term kernel
        "fig1b": _benchmark_base(preset="fig1b",
                                 actuation=Actuation.DIRICHLET_FEEDBACK),
        # open loop with a weaker ramp: diverges later
        "fig1c": _benchmark_base(preset="fig1c",
                                 coefficient_params={"b": 150.0, "c": 5.0}),
        # stiffer target: lambda = 40 decays faster than lambda = 10
        "fig1d": _benchmark_base(preset="fig1d", lam=40.0,
                                 actuation=Actuation.DIRICHLET_FEEDBACK),
        # controller sensitivity: difference between 3- and 4-term kernels
        "fig1e": _benchmark_base(preset="fig1e",
                                 actuation=Actuation.DIRICHLET_FEEDBACK,
                                 compare_n_terms=4),
        # long horizon: bounded far past the kernel validity window
        "fig1f": _benchmark_base(preset="fig1f", t_end=2.0,
                                 actuation=Actuation.DIRICHLET_FEEDBACK),
        # kernel-only presets
        "fig1b-kernel": _benchmark_base(preset="fig1b-kernel"),
        "const-mu-kernel": ExperimentConfig(
            preset="const-mu-kernel",
            coefficient_family="constant",
            coefficient_params={"mu": 5.0},
            lam=5.0, n_terms=20, grid_m=200,
        ),
        "zero-kernel": ExperimentConfig(
            preset="zero-kernel",
            coefficient_family="zero",
            coefficient_params={},
            lam=0.0, n_terms=2, grid_m=64,
        ),
        # cheap smoke scenario for config/CLI exercises
        "demo-small": ExperimentConfig(
            preset="demo-small",
            coefficient_family="x_linear_t",
            coefficient_params={"b": 0.2, "c": 0.5},
            lam=2.0, n_terms=4, grid_m=64,
            nx=64, dt=1e-4, t_end=0.02,
            actuation=Actuation.DIRICHLET_FEEDBACK,
            snapshot_stride=20,
        ),
    }
    return table


PRESET_NAMES = tuple(sorted(_presets()))
REPRODUCE_PRESETS = ("fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "fig1f")


def preset_config(name: str) -> ExperimentConfig:
    table = _presets()
    try:
        return table[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; choose from {', '.join(sorted(table))}"
        ) from None


# ----------------------------------------------------------------------
# Config files.

_COEFF_KEYS = {"b", "c", "mu"}


def load_config(path: str) -> ExperimentConfig:
    """Parse an INI config file into an ExperimentConfig.

    A [scenario] preset entry is exclusive: combining it with any parameter
    section breaks the presets-are-reproducible contract and raises.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found or unreadable")

    preset = None
    if parser.has_section("scenario"):
        preset = parser.get("scenario", "preset", fallback=None)
    param_sections = [s for s in parser.sections() if s != "scenario"]
    if preset:
        if param_sections:
            raise ValueError(
                "a preset fully determines all parameters; remove the "
                f"{param_sections} section(s) or the preset"
            )
        return preset_config(preset.strip())

    cfg = ExperimentConfig()
    if parser.has_section("coefficient"):
        sec = parser["coefficient"]
        cfg.coefficient_family = sec.get("family", cfg.coefficient_family)
        cfg.coefficient_params = {
            k: float(v) for k, v in sec.items() if k in _COEFF_KEYS
        }
    if parser.has_section("kernel"):
        sec = parser["kernel"]
        cfg.family = KernelFamily(sec.get("family", cfg.family.value))
        cfg.lam = sec.getfloat("lambda", cfg.lam)
        cfg.n_terms = sec.getint("n_terms", cfg.n_terms)
        cfg.grid_m = sec.getint("grid_m", cfg.grid_m)
        cfg.t_valid = sec.getfloat("t_valid", cfg.t_valid)
    if parser.has_section("simulation"):
        sec = parser["simulation"]
        cfg.nx = sec.getint("nx", cfg.nx)
        cfg.dt = sec.getfloat("dt", cfg.dt)
        cfg.t_end = sec.getfloat("t_end", cfg.t_end)
        cfg.left_bc = LeftBC(sec.get("left_bc", cfg.left_bc.value))
        cfg.actuation = Actuation(sec.get("actuation", cfg.actuation.value))
        cfg.snapshot_stride = sec.getint("snapshot_stride", cfg.snapshot_stride)
    if parser.has_section("initial"):
        cfg.initial_family = parser.get("initial", "family",
                                        fallback=cfg.initial_family)
    return cfg
