"""Boundary-feedback stabilization of a 1-D unstable reaction-diffusion rod.

The package synthesizes time-varying feedback gain kernels by successive
approximation on the unit triangle, applies the associated integral state
transform, simulates the actuated rod, and quantifies closed-loop decay.
"""

from .analysis import (DecayReport, diff_trajectories, energy, fit_decay,
                       h1_norm, h1_seminorm_sq)
from .closed_forms import (bessel_ratio, bessel_ratio_deriv,
                           kernel_const_dirichlet, kernel_const_dirichlet_dx,
                           kernel_const_neumann, kernel_const_neumann_dx)
from .coefficient import (CoefficientPolyT, coefficient_from_params,
                          constant_coefficient, x_linear_t_coefficient,
                          zero_coefficient)
from .kernel import (KernelFamily, KernelSeries, KernelSynthesisError,
                     KernelTermGrid, KernelValidityWarning, ResidualReport,
                     synthesize_dirichlet, synthesize_neumann,
                     verify_residual)
from .pde_sim import (Actuation, LeftBC, SimConfig, Trajectory,
                      apply_dirichlet_feedback, apply_neumann_feedback,
                      check_compatibility, compatibilize, run, step)
from .presets import (ExperimentConfig, PRESET_NAMES, REPRODUCE_PRESETS,
                      initial_from_name, load_config, preset_config)
from .transform import (BacksteppingTransform, InverseConvergenceError,
                        SampledFunction, forward, inverse)
from .verification import CheckResult, corrupt_kernel, run_battery

__version__ = "0.1.0"

__all__ = [
    "Actuation",
    "BacksteppingTransform",
    "CheckResult",
    "CoefficientPolyT",
    "DecayReport",
    "ExperimentConfig",
    "InverseConvergenceError",
    "KernelFamily",
    "KernelSeries",
    "KernelSynthesisError",
    "KernelTermGrid",
    "KernelValidityWarning",
    "LeftBC",
    "PRESET_NAMES",
    "REPRODUCE_PRESETS",
    "ResidualReport",
    "SampledFunction",
    "SimConfig",
    "Trajectory",
    "apply_dirichlet_feedback",
    "apply_neumann_feedback",
    "bessel_ratio",
    "bessel_ratio_deriv",
    "check_compatibility",
    "coefficient_from_params",
    "compatibilize",
    "constant_coefficient",
    "corrupt_kernel",
    "diff_trajectories",
    "energy",
    "fit_decay",
    "forward",
    "h1_norm",
    "h1_seminorm_sq",
    "initial_from_name",
    "inverse",
    "kernel_const_dirichlet",
    "kernel_const_dirichlet_dx",
    "kernel_const_neumann",
    "kernel_const_neumann_dx",
    "load_config",
    "preset_config",
    "run",
    "run_battery",
    "step",
    "synthesize_dirichlet",
    "synthesize_neumann",
    "verify_residual",
    "x_linear_t_coefficient",
    "zero_coefficient",
    "__version__",
]
