import numpy as np
import pytest

from backstep_heat import (SampledFunction, constant_coefficient,
                           synthesize_dirichlet, synthesize_neumann,
                           x_linear_t_coefficient)

# Session-scoped kernels: synthesis is deterministic, so sharing them across
# test modules only saves time.  MU/LAM_CONST pick beta = 8 for the
# constant-coefficient pair; the time-varying pair is deliberately mild so
# six terms already sit deep in the factorial tail.
MU_CONST = 3.0
LAM_CONST = 5.0
BETA_CONST = MU_CONST + LAM_CONST


@pytest.fixture(scope="session")
def mild_coefficient():
    return x_linear_t_coefficient(0.2, 0.5)


@pytest.fixture(scope="session")
def tv_kernel_d(mild_coefficient):
    return synthesize_dirichlet(mild_coefficient, 2.0, 6, 64)


@pytest.fixture(scope="session")
def tv_kernel_n(mild_coefficient):
    return synthesize_neumann(mild_coefficient, 2.0, 6, 64)


@pytest.fixture(scope="session")
def const_kernel_d():
    return synthesize_dirichlet(constant_coefficient(MU_CONST), LAM_CONST,
                                12, 128)


@pytest.fixture(scope="session")
def const_kernel_n():
    return synthesize_neumann(constant_coefficient(MU_CONST), LAM_CONST,
                              12, 128)


@pytest.fixture
def make_smooth():
    """Random zero-boundary profiles from a short sine series."""

    def _make(rng: np.random.Generator, nx: int,
              n_modes: int = 4) -> SampledFunction:
        x = np.linspace(0.0, 1.0, nx + 1)
        coeffs = rng.normal(size=n_modes)
        vals = np.zeros_like(x)
        for j, cj in enumerate(coeffs):
            vals += cj * np.sin((j + 1) * np.pi * x)
        return SampledFunction(vals)

    return _make
