"""Random environments: representation, sampling and the scaling map."""

from .core import (
    Environment1D,
    ExtentError,
    ProductEnvironment,
    ScaledEnvironment,
    ZeroEnvironment,
    annulus_extrema,
    extrema,
    product_environment,
    scale_transform,
    uniform_grid,
)
from .gaussian import (
    FactorizationError,
    GaussianFieldSampler,
    GridEnvironment,
    GridSpec,
    sample_gaussian_field,
)
from .kernels import Kernel, get_kernel, kernel_names, register_kernel
from .laws import (
    BrownianLaw,
    DeterministicLaw,
    EnvironmentLaw,
    GaussianKernelLaw,
    LevyLaw,
    ProductLaw,
    sample_brownian_2sided,
    sample_environment,
    sample_levy_2sided,
    zero_environment,
    zero_law,
)
from .levy import JumpLaw, LevyTriplet

__all__ = [
    "BrownianLaw", "DeterministicLaw", "Environment1D", "EnvironmentLaw", "ExtentError",
    "FactorizationError", "GaussianFieldSampler", "GaussianKernelLaw", "GridEnvironment",
    "GridSpec", "JumpLaw", "Kernel", "LevyLaw", "LevyTriplet", "ProductEnvironment",
    "ProductLaw", "ScaledEnvironment", "ZeroEnvironment", "annulus_extrema", "extrema",
    "get_kernel", "kernel_names", "product_environment", "register_kernel",
    "sample_brownian_2sided", "sample_environment", "sample_gaussian_field",
    "sample_levy_2sided", "scale_transform", "uniform_grid", "zero_environment", "zero_law",
]
