"""Path simulation of diffusions in a potential and their products."""

from .paths import (
    CLOCK_EXPONENTS,
    Component,
    PathSample,
    ScaleTable,
    as_grid_env,
    mollify,
    scale_function,
    simulate_euler,
    simulate_product,
    simulate_time_change,
)
from .stats import (
    GrowthFit,
    ReturnStats,
    brownian_growth,
    diffusion_growth,
    estimate_return,
    slope_gap,
)

__all__ = [
    "CLOCK_EXPONENTS", "Component", "GrowthFit", "PathSample", "ReturnStats", "ScaleTable",
    "as_grid_env", "brownian_growth", "diffusion_growth", "estimate_return", "mollify",
    "scale_function", "simulate_euler", "simulate_product", "simulate_time_change", "slope_gap",
]
