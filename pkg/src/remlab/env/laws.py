"""Environment laws and the seeded samplers built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..rng import TAG_ENV, substream
from .core import Environment1D, ProductEnvironment, ZeroEnvironment, uniform_grid
from .gaussian import GaussianFieldSampler, GridSpec
from .kernels import get_kernel
from .levy import LevyTriplet, levy_side_rows


@dataclass(frozen=True)
class EnvironmentLaw:
    """Base law: scaling ratio ``r`` and selfsimilarity exponent ``alpha``."""

    r: float = 1.5
    alpha: float = 0.5

    def __post_init__(self):
        if not self.r > 1:
            raise ValueError(f"scaling ratio r must exceed 1, got {self.r}")
        if not self.alpha > 0:
            raise ValueError(f"exponent alpha must be positive, got {self.alpha}")

    name = "abstract"
    dim = 1

    def sample_rows(self, rng: np.random.Generator, L: float, h: float, batch: int):
        raise NotImplementedError

    def sample(self, seed: int, L: float, h: float) -> Environment1D:
        grid, rows = self.sample_rows(substream(seed, TAG_ENV), L, h, 1)
        return Environment1D(grid, rows[0], self.describe(seed=seed, L=float(grid[-1]), h=h))

    def describe(self, **extra) -> dict:
        return {"law": self.name, "r": self.r, "alpha": self.alpha, **extra}


def _two_sided(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    # left[:, j] is w(-j h); right[:, j] is w(j h)
    return np.concatenate([left[:, :0:-1], right], axis=1)


@dataclass(frozen=True)
class BrownianLaw(EnvironmentLaw):
    name = "brownian"

    def sample_rows(self, rng, L, h, batch):
        grid = uniform_grid(L, h)
        N = (grid.size - 1) // 2
        z = rng.standard_normal((batch, 2 * N)) * math.sqrt(h)
        right = np.zeros((batch, N + 1))
        left = np.zeros((batch, N + 1))
        np.cumsum(z[:, :N], axis=1, out=right[:, 1:])
        np.cumsum(z[:, N:], axis=1, out=left[:, 1:])
        return grid, _two_sided(left, right)


@dataclass(frozen=True)
class LevyLaw(EnvironmentLaw):
    triplet: LevyTriplet = field(default_factory=LevyTriplet)
    name = "levy"

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.triplet.exponent <= 2:
            raise ValueError("Lévy exponent must lie in (0, 2]")

    def sample_rows(self, rng, L, h, batch, record=False):
        grid = uniform_grid(L, h)
        N = (grid.size - 1) // 2
        if record:
            right, jr = levy_side_rows(self.triplet, rng, N, h, batch, record=True)
            left, jl = levy_side_rows(self.triplet, rng, N, h, batch, record=True)
            return grid, _two_sided(left, right), {"positive": jr, "negative": jl}
        right = levy_side_rows(self.triplet, rng, N, h, batch)
        left = levy_side_rows(self.triplet, rng, N, h, batch)
        return grid, _two_sided(left, right)

    def sample(self, seed, L, h):
        grid, rows, jumps = self.sample_rows(substream(seed, TAG_ENV), L, h, 1, record=True)
        meta = self.describe(seed=seed, L=float(grid[-1]), h=h, exponent=self.triplet.exponent,
                             jumps={side: {k: v.tolist() for k, v in j.items() if k != "row"}
                                    for side, j in jumps.items()})
        return Environment1D(grid, rows[0], meta)


@dataclass(frozen=True)
class GaussianKernelLaw(EnvironmentLaw):
    kernel: str = "brox"
    name = "gaussian"

    def sample_rows(self, rng, L, h, batch):
        sampler = _sampler(self.kernel, L, h)
        return sampler.axes[0], sampler.sample_values(rng, batch)

    def describe(self, **extra):
        return super().describe(kernel=get_kernel(self.kernel).name, **extra)


_SAMPLERS: dict = {}


def _sampler(kernel, L, h) -> GaussianFieldSampler:
    key = (get_kernel(kernel).name, float(L), float(h))
    if key not in _SAMPLERS:
        _SAMPLERS[key] = GaussianFieldSampler(kernel, GridSpec(L, h, 1))
    return _SAMPLERS[key]


@dataclass(frozen=True)
class DeterministicLaw(EnvironmentLaw):
    """Degenerate law putting all mass on one function."""

    func: Callable = field(default=lambda x: 0.0 * x, compare=False)
    label: str = "zero"
    name = "deterministic"

    def sample_rows(self, rng, L, h, batch):
        grid = uniform_grid(L, h)
        vals = np.asarray(self.func(grid), dtype=float) + 0.0 * grid
        return grid, np.broadcast_to(vals, (batch, grid.size)).copy()

    def describe(self, **extra):
        return super().describe(label=self.label, **extra)


@dataclass(frozen=True)
class ProductLaw(EnvironmentLaw):
    laws: tuple = ()
    name = "product"

    def __post_init__(self):
        super().__post_init__()
        if not self.laws:
            raise ValueError("product law needs at least one component law")

    @property
    def dim(self):
        return len(self.laws)

    def sample(self, seed, L, h) -> ProductEnvironment:
        comps = []
        for i, law in enumerate(self.laws):
            grid, rows = law.sample_rows(substream(seed, TAG_ENV, i), L, h, 1)
            comps.append(Environment1D(grid, rows[0], law.describe(seed=seed, component=i,
                                                                   L=float(grid[-1]), h=h)))
        return ProductEnvironment(tuple(comps))


def zero_law(r: float = 1.5, alpha: float = 0.5) -> DeterministicLaw:
    return DeterministicLaw(r=r, alpha=alpha, func=lambda x: 0.0 * x, label="zero")


def sample_brownian_2sided(seed: int, L: float, h: float) -> Environment1D:
    return BrownianLaw().sample(seed, L, h)


def sample_levy_2sided(triplet: LevyTriplet, seed: int, L: float, h: float) -> Environment1D:
    return LevyLaw(triplet=triplet).sample(seed, L, h)


def sample_environment(law: EnvironmentLaw, seed: int, L: float, h: float):
    return law.sample(seed, L, h)


def zero_environment(dim: int = 1) -> ZeroEnvironment:
    return ZeroEnvironment(dim)
