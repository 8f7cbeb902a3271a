"""Exact Gaussian fields on tensor grids (d <= 2) via covariance factorization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.interpolate import RegularGridInterpolator

from .core import Environment1D, ExtentError, _check_inside, uniform_grid
from .kernels import Kernel, get_kernel

JITTER = 1e-12
PSD_TOL = 1e-8


class FactorizationError(ValueError):
    """Kernel is not positive semidefinite on the grid within tolerance."""


@dataclass(frozen=True)
class GridSpec:
    L: float
    h: float
    d: int = 1

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("Gaussian fields are supported for d <= 2 only")

    def axes(self) -> tuple[np.ndarray, ...]:
        ax = uniform_grid(self.L, self.h)
        return (ax,) * self.d


@dataclass(frozen=True, eq=False)
class GridEnvironment:
    """Field values on a tensor grid with multilinear interpolation."""

    axes: tuple
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        values = np.asarray(self.values, dtype=float)
        if values.shape != tuple(a.size for a in axes):
            raise ValueError("values shape must match the axes")
        origin = tuple(int(np.flatnonzero(a == 0.0)[0]) for a in axes)
        if values[origin] != 0.0:
            raise ValueError("field must vanish at the origin")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def extent(self) -> float:
        return float(min(a[-1] for a in self.axes))

    @cached_property
    def _interp(self):
        return RegularGridInterpolator(self.axes, self.values, bounds_error=True)

    def as_environment1d(self) -> Environment1D:
        if self.dim != 1:
            raise ValueError("only one-dimensional fields convert to Environment1D")
        return Environment1D(self.axes[0], self.values, dict(self.metadata))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            _check_inside(x, self.extent)
            return np.interp(x, self.axes[0], self.values)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points with trailing dimension {self.dim}")
        _check_inside(x, self.extent)
        return self._interp(x.reshape(-1, self.dim)).reshape(x.shape[:-1])

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        if self.dim != 1:
            raise ValueError("breakpoints are defined for one-dimensional fields")
        g = self.axes[0]
        return g[(g > lo) & (g < hi)]

    def extrema(self, a: float, b: float) -> tuple[float, float]:
        if self.dim == 1:
            return self.as_environment1d().extrema(a, b)
        if a < 0 or b < a:
            raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
        if b > self.extent * (1 + 1e-12):
            raise ExtentError(f"annulus radius {b} outside extent {self.extent}")
        X, Y = np.meshgrid(*self.axes, indexing="ij")
        rad = np.hypot(X, Y)
        mask = (rad >= a) & (rad <= b)
        parts = [self.values[mask]]
        h = min(np.min(np.diff(ax)) for ax in self.axes)
        for rho in {a, b}:
            if rho == 0:
                continue
            m = max(16, int(math.ceil(2 * math.pi * rho / h)) * 2)
            th = np.linspace(0, 2 * math.pi, m, endpoint=False)
            pts = np.stack([rho * np.cos(th), rho * np.sin(th)], axis=-1)
            parts.append(self._interp(np.clip(pts, -self.extent, self.extent)))
        allv = np.concatenate(parts)
        return float(allv.max()), float(allv.min())


class GaussianFieldSampler:
    """Factorizes the kernel covariance on a grid once and draws exact samples."""

    def __init__(self, kernel, spec: GridSpec):
        self.kernel: Kernel = get_kernel(kernel)
        if self.kernel.dim != spec.d:
            raise ValueError(f"kernel {self.kernel.name} is {self.kernel.dim}-D, grid is {spec.d}-D")
        self.spec = spec
        self.axes = spec.axes()
        mesh = np.meshgrid(*self.axes, indexing="ij")
        self.shape = mesh[0].shape
        if spec.d == 1:
            pts = mesh[0].ravel()
            cov = self.kernel(pts[:, None], pts[None, :])
        else:
            pts = np.stack([m.ravel() for m in mesh], axis=-1)
            cov = self.kernel(pts[:, None, :], pts[None, :, :])
        cov = 0.5 * (cov + cov.T)
        self.factor, self.active, self.method = factorize_covariance(cov)

    def sample_values(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        total = int(np.prod(self.shape))
        out = np.zeros((n, total))
        if self.factor.shape[1]:
            z = rng.standard_normal((n, self.factor.shape[1]))
            out[:, self.active] = z @ self.factor.T
        return out.reshape((n,) + self.shape)

    def sample(self, seed: int) -> GridEnvironment:
        from ..rng import TAG_ENV, substream

        vals = self.sample_values(substream(seed, TAG_ENV), 1)[0]
        meta = {"law": "gaussian", "kernel": self.kernel.name, "L": self.spec.L,
                "h": self.spec.h, "d": self.spec.d, "seed": seed, "factorization": self.method}
        return GridEnvironment(self.axes, vals, meta)


def factorize_covariance(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray, str]:
    """Return ``(F, active, method)`` with ``F F^T`` equal to the active block.

    Rows with vanishing variance (e.g. the origin) are dropped; they must be
    zero rows for a PSD matrix and are sampled as exact zeros.
    """
    diag = np.diag(cov)
    scale = float(np.max(np.abs(cov))) if cov.size else 0.0
    if scale == 0.0:
        return np.zeros((cov.shape[0], 0))[:0], np.zeros(cov.shape[0], dtype=bool), "zero"
    if np.min(diag) < -PSD_TOL * scale:
        raise FactorizationError("kernel has negative variance on the grid")
    active = diag > 1e-14 * scale
    block = cov[np.ix_(active, active)]
    inactive_rows = cov[np.ix_(~active, active)]
    if inactive_rows.size and np.max(np.abs(inactive_rows)) > PSD_TOL * scale:
        raise FactorizationError("zero-variance node has nonzero covariance: kernel not PSD")
    try:
        F = linalg.cholesky(block + JITTER * scale * np.eye(block.shape[0]), lower=True)
        return F, active, "cholesky"
    except linalg.LinAlgError:
        pass
    vals, vecs = linalg.eigh(block)
    if vals[0] < -PSD_TOL * scale:
        raise FactorizationError(f"kernel not PSD on the grid (min eigenvalue {vals[0]:.3e})")
    F = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return F, active, "eigh"


def sample_gaussian_field(kernel, spec: GridSpec, seed: int) -> GridEnvironment:
    return GaussianFieldSampler(kernel, spec).sample(seed)
