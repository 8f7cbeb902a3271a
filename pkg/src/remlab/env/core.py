"""Realized environments (potentials) and the queries every other module uses.

An environment is anything with ``dim``, ``extent``, ``__call__`` and
``extrema``.  One-dimensional environments additionally expose
``breakpoints(lo, hi)``, the interpolation kinks quadrature must respect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

_EDGE_TOL = 1e-12


class ExtentError(ValueError):
    """Evaluation requested outside the sampled extent."""


def _check_inside(x: np.ndarray, L: float) -> None:
    if x.size and np.max(np.abs(x)) > L * (1 + _EDGE_TOL) + _EDGE_TOL:
        raise ExtentError(f"evaluation at |x|={np.max(np.abs(x)):.6g} outside extent {L:.6g}")


def _interp_weights(grid: np.ndarray, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    idx = np.clip(np.searchsorted(grid, pts, side="right") - 1, 0, grid.size - 2)
    t = (pts - grid[idx]) / (grid[idx + 1] - grid[idx])
    return idx, np.clip(t, 0.0, 1.0)


def annulus_extrema(
    grid: np.ndarray, values: np.ndarray, a: float, b: float
) -> tuple[np.ndarray, np.ndarray]:
    """Sup and inf of piecewise-linear rows over ``{a <= |x| <= b}``.

    ``values`` has shape ``(..., grid.size)``; the result has the leading shape.
    Nodes inside the closed annulus plus the interpolated values at ``±a`` and
    ``±b`` are scanned, which is exact for the linear interpolant.
    """
    if a < 0 or b < a:
        raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
    L = min(-grid[0], grid[-1])
    _check_inside(np.array([b]), L)
    absx = np.abs(grid)
    mask = (absx >= a) & (absx <= b)
    edges = np.unique(np.array([-b, -a, a, b], dtype=float))
    idx, t = _interp_weights(grid, edges)
    edge_vals = values[..., idx] * (1 - t) + values[..., idx + 1] * t
    parts = [edge_vals]
    if mask.any():
        parts.append(values[..., mask])
    allv = np.concatenate(parts, axis=-1)
    return allv.max(axis=-1), allv.min(axis=-1)


@dataclass(frozen=True, eq=False)
class Environment1D:
    """Piecewise-linear potential on a strictly increasing grid over [-L, L]."""

    grid: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    strict: bool = True

    dim = 1

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size < 3 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length >= 3")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not math.isclose(-grid[0], grid[-1], rel_tol=1e-9):
            raise ValueError("grid extent must be symmetric [-L, L]")
        zero = np.flatnonzero(grid == 0.0)
        if zero.size != 1:
            raise ValueError("grid must contain 0")
        if self.strict and values[zero[0]] != 0.0:
            raise ValueError("environment must vanish at the origin")
        if not np.all(np.isfinite(values)):
            raise ValueError("environment values must be finite")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls, f: Callable[[np.ndarray], np.ndarray], L: float, h: float,
        strict: bool = True, **metadata,
    ) -> "Environment1D":
        grid = uniform_grid(L, h)
        return cls(grid, np.asarray(f(grid), dtype=float) + 0.0 * grid,
                   metadata={"law": "function", "L": float(grid[-1]), "h": h, **metadata},
                   strict=strict)

    @property
    def extent(self) -> float:
        return float(self.grid[-1])

    @property
    def h(self) -> float:
        return float(np.min(np.diff(self.grid)))

    @property
    def origin_index(self) -> int:
        return int(np.flatnonzero(self.grid == 0.0)[0])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        _check_inside(x, self.extent)
        return np.interp(x, self.grid, self.values)

    def extrema(self, a: float, b: float) -> tuple[float, float]:
        hi, lo = annulus_extrema(self.grid, self.values, a, b)
        return float(hi), float(lo)

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        g = self.grid
        return g[(g > lo) & (g < hi)]

    def shifted(self, c: float) -> "Environment1D":
        """``w + c``; no longer pinned at the origin."""
        return Environment1D(self.grid, self.values + c, dict(self.metadata, shift=c), strict=False)

    def with_values(self, values: np.ndarray, **metadata) -> "Environment1D":
        return Environment1D(self.grid, values, dict(self.metadata, **metadata), strict=self.strict)


@dataclass(frozen=True)
class ZeroEnvironment:
    """w identically 0 on R^dim (a Brownian component)."""

    dim: int = 1
    extent: float = math.inf
    metadata: dict = field(default_factory=lambda: {"law": "zero"})

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = x.shape if self.dim == 1 else x.shape[:-1]
        if self.dim == 1:
            _check_inside(x, self.extent)
        else:
            _check_inside(np.linalg.norm(x, axis=-1), self.extent)
        return np.zeros(shape)

    def extrema(self, a: float, b: float) -> tuple[float, float]:
        if a < 0 or b < a:
            raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
        _check_inside(np.array([b]), self.extent)
        return 0.0, 0.0

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        return np.empty(0)


@dataclass(frozen=True)
class ScaledEnvironment:
    """Lazy view ``x -> r^(-alpha n) w(r^n x)`` of a base environment."""

    base: object
    r: float
    alpha: float
    n: int

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def factor(self) -> float:
        return self.r ** (-self.alpha * self.n)

    @property
    def stretch(self) -> float:
        return self.r ** self.n

    @property
    def extent(self) -> float:
        return self.base.extent / self.stretch

    @property
    def metadata(self) -> dict:
        return dict(getattr(self.base, "metadata", {}), scaled=(self.r, self.alpha, self.n))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.factor * self.base(self.stretch * x)

    def extrema(self, a: float, b: float) -> tuple[float, float]:
        hi, lo = self.base.extrema(self.stretch * a, self.stretch * b)
        return self.factor * hi, self.factor * lo

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        return self.base.breakpoints(self.stretch * lo, self.stretch * hi) / self.stretch


def scale_transform(env, r: float, alpha: float, n: int) -> object:
    """``T^n w`` with ``(T w)(x) = r^(-alpha) w(r x)``, evaluated lazily."""
    if r <= 1 or alpha <= 0:
        raise ValueError("scale_transform needs r > 1 and alpha > 0")
    if n < 0 or int(n) != n:
        raise ValueError("n must be a non-negative integer")
    if n == 0:
        return env
    return ScaledEnvironment(env, float(r), float(alpha), int(n))


@dataclass(frozen=True)
class ProductEnvironment:
    """w(x) = sum_i w^i(x^(i)) for independent one-dimensional components."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("product environment needs at least one component")
        if any(getattr(c, "dim", 1) != 1 for c in comps):
            raise ValueError("product components must be one-dimensional")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def extent(self) -> float:
        return min(c.extent for c in self.components)

    @property
    def metadata(self) -> dict:
        return {"law": "product", "components": [getattr(c, "metadata", {}) for c in self.components]}

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points with trailing dimension {self.dim}")
        return sum(c(x[..., i]) for i, c in enumerate(self.components))

    def extrema(self, a: float, b: float) -> tuple[float, float]:
        if a < 0 or b < a:
            raise ValueError(f"need 0 <= a <= b, got a={a}, b={b}")
        _check_inside(np.array([b]), self.extent)
        return _product_extrema(self.components, a, b)


def _component_nodes(c, b: float) -> np.ndarray:
    pts = np.concatenate([np.asarray(c.breakpoints(-b, b), dtype=float), [-b, 0.0, b]])
    return np.unique(pts)


def _product_extrema(comps: Sequence, a: float, b: float) -> tuple[float, float]:
    if len(comps) == 1:
        return comps[0].extrema(a, b)
    first, rest = comps[0], comps[1:]
    xs = _component_nodes(first, b)
    if a > 0:
        xs = np.unique(np.concatenate([xs, [-a, a]]))
    f1 = first(xs)
    hi, lo = -math.inf, math.inf
    for x1, v1 in zip(xs, f1):
        outer2 = b * b - x1 * x1
        if outer2 < 0:
            continue
        inner = math.sqrt(max(a * a - x1 * x1, 0.0))
        outer = math.sqrt(outer2)
        h2, l2 = _product_extrema(rest, min(inner, outer), outer)
        hi = max(hi, v1 + h2)
        lo = min(lo, v1 + l2)
    return float(hi), float(lo)


def product_environment(components: Sequence) -> ProductEnvironment:
    return ProductEnvironment(tuple(components))


def extrema(env, a: float, b: float) -> tuple[float, float]:
    """(sup, inf) of the environment over the closed annulus a <= |x| <= b."""
    return env.extrema(a, b)


def uniform_grid(L: float, h: float, max_nodes: int = 50_000_000) -> np.ndarray:
    """Symmetric grid ``h * [-N..N]`` with ``N = ceil(L / h)``."""
    if not (L > 0 and h > 0):
        raise ValueError("extent L and step h must be positive")
    if h >= L:
        raise ValueError("step h must be smaller than the extent L")
    N = int(math.ceil(L / h - 1e-9))
    if 2 * N + 1 > max_nodes:
        raise MemoryError(f"grid with {2 * N + 1} nodes exceeds the budget of {max_nodes}")
    return h * np.arange(-N, N + 1, dtype=float)
