"""Covariance kernels, registered by name.

Kernels take point arrays ``x`` and ``y`` of shape ``(..., d)`` (or ``(...)``
when ``d == 1``) and broadcast.  Every shipped kernel satisfies
``K(0, .) = 0`` so sampled fields vanish at the origin.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator


@dataclass(frozen=True)
class Kernel:
    name: str
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dim: int = 1

    def __call__(self, x, y) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def _norm(x: np.ndarray, dim: int) -> np.ndarray:
    return np.abs(x) if dim == 1 else np.linalg.norm(x, axis=-1)


def brox_kernel(x, y):
    """Two-sided Brownian motion: (|x| ^ |y|) 1{xy > 0}."""
    return np.where(x * y > 0, np.minimum(np.abs(x), np.abs(y)), 0.0)


def levy_brownian_kernel(dim: int) -> Callable:
    def k(x, y):
        return 0.5 * (_norm(x, dim) + _norm(y, dim) - _norm(x - y, dim))
    return k


def zero_kernel(dim: int = 1) -> Callable:
    def k(x, y):
        if dim == 1:
            return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))
        return np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(y)[:-1]))
    return k


def power_kernel(alpha: float) -> Callable:
    """Toy kernel |x|^alpha; not positive semidefinite, used for decay checks."""
    def k(x, y):
        return np.abs(x) ** alpha + 0.0 * y
    return k


def grid_kernel_from_csv(path: str | Path) -> Kernel:
    """Tabulated one-dimensional kernel from a CSV with header ``x,y,K``."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "y", "K"]:
            raise ValueError("grid kernel CSV must have header x,y,K")
        for row in reader:
            rows.append((float(row["x"]), float(row["y"]), float(row["K"])))
    data = np.array(rows)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != data.shape[0]:
        raise ValueError("grid kernel CSV must list a full tensor grid")
    table = np.full((xs.size, ys.size), np.nan)
    ix = np.searchsorted(xs, data[:, 0])
    iy = np.searchsorted(ys, data[:, 1])
    table[ix, iy] = data[:, 2]
    interp = RegularGridInterpolator((xs, ys), table, bounds_error=True)

    def k(x, y):
        x, y = np.broadcast_arrays(x, y)
        pts = np.stack([x.ravel(), y.ravel()], axis=-1)
        return interp(pts).reshape(x.shape)

    return Kernel(f"csv:{Path(path).name}", k, 1)


_REGISTRY: dict[str, Kernel] = {
    "brox": Kernel("brox", brox_kernel, 1),
    "zero": Kernel("zero", zero_kernel(1), 1),
    "zero2": Kernel("zero2", zero_kernel(2), 2),
    "levy_brownian": Kernel("levy_brownian", levy_brownian_kernel(1), 1),
    "levy_brownian2": Kernel("levy_brownian2", levy_brownian_kernel(2), 2),
}


def get_kernel(name_or_kernel) -> Kernel:
    if isinstance(name_or_kernel, Kernel):
        return name_or_kernel
    name = str(name_or_kernel)
    if name in _REGISTRY:
        return _REGISTRY[name]
    if name.endswith(".csv"):
        return grid_kernel_from_csv(name)
    raise KeyError(f"unknown kernel {name!r}; known: {sorted(_REGISTRY)}")


def register_kernel(kernel: Kernel) -> None:
    _REGISTRY[kernel.name] = kernel


def kernel_names() -> list[str]:
    return sorted(_REGISTRY)
