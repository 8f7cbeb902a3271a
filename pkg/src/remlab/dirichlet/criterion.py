"""Product-recurrence criterion over independent components."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bump import BumpProfile
from .index import DEFAULT_N_MAX, LevelTable, is_found
from .quadrature import QuadratureSpec


@dataclass(frozen=True)
class ComponentSpec:
    """One factor of a product process.

    ``theta`` is the exponent of the reference measure ``e^{-theta w} dx``;
    ``energy_theta`` the exponent of the form weight.  A time change by
    ``e^{-w}`` changes the measure but not the form, so the Brox component of
    a product uses ``theta = 2`` with ``energy_theta = 1``.
    """

    env: object
    theta: float = 1.0
    energy_theta: float = 1.0

    def __post_init__(self):
        if self.theta < 1 or self.energy_theta <= 0:
            raise ValueError("component weight exponents must satisfy theta >= 1, energy_theta > 0")

    @property
    def dim(self) -> int:
        return self.env.dim

    @classmethod
    def time_changed(cls, env) -> "ComponentSpec":
        return cls(env, theta=2.0, energy_theta=1.0)


@dataclass(frozen=True)
class CriterionPoint:
    k: float
    indices: tuple
    masses: tuple
    raw: float          # (1/k) prod M_i
    value: float        # (N/k) prod M_i
    product_energy: float
    exhausted: tuple    # component positions whose index is beyond the horizon

    @property
    def complete(self) -> bool:
        return not self.exhausted


@dataclass
class CriterionResult:
    points: list
    n_components: int
    metadata: dict = field(default_factory=dict)

    @property
    def ks(self) -> np.ndarray:
        return np.array([p.k for p in self.points], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value if p.complete else np.nan for p in self.points])

    @property
    def raw(self) -> np.ndarray:
        return np.array([p.raw if p.complete else np.nan for p in self.points])

    @property
    def complete(self) -> bool:
        return all(p.complete for p in self.points)

    def decreasing_from(self, start: int = 0) -> bool:
        """Strictly decreasing from position ``start`` to the end."""
        v = self.values[start:]
        return bool(np.all(np.isfinite(v)) and np.all(np.diff(v) < 0))

    def ratio(self, reference: int = 0) -> float:
        """Final value over the value at position ``reference``."""
        v = self.values
        return float(v[-1] / v[reference])


def product_criterion(components: Sequence[ComponentSpec], k_grid: Sequence[float],
                      profile: BumpProfile | None = None, quad: QuadratureSpec | None = None,
                      n_max: int = DEFAULT_N_MAX, tables: Sequence[LevelTable] | None = None
                      ) -> CriterionResult:
    """Per ``k``: component indices ``n_i(k)``, masses and ``(N/k) prod_i M_i``.

    ``product_energy`` is the form of the tensor product of the bumps,
    ``sum_i E_i prod_{j != i} M_j``; it never exceeds ``(N/k) prod_i M_i``
    when every index is found.
    """
    if not components:
        raise ValueError("need at least one component")
    profile = profile or BumpProfile()
    if tables is None:
        tables = [LevelTable(c.env, profile.with_dim(c.dim), quad, c.theta, c.energy_theta, n_max)
                  for c in components]
    N = len(components)
    points = []
    for k in k_grid:
        idx, masses, energies, missing = [], [], [], []
        for i, t in enumerate(tables):
            nk = t.index(k)
            idx.append(nk if is_found(nk) else None)
            if is_found(nk):
                lv = t.level(nk)
                masses.append(lv.mass)
                energies.append(lv.energy)
            else:
                missing.append(i)
                masses.append(math.nan)
                energies.append(math.nan)
        prod = math.prod(masses)
        pe = sum(energies[i] * math.prod(m for j, m in enumerate(masses) if j != i)
                 for i in range(N))
        points.append(CriterionPoint(float(k), tuple(idx), tuple(masses), prod / k, N * prod / k,
                                     pe, tuple(missing)))
    meta = {"components": [{"theta": c.theta, "energy_theta": c.energy_theta,
                            "env": getattr(c.env, "metadata", {})} for c in components]}
    return CriterionResult(points, N, meta)
