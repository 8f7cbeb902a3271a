"""Lévy triplets and one-sided path sampling on a uniform grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

# jump classes of the three-part decomposition
CLASS_LARGE_POSITIVE = 1   # size > eps
CLASS_MIDDLE = 2           # size in [-1, eps]
CLASS_LARGE_NEGATIVE = 3   # size < -1


@dataclass(frozen=True)
class JumpLaw:
    """Jump-size distribution of one compound-Poisson component.

    ``fixed``: always ``loc``; ``exponential``: ``loc + Exp(scale)``;
    ``uniform``: ``U(loc, loc + scale)``; ``normal``: ``N(loc, scale^2)``.
    """

    kind: str = "fixed"
    loc: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "exponential", "uniform", "normal"):
            raise ValueError(f"unknown jump law {self.kind!r}")
        if self.kind != "fixed" and self.scale <= 0:
            raise ValueError("jump law scale must be positive")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(n, float(self.loc))
        if self.kind == "exponential":
            return self.loc + rng.exponential(self.scale, n)
        if self.kind == "uniform":
            return rng.uniform(self.loc, self.loc + self.scale, n)
        return rng.normal(self.loc, self.scale, n)

    def charges_positive(self) -> bool:
        if self.kind == "fixed":
            return self.loc > 0
        if self.kind == "uniform":
            return self.loc + self.scale > 0
        return True


@dataclass(frozen=True)
class LevyTriplet:
    """Gaussian coefficient, drift and jump specification of a Lévy process.

    Jumps are either strictly stable (``stable_index`` set) or a finite list
    of compound-Poisson components ``(rate, JumpLaw)``.  ``stable_index == 2``
    denotes a standard Brownian part (unit variance per unit length).
    """

    gaussian_var: float = 0.0
    drift: float = 0.0
    stable_index: float | None = None
    stable_skew: float = 0.0
    stable_scale: float = 1.0
    compound: tuple = field(default_factory=tuple)
    eps: float = 1.0

    def __post_init__(self):
        if self.gaussian_var < 0:
            raise ValueError("gaussian variance coefficient must be >= 0")
        if self.stable_index is not None:
            if not 0 < self.stable_index <= 2:
                raise ValueError(f"stable index must lie in (0, 2], got {self.stable_index}")
            if not -1 <= self.stable_skew <= 1:
                raise ValueError("stable skewness must lie in [-1, 1]")
            if self.stable_scale <= 0:
                raise ValueError("stable scale must be positive")
        comps = tuple((float(rate), law) for rate, law in self.compound)
        for rate, law in comps:
            if rate < 0:
                raise ValueError(f"compound-Poisson rate must be >= 0, got {rate}")
            if not isinstance(law, JumpLaw):
                raise TypeError("compound components are (rate, JumpLaw) pairs")
        object.__setattr__(self, "compound", comps)
        if not 0 < self.eps <= 1:
            raise ValueError("split threshold eps must lie in (0, 1]")

    @property
    def exponent(self) -> float:
        """Index alpha_i: the stable index, 2 for purely Gaussian laws."""
        if self.stable_index is not None:
            return float(self.stable_index)
        return 2.0

    @property
    def is_brownian(self) -> bool:
        no_jumps = all(rate == 0 for rate, _ in self.compound)
        if self.stable_index is not None:
            return self.stable_index == 2 and no_jumps
        return self.gaussian_var > 0 and no_jumps

    def has_positive_jumps(self) -> bool:
        if self.stable_index is not None and self.stable_index < 2 and self.stable_skew > -1:
            return True
        return any(rate > 0 and law.charges_positive() for rate, law in self.compound)

    def jump_class(self, sizes: np.ndarray) -> np.ndarray:
        sizes = np.asarray(sizes, dtype=float)
        return np.where(sizes > self.eps, CLASS_LARGE_POSITIVE,
                        np.where(sizes < -1.0, CLASS_LARGE_NEGATIVE, CLASS_MIDDLE))


def levy_side_rows(triplet: LevyTriplet, rng: np.random.Generator, N: int, h: float,
                   batch: int, record: bool = False):
    """Sample ``batch`` one-sided paths at nodes ``0, h, ..., N h``.

    Paths are right-continuous: the value at node ``i`` includes every jump at
    time ``t <= i h``.  With ``record`` the compound-Poisson jumps are returned
    as ``(row, time, size, class)`` arrays.
    """
    incr = np.zeros((batch, N + 1))
    if triplet.gaussian_var > 0:
        incr[:, 1:] += math.sqrt(triplet.gaussian_var * h) * rng.standard_normal((batch, N))
    if triplet.drift != 0:
        incr[:, 1:] += triplet.drift * h
    if triplet.stable_index is not None:
        a = triplet.stable_index
        if a == 2:
            incr[:, 1:] += triplet.stable_scale * math.sqrt(h) * rng.standard_normal((batch, N))
        else:
            incr[:, 1:] += stats.levy_stable.rvs(
                a, triplet.stable_skew, loc=0.0, scale=triplet.stable_scale * h ** (1.0 / a),
                size=(batch, N), random_state=rng)
    rec_rows, rec_t, rec_s = [], [], []
    span = N * h
    for rate, law in triplet.compound:
        if rate == 0:
            continue
        counts = rng.poisson(rate * span, size=batch)
        total = int(counts.sum())
        rows = np.repeat(np.arange(batch), counts)
        times = rng.uniform(0.0, span, total)
        sizes = law.sample(rng, total)
        idx = np.clip(np.ceil(times / h - 1e-12).astype(np.int64), 1, N)
        np.add.at(incr, (rows, idx), sizes)
        if record:
            rec_rows.append(rows)
            rec_t.append(times)
            rec_s.append(sizes)
    paths = np.cumsum(incr, axis=1)
    paths[:, 0] = 0.0
    if not record:
        return paths
    if rec_t:
        rows = np.concatenate(rec_rows)
        times = np.concatenate(rec_t)
        sizes = np.concatenate(rec_s)
    else:
        rows = np.empty(0, dtype=np.int64)
        times = np.empty(0)
        sizes = np.empty(0)
    order = np.lexsort((times, rows))
    jumps = {
        "row": rows[order],
        "time": times[order],
        "size": sizes[order],
        "class": triplet.jump_class(sizes[order]),
    }
    return paths, jumps
