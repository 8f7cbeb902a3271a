"""Empirical recurrence diagnostics built on the path simulators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..io import write_csv
from ..rng import wilson_interval
from .paths import PATH_CHUNK, Component, simulate_product, simulate_time_change

RETURN_HEADER = ["trials", "returns", "frequency", "wilson_lo", "wilson_hi", "seed"]


@dataclass
class ReturnStats:
    trials: int
    returns: int
    first_times: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def frequency(self) -> float:
        return self.returns / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.returns, self.trials, 0.99)

    @property
    def half_width(self) -> float:
        lo, hi = self.interval
        return 0.5 * (hi - lo)

    def row(self) -> list:
        lo, hi = self.interval
        return [self.trials, self.returns, self.frequency, lo, hi, self.seed]

    def write(self, path) -> None:
        write_csv(path, RETURN_HEADER, [self.row()])


def estimate_return(components, start, rho: float, t0: float, T: float, trials: int, seed: int,
                    dt: float = 0.01, chunk: int = PATH_CHUNK) -> ReturnStats:
    """Fraction of product paths inside ``{|x| <= rho}`` at some grid time in ``(t0, T]``.

    Paths are monitored on the grid ``dt, 2 dt, ..., T``; excursions into the
    ball between grid times are missed, so frequencies are slight
    underestimates for every configuration alike.
    """
    start = np.asarray(start, dtype=float)
    if not rho > 0:
        raise ValueError("ball radius must be positive")
    if not T > t0 >= 0:
        raise ValueError("need 0 <= t0 < T")
    if np.linalg.norm(start) <= rho:
        raise ValueError("start must lie outside the target ball")
    nrec = int(round(T / dt))
    rec = dt * np.arange(1, nrec + 1)
    window = rec > t0
    first = np.full(trials, np.nan)
    for ci, lo in enumerate(range(0, trials, chunk)):
        n = min(chunk, trials - lo)
        ps = simulate_product(components, T, seed=seed, trials=n, record_times=rec,
                              start=start, chunk=n, stream=(ci,))
        inside = np.linalg.norm(ps.states[:, 1:, :], axis=-1) <= rho
        inside &= window
        hit = inside.any(axis=1)
        idx = np.argmax(inside, axis=1)
        first[lo:lo + n] = np.where(hit, rec[idx], np.nan)
    returns = int(np.count_nonzero(~np.isnan(first)))
    return ReturnStats(trials, returns, first, seed,
                       {"start": start.tolist(), "rho": rho, "t0": t0, "T": T, "dt": dt})


# ---------------------------------------------------------------------------
# growth of |X(t)| on a log-log scale

@dataclass(frozen=True)
class GrowthFit:
    times: np.ndarray
    medians: np.ndarray
    slope: float
    stderr: float
    exhausted: int


def _fit(times, medians, exhausted=0) -> GrowthFit:
    res = stats.linregress(np.log(times), np.log(medians))
    return GrowthFit(np.asarray(times), np.asarray(medians), float(res.slope), float(res.stderr),
                     int(exhausted))


def brownian_growth(times, paths: int, seed: int) -> GrowthFit:
    """Median ``|B(t)|`` of ``paths`` exact Brownian paths at ``times``."""
    ps = simulate_product([Component.bm()], float(times[-1]), seed=seed, trials=paths,
                          record_times=times)
    return _fit(times, np.median(np.abs(ps.states[:, 1:, 0]), axis=0))


def diffusion_growth(envs, times, paths_per_env: int, seed: int, q: int = 3,
                     dt_clock: float = 1.0, dx_max: float = 0.05) -> GrowthFit:
    """Pooled median ``|X(t)|`` over sampled environments, ``paths_per_env`` each."""
    cols, exhausted = [], 0
    for e, env in enumerate(envs):
        ps = simulate_time_change(env, q, float(times[-1]), dt_clock, seed, paths_per_env, times,
                                  step="adaptive", dx_max=dx_max, chunk=paths_per_env, stream=(e,))
        cols.append(np.abs(ps.states[:, 1:, 0]))
        exhausted += int(ps.exhausted.sum())
    return _fit(times, np.median(np.concatenate(cols), axis=0), exhausted)


def slope_gap(slow: GrowthFit, fast: GrowthFit) -> tuple[float, float]:
    """Slope difference ``fast - slow`` and its combined standard error."""
    return fast.slope - slow.slope, math.hypot(fast.stderr, slow.stderr)
