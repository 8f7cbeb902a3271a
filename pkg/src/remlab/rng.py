"""Seeded substreams and small Monte Carlo statistics helpers.

Every random draw in the package goes through :func:`substream`, which keys a
PCG64 generator by ``(seed, *key)`` via :class:`numpy.random.SeedSequence`.
Trials are grouped in fixed-size chunks and each chunk owns one substream, so
results depend on ``(seed, trials, chunk)`` only and never on worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np
from scipy import stats

T = TypeVar("T")

DEFAULT_CHUNK = 4096

# stream tags keep substreams of different subsystems disjoint
TAG_ENV = 1
TAG_EVENT = 2
TAG_PATH = 3
TAG_MC_QUAD = 4


def substream(seed: int, *key: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_ranges(trials: int, chunk: int = DEFAULT_CHUNK) -> list[tuple[int, int]]:
    if trials < 0 or chunk <= 0:
        raise ValueError("trials must be >= 0 and chunk > 0")
    return [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]


def map_chunks(
    fn: Callable[[int, int, int], T],
    trials: int,
    chunk: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> list[T]:
    """Apply ``fn(chunk_index, lo, hi)`` to every chunk, results in chunk order."""
    ranges = chunk_ranges(trials, chunk)
    if workers <= 1 or len(ranges) <= 1:
        return [fn(i, lo, hi) for i, (lo, hi) in enumerate(ranges)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, i, lo, hi) for i, (lo, hi) in enumerate(ranges)]
        return [f.result() for f in futures]


def wilson_interval(successes: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    z = stats.norm.ppf(0.5 + level / 2.0)
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = max(0.0, centre - half)
    hi = min(1.0, centre + half)
    # exact endpoints at the boundary cases
    if successes == 0:
        lo = 0.0
    if successes == trials:
        hi = 1.0
    return lo, hi


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> float:
    return float(stats.ks_2samp(np.asarray(a), np.asarray(b)).statistic)
