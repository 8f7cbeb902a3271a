"""Probability and kernel conditions on environment laws.

Event probabilities are Monte Carlo frequencies over batched environment
samples, reported with a 99% Wilson interval; positivity claims rest on the
lower end of that interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize

from .env.core import ProductEnvironment, annulus_extrema, scale_transform
from .env.kernels import get_kernel
from .env.laws import EnvironmentLaw, LevyLaw
from .env.levy import LevyTriplet
from .io import write_csv
from .rng import DEFAULT_CHUNK, TAG_EVENT, map_chunks, substream, wilson_interval

EVENT_HEADER = ["trials", "successes", "p_hat", "wilson_lo", "wilson_hi", "seed"]
MIN_TRIALS = 1000
RELATION_TOL = 1e-9


@dataclass(frozen=True)
class EventEstimate:
    trials: int
    successes: int
    seed: int
    law: dict = field(default_factory=dict)
    label: str = ""
    warning: str | None = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials, 0.99)

    @property
    def wilson_lo(self) -> float:
        return self.interval[0]

    @property
    def wilson_hi(self) -> float:
        return self.interval[1]

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1 - p) / self.trials) if self.trials else math.inf

    @property
    def positive(self) -> bool:
        return self.wilson_lo > 0

    def row(self) -> list:
        return [self.trials, self.successes, self.p_hat, self.wilson_lo, self.wilson_hi, self.seed]

    def write(self, path) -> None:
        write_csv(path, EVENT_HEADER, [self.row()])


# ---------------------------------------------------------------------------
# per-trial annulus statistics shared by the event estimators

@dataclass(frozen=True)
class AnnulusStats:
    """Per-trial ``inf w(1,r^2)``, ``sup w(1,r^2)`` and ``inf w(0,1)``."""

    low_outer: np.ndarray
    high_outer: np.ndarray
    low_inner: np.ndarray

    @property
    def spread(self) -> np.ndarray:
        return self.high_outer - self.low_inner


def annulus_stats(law: EnvironmentLaw, r: float, trials: int, seed: int, h: float = 1e-3,
                  chunk: int = DEFAULT_CHUNK, workers: int = 1) -> AnnulusStats:
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    R = r * r

    def run(i, lo, hi):
        grid, rows = law.sample_rows(substream(seed, TAG_EVENT, i), R, h, hi - lo)
        ho, lo_o = annulus_extrema(grid, rows, 1.0, R)
        _, lo_i = annulus_extrema(grid, rows, 0.0, 1.0)
        return lo_o, ho, lo_i

    parts = map_chunks(run, trials, chunk, workers)
    return AnnulusStats(*(np.concatenate([p[j] for p in parts]) for j in range(3)))


def _estimate(mask: np.ndarray, seed: int, law: EnvironmentLaw, label: str, **extra) -> EventEstimate:
    return EventEstimate(int(mask.size), int(np.count_nonzero(mask)), seed,
                         law.describe(**extra), label)


def estimate_event_RE1(law: EnvironmentLaw, r: float, trials: int, seed: int, h: float = 1e-3,
                       chunk: int = DEFAULT_CHUNK, workers: int = 1) -> EventEstimate:
    """Frequency of ``sup w(1,r^2) - inf w(0,1) < 2 inf w(1,r^2)``."""
    st = annulus_stats(law, r, trials, seed, h, chunk, workers)
    return _estimate(st.spread < 2 * st.low_outer, seed, law, "RE1", event_r=r, h=h)


def estimate_event_mainassump(law: EnvironmentLaw, r: float, a: float, b: float, trials: int,
                              seed: int, h: float = 1e-3, chunk: int = DEFAULT_CHUNK,
                              workers: int = 1) -> EventEstimate:
    """Frequency of ``inf w(1,r^2) > a`` and ``sup w(1,r^2) - inf w(0,1) < b``."""
    if not 0 < a < b:
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    st = annulus_stats(law, r, trials, seed, h, chunk, workers)
    return _estimate((st.low_outer > a) & (st.spread < b), seed, law, "mainassump",
                     event_r=r, a=a, b=b, h=h)


def estimate_event_ahat(law: EnvironmentLaw, r: float, ahat: float, eps: float, trials: int,
                        seed: int, h: float = 1e-3, chunk: int = DEFAULT_CHUNK,
                        workers: int = 1) -> EventEstimate:
    """Frequency of ``inf w(1,r^2) > ahat`` and ``sup w(1,r^2) - inf w(0,1) < ahat (1 + eps)``."""
    if not (ahat > 0 and eps > 0):
        raise ValueError("ahat and eps must be positive")
    st = annulus_stats(law, r, trials, seed, h, chunk, workers)
    return _estimate((st.low_outer > ahat) & (st.spread < ahat * (1 + eps)), seed, law,
                     "ahat", event_r=r, ahat=ahat, eps=eps, h=h)


@dataclass(frozen=True)
class CombinedSearch:
    re1: EventEstimate
    candidates: list          # (a_tilde, EventEstimate) in scan order
    found: tuple | None       # first (a_tilde, eps, b, EventEstimate) with positive lower bound


def rational_grid(lo: float = 0.05, hi: float = 3.0, step: Fraction = Fraction(1, 20)) -> list[Fraction]:
    out, a = [], Fraction(lo).limit_denominator(1000)
    while a <= hi:
        out.append(a)
        a += step
    return out


def combined_search(law: EnvironmentLaw, r: float, trials: int, seed: int, grid=None,
                    eps_fraction: float = 0.1, h: float = 1e-3, chunk: int = DEFAULT_CHUNK,
                    workers: int = 1) -> CombinedSearch:
    """Scan rational ``a~`` for a positive ``mainassump(a~, 2 a~ - eps)``, ``eps = a~/10``.

    All candidates reuse the same per-trial statistics, so they are evaluated
    on one common set of sampled environments.
    """
    st = annulus_stats(law, r, trials, seed, h, chunk, workers)
    re1 = _estimate(st.spread < 2 * st.low_outer, seed, law, "RE1", event_r=r, h=h)
    cands, found = [], None
    for at in grid or rational_grid():
        a = float(at)
        eps = eps_fraction * a
        b = 2 * a - eps
        est = _estimate((st.low_outer > a) & (st.spread < b), seed, law, "mainassump",
                        event_r=r, a=a, b=b, h=h)
        cands.append((at, est))
        if found is None and est.positive:
            found = (at, eps, b, est)
    return CombinedSearch(re1, cands, found)


# ---------------------------------------------------------------------------
# Lévy one-sided event

def estimate_levy_event(triplet: LevyTriplet, M: float, a: float, trials: int, seed: int,
                        h: float = 1e-3, chunk: int = DEFAULT_CHUNK, workers: int = 1) -> EventEstimate:
    """Frequency of ``inf w(0,1) > -M`` and ``min(w(-1), w(1)) > a``."""
    if not (M > 0 and a > 0):
        raise ValueError("M and a must be positive")
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    law = LevyLaw(triplet=triplet)
    warning = None
    gaussian = triplet.gaussian_var > 0 or triplet.stable_index == 2
    if not (gaussian or triplet.has_positive_jumps()):
        warning = "law has neither a Gaussian exponent nor positive jumps; positivity is not guaranteed"

    def run(i, lo, hi):
        grid, rows = law.sample_rows(substream(seed, TAG_EVENT, i), 1.0, h, hi - lo)
        _, low = annulus_extrema(grid, rows, 0.0, 1.0)
        return (low > -M) & (np.minimum(rows[:, 0], rows[:, -1]) > a)

    mask = np.concatenate(map_chunks(run, trials, chunk, workers))
    return EventEstimate(int(mask.size), int(mask.sum()), seed,
                         law.describe(M=M, a=a, h=h), "levy", warning)


def levy_search_M(triplet: LevyTriplet, a: float, trials: int, seed: int,
                  Ms=(1.0, 2.0, 4.0, 8.0), **kw) -> list[tuple[float, EventEstimate]]:
    return [(M, estimate_levy_event(triplet, M, a, trials, seed, **kw)) for M in Ms]


# ---------------------------------------------------------------------------
# Gaussian kernel conditions

@dataclass(frozen=True)
class KernelIntegrals:
    sup_term: float
    inf_inner: float
    inf_annulus: float
    argsup: float
    arginf_annulus: float

    @property
    def holds(self) -> bool:
        return self.sup_term - self.inf_inner < 2 * self.inf_annulus

    def as_tuple(self):
        return self.sup_term, self.inf_inner, self.inf_annulus, self.holds


def _y_integral(K, x: float, R: float, order: int, panels: int) -> float:
    xi, wi = np.polynomial.legendre.leggauss(order)
    edges = np.unique(np.array([-R, -abs(x), 0.0, abs(x), R]))
    edges = np.unique(np.concatenate([np.linspace(lo, hi, panels + 1)
                                      for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]))
    lo, hi = edges[:-1, None], edges[1:, None]
    y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi
    return float(np.sum(0.5 * (hi - lo) * wi * K(np.full_like(y, x), y)))


def _extremum(f, lo: float, hi: float, mesh: int, sign: float) -> tuple[float, float]:
    """Extremum of ``f`` on ``[lo, hi]``: mesh scan then bounded refinement."""
    xs = np.linspace(lo, hi, mesh)
    vals = np.array([f(x) for x in xs])
    j = int(np.argmax(sign * vals))
    best_x, best = float(xs[j]), float(vals[j])
    a, b = xs[max(j - 1, 0)], xs[min(j + 1, mesh - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda x: -sign * f(x), bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12})
        if sign * (-sign * res.fun) > sign * best:
            best_x, best = float(res.x), float(-sign * res.fun)
    return best, best_x


def gauss_condition_integrals(kernel, r: float, quad=None, mesh: int = 201) -> KernelIntegrals:
    """Sup/inf of ``x -> int_{|y| <= r^2} K(x, y) dy`` over the three regions.

    One-dimensional kernels only; ``y`` is integrated by Gauss-Legendre on
    panels split at the kernel kinks ``0`` and ``+-x``.
    """
    from .dirichlet.quadrature import QuadratureSpec

    quad = quad or QuadratureSpec()
    K = get_kernel(kernel)
    if K.dim != 1:
        raise ValueError("kernel integrals are implemented for one-dimensional kernels")
    if not r > 1:
        raise ValueError("r must exceed 1")
    R = r * r
    order = max(quad.order, 8)
    panels = max(1, quad.resolution // 8)

    def F(x):
        return _y_integral(K, float(x), R, order, panels)

    sups, infs_a, infs_i = [], [], []
    for s in (1.0, -1.0):
        sups.append(_extremum(lambda x: F(s * x), 1.0, R, mesh, +1.0))
        infs_a.append(_extremum(lambda x: F(s * x), 1.0, R, mesh, -1.0))
        infs_i.append(_extremum(lambda x: F(s * x), 0.0, 1.0, mesh, -1.0))
    sup_term, argsup = max(sups)
    inf_ann, argann = min(infs_a)
    inf_in, _ = min(infs_i)
    if not all(math.isfinite(v) for v in (sup_term, inf_ann, inf_in)):
        raise ArithmeticError("kernel integral is not finite")
    return KernelIntegrals(sup_term, inf_in, inf_ann, argsup, argann)


@dataclass(frozen=True)
class DecayReport:
    terms: np.ndarray
    threshold: float

    @property
    def holds(self) -> bool:
        t = self.terms
        tail = t[len(t) // 2:]
        return bool(t[-1] <= self.threshold and np.all(np.diff(tail) <= 1e-15 * max(1.0, tail[0])))


def gauss_mixing_decay(kernel, r: float, alpha: float, n_max: int = 60, mesh: int = 64,
                       threshold: float = 1e-3) -> DecayReport:
    """``r^{-alpha n} sup_{x, y in D_1} K(r^n x, y)`` for ``n = 0..n_max``, ``D_1 = {1 <= |x| <= r}``."""
    K = get_kernel(kernel)
    if K.dim != 1:
        raise ValueError("decay check is implemented for one-dimensional kernels")
    side = np.linspace(1.0, r, mesh)
    pts = np.concatenate([-side[::-1], side])
    X, Y = np.meshgrid(pts, pts, indexing="ij")
    terms = np.array([r ** (-alpha * n) * float(np.max(K(r ** n * X, Y))) for n in range(n_max + 1)])
    return DecayReport(terms, threshold)


# ---------------------------------------------------------------------------
# sphere condition

@dataclass(frozen=True)
class SphereResult:
    holds: bool
    infimum: float
    direction: np.ndarray


def sphere_mesh(d: int, mesh: int) -> np.ndarray:
    if mesh < 8:
        raise ValueError("sphere mesh needs at least 8 directions")
    if d == 1:
        return np.array([[-1.0], [1.0]])
    if d == 2:
        th = 2 * math.pi * np.arange(mesh) / mesh
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    if d == 3:
        m = mesh * mesh
        i = np.arange(m) + 0.5
        z = 1 - 2 * i / m
        phi = math.pi * (1 + 5 ** 0.5) * i
        s = np.sqrt(1 - z * z)
        pts = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
        # the coordinate axes carry the extreme single-component values
        return np.concatenate([pts, np.eye(3), -np.eye(3)])
    rng = substream(0, TAG_EVENT, d)
    g = rng.standard_normal((mesh ** (d - 1), d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return np.concatenate([g, np.eye(d), -np.eye(d)])


def check_sphere_condition(env, a0: float, theta: float = 1.0, mesh: int = 64, d: int | None = None
                           ) -> SphereResult:
    """``inf_sigma sum_j w^j(theta sigma_j) > a0`` over a spherical mesh.

    ``env`` is a product environment (one component per coordinate) or a
    single one-dimensional environment used in every coordinate (``d``).
    """
    if a0 <= 0 or theta < 1:
        raise ValueError("need a0 > 0 and theta >= 1")
    if isinstance(env, ProductEnvironment):
        comps = env.components
    else:
        comps = (env,) * (d or 1)
    pts = sphere_mesh(len(comps), mesh)
    total = sum(np.asarray(c(theta * pts[:, j])) for j, c in enumerate(comps))
    j = int(np.argmin(total))
    return SphereResult(bool(total[j] > a0), float(total[j]), pts[j])


# ---------------------------------------------------------------------------
# subsequence of levels whose rescaled environment lies in the good set

@dataclass(frozen=True)
class LevelMembership:
    n: int
    valley_floor: float        # inf of T^n w over {1/r <= |x| <= r}
    valley_spread: float       # sup T^n w(1,r) - inf T^n w(0,1)
    member: bool
    relations: tuple           # slacks of the three implied relations on w itself
    relations_hold: bool


@dataclass(frozen=True)
class SubsequenceReport:
    r: float
    alpha: float
    a: float
    b: float
    levels: list

    @property
    def indices(self) -> list[int]:
        return [lv.n for lv in self.levels if lv.member]

    @property
    def all_relations_hold(self) -> bool:
        return all(lv.relations_hold for lv in self.levels if lv.member)


def select_subsequence(env, r: float, alpha: float, a: float, b: float, n_max: int = 8
                       ) -> SubsequenceReport:
    """Levels ``n <= n_max`` with ``T^n w`` in the good set, with the relations they imply."""
    if not 0 < a < b:
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    if r ** (n_max + 1) > env.extent * (1 + 1e-12):
        from .env.core import ExtentError
        raise ExtentError(f"levels up to {n_max} need extent {r ** (n_max + 1):.6g}")
    levels = []
    for n in range(1, n_max + 1):
        Tn = scale_transform(env, r, alpha, n)
        floor = Tn.extrema(1 / r, r)[1]
        spread = Tn.extrema(1.0, r)[0] - Tn.extrema(0.0, 1.0)[1]
        member = floor > a * r ** (-alpha) and spread < b * r ** (-alpha)
        scale = r ** (alpha * (n - 1))
        low_ball = env.extrema(0.0, r ** n)[1]
        s1 = env.extrema(r ** (n - 1), r ** (n + 1))[1] - a * scale
        s2 = b * scale - (env.extrema(r ** n, r ** (n + 1))[0] - low_ball)
        s3 = -abs(low_ball - env.extrema(0.0, r ** (n + 1))[1])
        ok = s1 > -RELATION_TOL and s2 > -RELATION_TOL and s3 >= -RELATION_TOL
        levels.append(LevelMembership(n, floor, spread, bool(member), (s1, s2, s3), bool(ok)))
    return SubsequenceReport(r, alpha, a, b, levels)
