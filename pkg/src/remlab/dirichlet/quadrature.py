"""Weighted mass and energy integrals of the scaled bumps.

Schemes:

``gauss``     Gauss-Legendre on cells aligned with the environment's
              interpolation kinks and with the bump's transition radii.  On
              a piecewise-linear potential the integrand is smooth inside each
              cell, so a few nodes per cell give near machine precision.
``midpoint``  Uniform tensor midpoint cells, no alignment.
``mc``        Stratified Monte Carlo on the bounding box (``d >= 4``).

``auto`` picks ``gauss`` for ``d <= 3`` and ``mc`` above.  A ``w = 0``
environment is integrated radially in every dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..env.core import ExtentError, ProductEnvironment, ZeroEnvironment
from ..env.gaussian import GridEnvironment
from ..rng import TAG_MC_QUAD, substream
from .bump import BumpProfile, unit_ball_volume

SCHEMES = ("auto", "gauss", "midpoint", "mc")
MIN_MC_SAMPLES = 10_000


class QuadratureError(ArithmeticError):
    """Quadrature produced a non-finite or non-positive value."""


@dataclass(frozen=True)
class QuadratureSpec:
    """``resolution`` is the number of cells per annulus thickness ``r^n (r - 1)``."""

    scheme: str = "auto"
    resolution: int = 32
    order: int = 8
    mc_samples: int = 1_000_000
    tol: float = 1e-4
    seed: int = 0
    max_points: int = 20_000_000

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.resolution > 0:
            raise ValueError("quadrature resolution must be positive")
        if self.order < 2:
            raise ValueError("Gauss order must be at least 2")
        if self.scheme == "mc" and self.mc_samples < MIN_MC_SAMPLES:
            raise ValueError(f"Monte Carlo quadrature needs at least {MIN_MC_SAMPLES} samples")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")

    def resolve(self, d: int) -> str:
        if self.scheme != "auto":
            return self.scheme
        if d >= 4:
            if self.mc_samples < MIN_MC_SAMPLES:
                raise ValueError(f"Monte Carlo quadrature needs at least {MIN_MC_SAMPLES} samples")
            return "mc"
        return "gauss"


@dataclass(frozen=True)
class LevelIntegrals:
    n: int
    mass: float
    energy: float
    error: float
    scheme: str

    @property
    def ratio(self) -> float:
        return self.energy / self.mass


def _gauss_nodes(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    xi, wi = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    return ((lo + hi) * 0.5 + half * xi).ravel(), (half * wi).ravel()


def _refine(edges: np.ndarray, delta: float) -> np.ndarray:
    """Split every interval of ``edges`` into pieces no longer than ``delta``."""
    lengths = np.diff(edges)
    m = np.maximum(1, np.ceil(lengths / delta - 1e-9)).astype(np.int64)
    start = np.repeat(edges[:-1], m)
    step = np.repeat(lengths / m, m)
    j = np.arange(m.sum()) - np.repeat(np.cumsum(m) - m, m)
    return np.append(start + j * step, edges[-1])


def _axis_breakpoints(env, axis: int, R: float) -> np.ndarray:
    if isinstance(env, ZeroEnvironment):
        return np.empty(0)
    if isinstance(env, ProductEnvironment):
        return np.asarray(env.components[axis].breakpoints(-R, R), dtype=float)
    if isinstance(env, GridEnvironment):
        g = env.axes[axis]
        return g[(g > -R) & (g < R)]
    if env.dim == 1 and hasattr(env, "breakpoints"):
        return np.asarray(env.breakpoints(-R, R), dtype=float)
    return np.empty(0)


def _axis_edges(env, axis: int, R: float, rn: float, delta: float, align: bool,
                budget: int | None = None) -> np.ndarray:
    fixed = np.array([-R, -rn, 0.0, rn, R])
    bp = _axis_breakpoints(env, axis, R) if align else np.empty(0)
    if budget is not None and bp.size > budget:
        bp = bp[:: int(math.ceil(bp.size / budget))]
    edges = np.unique(np.concatenate([bp, fixed]))
    return _refine(edges, delta)


def _check_extent(env, R: float) -> None:
    if R > env.extent * (1 + 1e-12):
        raise ExtentError(f"bump support radius {R:.6g} exceeds environment extent {env.extent:.6g}")


def _weights(env, x: np.ndarray, theta: float, etheta: float) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(env(x), dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(-theta * w), np.exp(-etheta * w)


def _finish(n, mass, energy, err, scheme) -> LevelIntegrals:
    if not (math.isfinite(mass) and math.isfinite(energy)) or mass <= 0 or energy < 0:
        raise QuadratureError(f"level {n}: mass={mass}, energy={energy} (overflow or bad weights)")
    return LevelIntegrals(n, float(mass), float(energy), float(err), scheme)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(a) if a else abs(b)


def _radial_zero(profile: BumpProfile, n: int, order: int) -> tuple[float, float]:
    r, d = profile.r, profile.d
    rn = r ** n
    edges = _refine(np.array([0.0, rn, r * rn]), rn * (r - 1) / 8)
    rho, wt = _gauss_nodes(edges, max(order, 12))
    u, g = profile.scaled_radial(rho, n)
    area = d * unit_ball_volume(d)
    shell = area * rho ** (d - 1) * wt
    return float(np.sum(shell * u * u)), 0.5 * float(np.sum(shell * g * g))


def _line(env, profile, n, theta, etheta, delta, order, align) -> tuple[float, float]:
    R = profile.r ** (n + 1)
    edges = _axis_edges(env, 0, R, profile.r ** n, delta, align)
    if order == 1:
        x, wt = 0.5 * (edges[:-1] + edges[1:]), np.diff(edges)
    else:
        x, wt = _gauss_nodes(edges, order)
    u, g = profile.scaled_radial(np.abs(x), n)
    em, ee = _weights(env, x, theta, etheta)
    return float(np.sum(wt * u * u * em)), 0.5 * float(np.sum(wt * g * g * ee))


def _tensor(env, profile, n, theta, etheta, delta, order, align, max_points) -> tuple[float, float]:
    d = profile.d
    R = profile.r ** (n + 1)
    rn = profile.r ** n
    per_axis = max(8, int(max_points ** (1.0 / d) / max(order, 1)))
    nodes, wts = [], []
    for ax in range(d):
        edges = _axis_edges(env, ax, R, rn, delta, align, budget=per_axis)
        if order == 1:
            x, wt = 0.5 * (edges[:-1] + edges[1:]), np.diff(edges)
        else:
            x, wt = _gauss_nodes(edges, order)
        nodes.append(x)
        wts.append(wt)
    separable = isinstance(env, ProductEnvironment)
    if separable:
        fm = [np.exp(-theta * np.asarray(c(x))) for c, x in zip(env.components, nodes)]
        fe = [np.exp(-etheta * np.asarray(c(x))) for c, x in zip(env.components, nodes)]
    rest_sq = sum(np.ix_(*nodes[1:])[i] ** 2 for i in range(d - 1)) if d > 1 else 0.0
    rest_w = np.ones(()) if d == 1 else math.prod(np.ix_(*wts[1:]))
    if separable:
        rest_fm = math.prod(np.ix_(*fm[1:]))
        rest_fe = math.prod(np.ix_(*fe[1:]))
    mass = energy = 0.0
    row = max(1, int(max_points // max(1, np.size(rest_sq))))
    for lo in range(0, nodes[0].size, row):
        x0 = nodes[0][lo:lo + row]
        shape = (x0.size,) + (1,) * (d - 1)
        rho = np.sqrt(x0.reshape(shape) ** 2 + rest_sq)
        u, g = profile.scaled_radial(rho, n)
        w = wts[0][lo:lo + row].reshape(shape) * rest_w
        if separable:
            em = fm[0][lo:lo + row].reshape(shape) * rest_fm
            ee = fe[0][lo:lo + row].reshape(shape) * rest_fe
        else:
            grids = np.meshgrid(x0, *nodes[1:], indexing="ij")
            em, ee = _weights(env, np.stack(grids, axis=-1), theta, etheta)
        mass += float(np.sum(w * u * u * em))
        energy += 0.5 * float(np.sum(w * g * g * ee))
    return mass, energy


def _monte_carlo(env, profile, n, theta, etheta, samples, seed) -> tuple[float, float, float]:
    d = profile.d
    R = profile.r ** (n + 1)
    m = max(1, int(math.floor(samples ** (1.0 / d) + 1e-9)))
    total = m ** d
    rng = substream(seed, TAG_MC_QUAD, n)
    vol = (2 * R) ** d
    cell = 2 * R / m
    chunk = 1 << 16
    sm = se = sm2 = se2 = 0.0
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total))
        digits = np.stack(np.unravel_index(idx, (m,) * d), axis=-1)
        x = -R + (digits + rng.random(digits.shape)) * cell
        u, g = profile.scaled_radial(np.linalg.norm(x, axis=-1), n)
        em, ee = _weights(env, x, theta, etheta)
        fm, fe = u * u * em, 0.5 * g * g * ee
        sm += fm.sum()
        se += fe.sum()
        sm2 += (fm * fm).sum()
        se2 += (fe * fe).sum()
    mass, energy = vol * sm / total, vol * se / total
    # plain-MC standard error, an upper bound for the stratified estimator
    sd_m = vol * math.sqrt(max(sm2 / total - (sm / total) ** 2, 0.0) / total)
    sd_e = vol * math.sqrt(max(se2 / total - (se / total) ** 2, 0.0) / total)
    err = max(sd_m / mass if mass else math.inf, sd_e / energy if energy else 0.0)
    return mass, energy, err


def level_integrals(env, n: int, profile: BumpProfile, quad: QuadratureSpec | None = None,
                    theta: float = 1.0, energy_theta: float | None = None) -> LevelIntegrals:
    """Mass ``int u_n^2 e^{-theta w}`` and energy ``1/2 int |grad u_n|^2 e^{-theta' w}``.

    ``energy_theta`` defaults to ``theta``.  The reported error is the
    relative change against a coarser run of the same scheme (or the MC
    standard error).
    """
    quad = quad or QuadratureSpec()
    if n < 0 or int(n) != n:
        raise ValueError("level n must be a non-negative integer")
    etheta = theta if energy_theta is None else energy_theta
    profile = profile.with_dim(env.dim)
    r, d = profile.r, profile.d
    R = r ** (n + 1)
    _check_extent(env, R)
    if isinstance(env, ZeroEnvironment):
        mass, energy = _radial_zero(profile, n, quad.order)
        coarse = _radial_zero(profile, n, quad.order // 2)
        err = max(_rel(mass, coarse[0]), _rel(energy, coarse[1]))
        return _finish(n, mass, energy, err, "radial")
    scheme = quad.resolve(d)
    delta = r ** n * (r - 1) / quad.resolution
    if scheme == "mc":
        mass, energy, err = _monte_carlo(env, profile, n, theta, etheta, quad.mc_samples, quad.seed)
        return _finish(n, mass, energy, err, scheme)
    order = quad.order if scheme == "gauss" else 1
    align = scheme == "gauss"
    if d == 1:
        fine = _line(env, profile, n, theta, etheta, delta, order, align)
        coarse = _line(env, profile, n, theta, etheta, 2 * delta if order == 1 else delta,
                       max(order // 2, 1), align)
    else:
        order = min(order, 4) if order > 1 else 1
        budget = quad.max_points
        fine = _tensor(env, profile, n, theta, etheta, delta, order, align, budget)
        coarse = _tensor(env, profile, n, theta, etheta, 2 * delta if order == 1 else delta,
                         max(order - 1, 1), align, budget)
    err = max(_rel(fine[0], coarse[0]), _rel(fine[1], coarse[1]))
    return _finish(n, fine[0], fine[1], err, scheme)


def mass(env, n: int, theta: float = 1.0, profile: BumpProfile | None = None,
         quad: QuadratureSpec | None = None) -> float:
    profile = profile or BumpProfile(d=env.dim)
    return level_integrals(env, n, profile, quad, theta).mass


def energy(env, n: int, theta: float = 1.0, profile: BumpProfile | None = None,
           quad: QuadratureSpec | None = None) -> float:
    profile = profile or BumpProfile(d=env.dim)
    return level_integrals(env, n, profile, quad, theta).energy
