"""Diffusions in a potential: scale/time-change and Euler simulators.

The one-dimensional diffusion with generator ``(f'' - w' f')/2`` is
``X_t = s^{-1}(B(C^{-1}(t)))`` with scale ``s' = e^{w}`` and clock
``C(v) = int_0^v e^{-2 w(s^{-1}(B_u))} du``.  A further time change by
``int e^{-w(X)} dt`` multiplies the clock density by ``e^{-w}``, giving
exponent 3.  Only ``e^{w}`` is ever needed, never ``w'``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

from ..env.core import Environment1D, ExtentError, ZeroEnvironment
from ..rng import TAG_PATH, substream
from .kernels import euler_block, time_change_block

CLOCK_EXPONENTS = (2, 3)
EXP_CLAMP = 700.0
BLOCK = 4096
PATH_CHUNK = 128


@dataclass(frozen=True, eq=False)
class ScaleTable:
    """``s(x) = int_0^x e^{w}`` on the environment grid; linear in between.

    ``grid`` may be a sub-interval of the environment grid: where ``e^w`` is
    below the floating-point resolution of ``s`` the table stops (``trimmed``)
    and simulated paths are absorbed there.
    """

    grid: np.ndarray
    s: np.ndarray
    w: np.ndarray
    clamped: bool = False
    trimmed: bool = False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < self.grid[0] * (1 + 1e-12)) | (x > self.grid[-1] * (1 + 1e-12))):
            raise ExtentError("scale function evaluated outside the table")
        return np.interp(x, self.grid, self.s)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if np.any((y < self.s[0]) | (y > self.s[-1])):
            raise ExtentError("value outside the scale image of the table")
        return np.interp(y, self.s, self.grid)

    @property
    def image(self) -> tuple[float, float]:
        return float(self.s[0]), float(self.s[-1])


def scale_function(env: Environment1D) -> ScaleTable:
    if not isinstance(env, Environment1D):
        raise TypeError("scale_function needs a grid environment")
    w = np.asarray(env.values, dtype=float)
    clamped = bool(np.any(w > EXP_CLAMP))
    if clamped:
        warnings.warn(f"potential exceeds {EXP_CLAMP}; e^w clamped", RuntimeWarning, stacklevel=2)
    ew = np.exp(np.minimum(w, EXP_CLAMP))
    seg = 0.5 * (ew[1:] + ew[:-1]) * np.diff(env.grid)
    o = env.origin_index
    # accumulate outward from the origin so s keeps full resolution near 0
    s = np.concatenate([-np.cumsum(seg[:o][::-1])[::-1], [0.0], np.cumsum(seg[o:])])
    # keep the largest strictly increasing stretch around the origin
    flat = np.flatnonzero(np.diff(s) <= 0)
    lo = int(flat[flat < o].max()) + 1 if np.any(flat < o) else 0
    hi = int(flat[flat >= o].min()) if np.any(flat >= o) else s.size - 1
    trimmed = lo > 0 or hi < s.size - 1
    if hi - lo < 2:
        raise ArithmeticError("scale table degenerates at the origin")
    if trimmed:
        warnings.warn("e^w below the resolution of the scale table; domain trimmed to "
                      f"[{env.grid[lo]:.4g}, {env.grid[hi]:.4g}]", RuntimeWarning, stacklevel=2)
    sl = slice(lo, hi + 1)
    return ScaleTable(env.grid[sl], s[sl], w[sl], clamped, trimmed)


def as_grid_env(env, L: float = 50.0, h: float = 0.01) -> Environment1D:
    """Grid representation; a zero environment becomes ``w = 0`` on ``[-L, L]``."""
    if isinstance(env, Environment1D):
        return env
    if isinstance(env, ZeroEnvironment):
        return Environment1D.from_function(lambda x: 0.0 * x, L, h, law="zero")
    if hasattr(env, "as_environment1d"):
        return env.as_environment1d()
    raise TypeError(f"cannot simulate on {type(env).__name__}")


@dataclass
class PathSample:
    """Positions at record ``times``; ``states`` has shape ``(trials, times, m)``."""

    times: np.ndarray
    states: np.ndarray
    scheme: str
    seed: int
    env_meta: dict = field(default_factory=dict)
    exhausted: np.ndarray | None = None
    steps: np.ndarray | None = None
    trace: np.ndarray | None = None

    @property
    def trials(self) -> int:
        return self.states.shape[0]

    def component(self, j: int = 0) -> np.ndarray:
        return self.states[:, :, j]

    def at(self, t: float) -> np.ndarray:
        k = int(np.flatnonzero(np.isclose(self.times, t))[0])
        return self.states[:, k, :]

    def rows(self, stride: int = 1, trial: int = 0):
        for k in range(0, self.times.size, stride):
            yield [self.times[k], *self.states[trial, k, :]]


def _record_times(t_end: float, record_times) -> np.ndarray:
    if record_times is None:
        rec = np.array([t_end], dtype=float)
    else:
        rec = np.asarray(record_times, dtype=float)
    if rec.size == 0 or np.any(np.diff(rec) <= 0) or rec[0] <= 0:
        raise ValueError("record times must be positive and strictly increasing")
    return rec


def _time_change_chunk(table: ScaleTable, q: float, rec: np.ndarray,
                       dt_clock: float, dx_max: float, adaptive: bool, x0: float,
                       rng: np.random.Generator, n: int, trace_len: int, max_steps: float):
    s0 = float(table(np.array([x0]))[0])
    spos = np.full(n, s0)
    tnow = np.zeros(n)
    krec = np.zeros(n, dtype=np.int64)
    out = np.full((n, rec.size), np.nan)
    done = np.zeros(n, dtype=np.bool_)
    exhausted = np.zeros(n, dtype=np.bool_)
    steps = np.zeros(n, dtype=np.int64)
    trace = np.full((n, max(trace_len, 1)), np.nan)
    while not done.all():
        active = np.flatnonzero(~done)
        if steps[active].max() >= max_steps:
            raise RuntimeError(f"time-change walk exceeded {max_steps:.3g} steps")
        z = rng.standard_normal((active.size, BLOCK))
        time_change_block(table.grid, table.w, table.s, float(q), dt_clock, dx_max, adaptive, z, active,
                          spos, tnow, krec, rec, out, done, exhausted, steps, trace, trace_len)
    return out, exhausted, steps, trace[:, :trace_len]


def simulate_time_change(env, q: float, t_end: float, dt_clock: float = 1e-4, seed: int = 0,
                         trials: int = 1, record_times=None, x0: float = 0.0, step: str = "bm",
                         dx_max: float = 0.05, trace_len: int = 0, chunk: int = PATH_CHUNK,
                         max_steps: float = 5e8, stream: tuple = ()) -> PathSample:
    """Scale/time-change simulation of the clock-exponent-``q`` diffusion.

    ``step="bm"`` uses a fixed scale-space variance ``dt_clock`` per step, so
    runs with different ``q`` share the same embedded walk.  ``"adaptive"``
    caps both the clock increment (``dt_clock``) and the spatial move
    (``dx_max``); use it for long horizons.  Paths leaving the grid are
    absorbed at the edge and flagged in ``exhausted``.
    """
    if q not in CLOCK_EXPONENTS:
        raise ValueError(f"clock exponent must be one of {CLOCK_EXPONENTS}, got {q}")
    if step not in ("bm", "adaptive"):
        raise ValueError("step must be 'bm' or 'adaptive'")
    if not (t_end > 0 and dt_clock > 0 and dx_max > 0):
        raise ValueError("t_end, dt_clock and dx_max must be positive")
    genv = as_grid_env(env)
    table = scale_function(genv)
    if not table.grid[0] < x0 < table.grid[-1]:
        raise ExtentError("start point outside the simulated extent")
    rec = _record_times(t_end, record_times)
    if rec[-1] > t_end * (1 + 1e-12):
        raise ValueError("record times exceed t_end")
    outs, exh, stp, trc = [], [], [], []
    for ci, lo in enumerate(range(0, trials, chunk)):
        n = min(chunk, trials - lo)
        rng = substream(seed, TAG_PATH, *stream, ci)
        o, e, s, t = _time_change_chunk(table, q, rec, dt_clock, dx_max, step == "adaptive",
                                        x0, rng, n, trace_len, max_steps)
        outs.append(o)
        exh.append(e)
        stp.append(s)
        trc.append(t)
    states = np.concatenate(outs)
    if np.isnan(states).any():
        raise RuntimeError("unfilled record slots")
    times = np.concatenate([[0.0], rec])
    states = np.concatenate([np.full((trials, 1), x0), states], axis=1)[:, :, None]
    meta = dict(getattr(genv, "metadata", {}), clock_exponent=q, step=step, dt_clock=dt_clock,
                extent=(float(table.grid[0]), float(table.grid[-1])))
    return PathSample(times, states, "time-change", seed, meta, np.concatenate(exh),
                      np.concatenate(stp), np.concatenate(trc) if trace_len else None)


def mollify(env: Environment1D, bandwidth: float) -> Environment1D:
    """Gaussian smoothing with standard deviation ``bandwidth``; re-pinned at 0."""
    if not isinstance(env, Environment1D):
        raise TypeError("mollify needs a grid environment")
    h = float(np.max(np.diff(env.grid)))
    if bandwidth < 2 * h * (1 - 1e-9):
        raise ValueError(f"bandwidth {bandwidth} below two grid steps ({2 * h})")
    sm = gaussian_filter1d(np.asarray(env.values, dtype=float), bandwidth / h, mode="nearest")
    sm = sm - sm[env.origin_index]
    return Environment1D(env.grid, sm, dict(env.metadata, bandwidth=bandwidth))


def _gradient_table(env: Environment1D) -> np.ndarray:
    return np.gradient(np.asarray(env.values, dtype=float), env.grid)


def simulate_euler(env, t_end: float, dt: float = 1e-4, seed: int = 0, trials: int = 1,
                   record_every: float | None = None, x0: float = 0.0, chunk: int = PATH_CHUNK,
                   stream: tuple = ()) -> PathSample:
    """Euler-Maruyama for ``dX = -w'(X)/2 dt + dB`` on a smooth grid environment.

    ``dt`` must not exceed the squared smoothing scale (``bandwidth`` from
    :func:`mollify`, else the grid step).
    """
    genv = as_grid_env(env)
    scale = genv.metadata.get("bandwidth", float(np.max(np.diff(genv.grid))))
    if dt > scale * scale * (1 + 1e-9):
        raise ValueError(f"Euler step {dt} exceeds the squared smoothing scale {scale * scale:.3g}")
    if abs(x0) >= genv.extent:
        raise ExtentError("start point outside the environment extent")
    nsteps = int(round(t_end / dt))
    if nsteps < 1 or not math.isclose(nsteps * dt, t_end, rel_tol=1e-9):
        raise ValueError("t_end must be a positive multiple of dt")
    stride = nsteps if record_every is None else int(round(record_every / dt))
    if stride < 1 or nsteps % stride:
        raise ValueError("record spacing must divide t_end into whole steps")
    grad = _gradient_table(genv)
    nrec = nsteps // stride + 1
    outs, exh = [], []
    for ci, lo in enumerate(range(0, trials, chunk)):
        n = min(chunk, trials - lo)
        rng = substream(seed, TAG_PATH, *stream, ci)
        xpos = np.full(n, float(x0))
        kstep = np.zeros(n, dtype=np.int64)
        out = np.full((n, nrec), np.nan)
        out[:, 0] = x0
        done = np.zeros(n, dtype=np.bool_)
        exhausted = np.zeros(n, dtype=np.bool_)
        while not done.all():
            active = np.flatnonzero(~done)
            z = rng.standard_normal((active.size, min(BLOCK, nsteps)))
            euler_block(genv.grid, grad, dt, z, active, xpos, kstep, nsteps, stride, out, done, exhausted)
        outs.append(out)
        exh.append(exhausted)
    times = dt * stride * np.arange(nrec)
    meta = dict(getattr(genv, "metadata", {}), dt=dt)
    return PathSample(times, np.concatenate(outs)[:, :, None], "euler", seed, meta,
                      np.concatenate(exh))


# ---------------------------------------------------------------------------
# products of independent components

@dataclass(frozen=True)
class Component:
    """A factor of a product process: Brownian motion or a diffusion in ``env``."""

    env: object = None
    q: int = 2
    step: str = "adaptive"
    dt_clock: float = 1e-4
    dx_max: float = 0.05

    @property
    def is_bm(self) -> bool:
        return self.env is None

    @classmethod
    def bm(cls) -> "Component":
        return cls(None)


def _component_states(comp: Component, j: int, rec: np.ndarray, seed: int, trials: int,
                      x0: float, chunk: int, stream: tuple) -> tuple[np.ndarray, np.ndarray]:
    if comp.is_bm:
        out = np.empty((trials, rec.size))
        dts = np.diff(np.concatenate([[0.0], rec]))
        for ci, lo in enumerate(range(0, trials, chunk)):
            n = min(chunk, trials - lo)
            rng = substream(seed, TAG_PATH, *stream, j, ci)
            out[lo:lo + n] = x0 + np.cumsum(rng.standard_normal((n, rec.size)) * np.sqrt(dts), axis=1)
        return out, np.zeros(trials, dtype=bool)
    ps = simulate_time_change(comp.env, comp.q, float(rec[-1]), comp.dt_clock, seed, trials, rec,
                              x0=x0, step=comp.step, dx_max=comp.dx_max, chunk=chunk,
                              stream=(*stream, j))
    return ps.states[:, 1:, 0], ps.exhausted


def simulate_product(components, t_end: float, dt: float | None = None, seed: int = 0,
                     trials: int = 1, record_times=None, start=None,
                     chunk: int = PATH_CHUNK, stream: tuple = ()) -> PathSample:
    """Independent components on a shared process clock.

    Brownian components use exact Gaussian increments between record times;
    the others use the time-change simulator.  ``record_times`` defaults to
    the grid ``dt, 2 dt, ..., t_end`` (or just ``t_end``).
    """
    comps = [c if isinstance(c, Component) else Component(*c) if isinstance(c, tuple)
             else Component.bm() if c in (None, "bm") else Component(c) for c in components]
    if not comps:
        raise ValueError("need at least one component")
    m = len(comps)
    start = np.zeros(m) if start is None else np.asarray(start, dtype=float)
    if start.shape != (m,):
        raise ValueError(f"start must have {m} coordinates")
    if record_times is None and dt is not None:
        nrec = int(round(t_end / dt))
        record_times = dt * np.arange(1, nrec + 1)
    rec = _record_times(t_end, record_times)
    states = np.empty((trials, rec.size + 1, m))
    states[:, 0, :] = start
    exhausted = np.zeros(trials, dtype=bool)
    for j, c in enumerate(comps):
        try:
            st, ex = _component_states(c, j, rec, seed, trials, float(start[j]), chunk, stream)
        except Exception as err:
            raise type(err)(f"component {j}: {err}") from err
        states[:, 1:, j] = st
        exhausted |= ex
    meta = {"components": [("bm" if c.is_bm else dict(getattr(c.env, "metadata", {}), q=c.q))
                           for c in comps]}
    return PathSample(np.concatenate([[0.0], rec]), states, "product", seed, meta, exhausted)
