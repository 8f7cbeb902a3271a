"""Compiled per-path stepping loops.

Each loop advances a set of active trials through one block of
pre-generated standard normals and leaves the per-trial state in place, so
the caller can feed further blocks drawn from the same seeded stream.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _locate(table, y):
    # index i with table[i] <= y < table[i+1], clipped to the valid cells
    i = np.searchsorted(table, y, side="right") - 1
    if i < 0:
        i = 0
    if i > table.size - 2:
        i = table.size - 2
    return i


@njit(cache=True)
def time_change_block(grid, wv, sv, q, dt_clock, dx_max, adaptive, z, active,
                      spos, tnow, krec, rec_times, out, done, exhausted, steps,
                      trace, trace_len):
    """Walk the scale-space Brownian motion and run the clock ``e^{-q w}``.

    ``spos``/``tnow``/``krec`` hold, per trial, the scale-space position, the
    process time and the next record slot.  Returns nothing; all state is
    updated in place.
    """
    smin = sv[0]
    smax = sv[-1]
    nrec = rec_times.size
    for a in range(active.size):
        i = active[a]
        if done[i]:
            continue
        s = spos[i]
        t = tnow[i]
        k = krec[i]
        nstep = steps[i]
        for j in range(z.shape[1]):
            c = _locate(sv, s)
            f = (s - sv[c]) / (sv[c + 1] - sv[c])
            x = grid[c] + f * (grid[c + 1] - grid[c])
            w = wv[c] + f * (wv[c + 1] - wv[c])
            du = dt_clock
            if adaptive:
                cap = dx_max * np.exp(w)
                du = min(dt_clock * np.exp(q * w), cap * cap)
            s_new = s + np.sqrt(du) * z[a, j]
            t_new = t + np.exp(-q * w) * du
            nstep += 1
            if s_new <= smin or s_new >= smax:
                edge = grid[0] if s_new <= smin else grid[-1]
                while k < nrec:
                    out[i, k] = edge
                    k += 1
                exhausted[i] = True
                done[i] = True
                s = min(max(s_new, smin), smax)
                t = t_new
                break
            c = _locate(sv, s_new)
            f = (s_new - sv[c]) / (sv[c + 1] - sv[c])
            x_new = grid[c] + f * (grid[c + 1] - grid[c])
            if nstep <= trace_len:
                trace[i, nstep - 1] = x_new
            while k < nrec and rec_times[k] <= t_new:
                out[i, k] = x_new
                k += 1
            s = s_new
            t = t_new
            if k >= nrec:
                done[i] = True
                break
        spos[i] = s
        tnow[i] = t
        krec[i] = k
        steps[i] = nstep


@njit(cache=True)
def euler_block(grid, gv, dt, z, active, xpos, kstep, nsteps, stride, out, done, exhausted):
    """Euler-Maruyama for ``dX = -grad w(X)/2 dt + dB``; records every ``stride`` steps."""
    lo = grid[0]
    hi = grid[-1]
    sq = np.sqrt(dt)
    for a in range(active.size):
        i = active[a]
        if done[i]:
            continue
        x = xpos[i]
        k = kstep[i]
        for j in range(z.shape[1]):
            c = _locate(grid, x)
            f = (x - grid[c]) / (grid[c + 1] - grid[c])
            g = gv[c] + f * (gv[c + 1] - gv[c])
            x = x - 0.5 * g * dt + sq * z[a, j]
            k += 1
            if x <= lo or x >= hi:
                x = lo if x <= lo else hi
                r = (k + stride - 1) // stride
                while r < out.shape[1]:
                    out[i, r] = x
                    r += 1
                exhausted[i] = True
                done[i] = True
                break
            if k % stride == 0:
                out[i, k // stride] = x
            if k >= nsteps:
                done[i] = True
                break
        xpos[i] = x
        kstep[i] = k
