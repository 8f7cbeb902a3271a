"""Radial cutoff profile, its scaled family and the derived constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import gamma


def smoothstep_psi(t):
    """Quintic smoothstep fall-off: 1 at t=0, 0 at t=1, flat to second order at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def smoothstep_dpsi(t):
    t = np.clip(t, 0.0, 1.0)
    return -30.0 * t * t * (1.0 - t) ** 2


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / gamma(d / 2 + 1)


@dataclass(frozen=True)
class BumpProfile:
    """phi(x) = 1 on |x| <= 1, psi((|x| - 1)/(r - 1)) on 1 < |x| < r, 0 beyond."""

    r: float = 2.0
    d: int = 1
    psi: Callable = field(default=smoothstep_psi, compare=False)
    dpsi: Callable = field(default=smoothstep_dpsi, compare=False)
    name: str = "quintic"

    def __post_init__(self):
        if not self.r > 1:
            raise ValueError(f"bump ratio r must exceed 1, got {self.r}")
        if self.d < 1 or int(self.d) != self.d:
            raise ValueError("dimension d must be a positive integer")

    def with_dim(self, d: int) -> "BumpProfile":
        return self if d == self.d else replace(self, d=int(d))

    def radial(self, rho):
        """(phi, dphi/drho) at radius rho."""
        rho = np.asarray(rho, dtype=float)
        t = (rho - 1.0) / (self.r - 1.0)
        inside = rho <= 1.0
        outside = rho >= self.r
        val = np.where(inside, 1.0, np.where(outside, 0.0, self.psi(t)))
        der = np.where(inside | outside, 0.0, self.dpsi(t) / (self.r - 1.0))
        return val, der

    def scaled_radial(self, rho, n: int):
        """(u_n, |grad u_n|) at radius rho for u_n(x) = phi(r^-n x)."""
        s = self.r ** (-n)
        val, der = self.radial(np.asarray(rho, dtype=float) * s)
        return val, np.abs(der) * s


def bump(x, profile: BumpProfile) -> tuple[float, np.ndarray]:
    """Value and gradient of phi at a point of R^d."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (profile.d,):
        raise ValueError(f"expected a point of R^{profile.d}")
    rho = float(np.linalg.norm(x))
    val, der = profile.radial(rho)
    grad = np.zeros_like(x) if rho == 0.0 else float(der) * x / rho
    return float(val), grad


@dataclass(frozen=True)
class ProfileConstants:
    C1: float
    C2: float
    Vd: float
    C_tilde: float
    error: float


def _radial_integral(f: Callable, a: float, b: float, order: int, panels: int) -> float:
    xi, wi = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi
    return float(np.sum(0.5 * (hi - lo) * wi * f(x)))


def profile_constants(d: int, r: float, quad=None, profile: BumpProfile | None = None) -> ProfileConstants:
    """C1 = int phi^2, C2 = int |grad phi|^2, V_d and the derived C~.

    Radial composite Gauss-Legendre; the error estimate compares ``panels``
    with ``2 * panels``.  Polynomial profiles are integrated exactly.
    """
    from .quadrature import QuadratureSpec, QuadratureError

    quad = quad or QuadratureSpec()
    profile = (profile or BumpProfile(r=r, d=d)).with_dim(d)
    if profile.r != r:
        profile = replace(profile, r=r)
    vd = unit_ball_volume(d)
    area = d * vd

    def c1_shell(rho):
        return rho ** (d - 1) * profile.radial(rho)[0] ** 2

    def c2_shell(rho):
        return rho ** (d - 1) * profile.radial(rho)[1] ** 2

    order = max(quad.order, 12)
    vals = []
    for panels in (4, 8):
        c1 = vd + area * _radial_integral(c1_shell, 1.0, r, order, panels)
        c2 = area * _radial_integral(c2_shell, 1.0, r, order, panels)
        vals.append((c1, c2))
    (c1a, c2a), (c1, c2) = vals
    err = max(abs(c1 - c1a) / c1, abs(c2 - c2a) / c2)
    if err > quad.tol:
        raise QuadratureError(f"profile constants did not converge (rel. change {err:.2e})")
    c_tilde = (2 * vd) ** (-d / 2) * c1 * c2 ** (d / 2) * r ** (d * (d + 2) / 2)
    return ProfileConstants(float(c1), float(c2), float(vd), float(c_tilde), float(err))
