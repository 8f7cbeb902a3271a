"""Recurrence-strength indices n(k), l(k) and the deterministic bound checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..env.core import ExtentError, ZeroEnvironment
from .bump import BumpProfile, ProfileConstants, profile_constants
from .quadrature import LevelIntegrals, QuadratureSpec, level_integrals

DEFAULT_N_MAX = 8
BOUND_TOL = 1e-4


@dataclass(frozen=True)
class NotFoundWithinHorizon:
    """No level up to ``horizon`` satisfies the defining inequality."""

    horizon: int

    def __bool__(self):
        return False

    def __str__(self):
        return f">{self.horizon}"


def is_found(value) -> bool:
    return not isinstance(value, NotFoundWithinHorizon)


class LevelTable:
    """Lazily computed masses and energies ``(M_n, E_n)`` for ``n = 1..n_max``.

    ``n_max`` is clipped to the largest level whose bump support fits inside
    the environment extent.
    """

    def __init__(self, env, profile: BumpProfile | None = None, quad: QuadratureSpec | None = None,
                 theta: float = 1.0, energy_theta: float | None = None, n_max: int = DEFAULT_N_MAX):
        self.env = env
        self.profile = (profile or BumpProfile(d=env.dim)).with_dim(env.dim)
        self.quad = quad or QuadratureSpec()
        self.theta = float(theta)
        self.energy_theta = self.theta if energy_theta is None else float(energy_theta)
        fit = math.floor(math.log(env.extent) / math.log(self.profile.r) - 1 + 1e-12) \
            if math.isfinite(env.extent) else n_max
        self.n_max = int(min(n_max, fit))
        self._levels: dict[int, LevelIntegrals] = {}

    def level(self, n: int) -> LevelIntegrals:
        if n not in self._levels:
            if n > self.n_max:
                raise ExtentError(f"level {n} beyond the horizon {self.n_max}")
            self._levels[n] = level_integrals(self.env, n, self.profile, self.quad,
                                              self.theta, self.energy_theta)
        return self._levels[n]

    def levels(self) -> list[LevelIntegrals]:
        return [self.level(n) for n in range(1, self.n_max + 1)]

    def satisfies(self, n: int, k: float) -> bool:
        lv = self.level(n)
        return lv.energy * k <= lv.mass

    def index(self, k: float):
        if k < 1:
            raise ValueError("k must be >= 1")
        for n in range(1, self.n_max + 1):
            if self.satisfies(n, k):
                return n
        return NotFoundWithinHorizon(self.n_max)

    def index_along(self, subsequence: Sequence[int], k: float):
        seq = _check_subsequence(subsequence)
        if k < 1:
            raise ValueError("k must be >= 1")
        for ell, n in enumerate(seq, start=1):
            if n > self.n_max:
                break
            if self.satisfies(n, k):
                return ell
        return NotFoundWithinHorizon(len(seq))


def _check_subsequence(subsequence) -> list[int]:
    seq = [int(n) for n in subsequence]
    if not seq:
        raise ValueError("subsequence must be nonempty")
    if any(b <= a for a, b in zip(seq, seq[1:])) or seq[0] < 1:
        raise ValueError("subsequence must be strictly increasing positive integers")
    return seq


def index_nk(env, k: float, theta: float = 1.0, profile: BumpProfile | None = None,
             quad: QuadratureSpec | None = None, n_max: int = DEFAULT_N_MAX):
    """Smallest ``n <= n_max`` with ``E_n <= M_n / k``."""
    return LevelTable(env, profile, quad, theta, n_max=n_max).index(k)


def index_ellk(env, subsequence: Sequence[int], k: float, theta: float = 1.0,
               profile: BumpProfile | None = None, quad: QuadratureSpec | None = None,
               n_max: int = DEFAULT_N_MAX):
    """Smallest 1-based ``l`` with ``E_{n_l} <= M_{n_l} / k``."""
    return LevelTable(env, profile, quad, theta, n_max=n_max).index_along(subsequence, k)


def closed_form_index(k: float, d: int, r: float, C1: float, C2: float) -> int:
    """n(k) for w = 0: E_n/M_n = (C2 / 2 C1) r^{-2n}."""
    return max(1, math.ceil(math.log(k * C2 / (2 * C1), r) / 2 - 1e-12))


@dataclass(frozen=True)
class BoundCheck:
    """One inequality ``lhs <= rhs`` (or ``<``) evaluated numerically."""

    name: str
    level: int | None
    k: float | None
    lhs: float
    rhs: float
    status: str  # pass | fail | skipped
    note: str = ""

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def _judge(lhs: float, rhs: float, tol: float) -> str:
    scale = max(abs(lhs), abs(rhs))
    return "pass" if rhs - lhs >= -tol * scale else "fail"


def _skip(name, level, k, note) -> BoundCheck:
    return BoundCheck(name, level, k, math.nan, math.nan, "skipped", note)


@dataclass
class EnergyReport:
    theta: float
    energy_theta: float
    levels: list
    indices: dict
    checks: list
    constants: ProfileConstants
    n_max: int
    metadata: dict = field(default_factory=dict)

    def violations(self) -> list[BoundCheck]:
        return [c for c in self.checks if c.status == "fail"]

    def applicable(self) -> list[BoundCheck]:
        return [c for c in self.checks if c.status != "skipped"]

    def check(self, name: str, k: float):
        for c in self.checks:
            if c.name == name and c.k == k:
                return c
        return None

    def level_rows(self) -> list[list]:
        return [[lv.n, lv.mass, lv.energy, lv.ratio] for lv in self.levels]

    def index_rows(self) -> list[list]:
        rows = []
        for k, nk in self.indices.items():
            slacks = []
            for name in ("growth_bound", "index_bound", "brownian_bound"):
                c = self.check(name, k)
                slacks.append(c.slack if c is not None and c.status != "skipped" else math.nan)
            rows.append([k, nk if is_found(nk) else str(nk)] + slacks)
        return rows


def _level_checks(table: LevelTable, consts: ProfileConstants, tol: float) -> list[BoundCheck]:
    """Mass and energy sandwiches at every level, and the inner-ball mass bounds."""
    env, p, th = table.env, table.profile, table.theta
    r, d = p.r, p.d
    out = []
    for lv in table.levels():
        n = lv.n
        hi, lo = env.extrema(0.0, r ** (n + 1))
        base = consts.C1 * r ** (d * n)
        m_lo = base * math.exp(-th * hi)
        m_hi = base * math.exp(-th * lo)
        out.append(BoundCheck("mass_lower", n, None, m_lo, lv.mass, _judge(m_lo, lv.mass, tol)))
        out.append(BoundCheck("mass_upper", n, None, lv.mass, m_hi, _judge(lv.mass, m_hi, tol)))
        for ell in range(0, n + 1):
            rad = r ** (n - ell)
            ball = consts.Vd * rad ** d * math.exp(-th * env.extrema(0.0, rad)[0])
            out.append(BoundCheck(f"mass_inner_ball_{ell}", n, None, ball, lv.mass,
                                  _judge(ball, lv.mass, tol)))
        if table.energy_theta == th:
            hi, lo = env.extrema(r ** n, r ** (n + 1))
            base = consts.C2 * r ** ((d - 2) * n)
            e_lo, e_hi = base * math.exp(-th * hi), base * math.exp(-th * lo)
            two_e = 2 * lv.energy
            out.append(BoundCheck("energy_lower", n, None, e_lo, two_e, _judge(e_lo, two_e, tol)))
            out.append(BoundCheck("energy_upper", n, None, two_e, e_hi, _judge(two_e, e_hi, tol)))
    return out


def _index_checks(table: LevelTable, consts: ProfileConstants, k: float, nk,
                  tol: float) -> list[BoundCheck]:
    env, p, th = table.env, table.profile, table.theta
    r, d = p.r, p.d
    names = ("growth_bound", "index_bound")
    if not is_found(nk):
        return [_skip(nm, None, k, "index beyond horizon") for nm in names] + \
            ([_skip("brownian_bound", None, k, "index beyond horizon")]
             if isinstance(env, ZeroEnvironment) else [])
    out = []
    M = table.level(nk).mass
    if isinstance(env, ZeroEnvironment):
        lhs = k ** (-d / 2) * M
        out.append(BoundCheck("brownian_bound", nk, k, lhs, consts.C_tilde,
                              _judge(lhs, consts.C_tilde, tol)))
    if table.energy_theta != th:
        return out + [_skip(nm, nk, k, "mass and energy weights differ") for nm in names]
    if table.level(nk).energy == 0:
        return out + [_skip(nm, nk, k, "zero energy at the index") for nm in names]
    if nk < 2:
        return out + [_skip(nm, nk, k, "needs index >= 2") for nm in names]
    n = nk

    def lo_(a, b):
        return th * env.extrema(a, b)[1]

    def hi_(a, b):
        return th * env.extrema(a, b)[0]

    # mass growth against the previous level, which fails the defining inequality
    core = math.exp(-hi_(0.0, 1.0))
    outer = (r ** d - 1) * r ** (d * n) * math.exp(-lo_(r ** (n - 1), r ** (n + 1)))
    rhs = 0.5 * consts.C2 * (1 + outer / core) * k * r ** ((d - 2) * (n - 1)) \
        * math.exp(-lo_(r ** (n - 1), r ** n))
    out.append(BoundCheck("growth_bound", n, k, M, rhs, _judge(M, rhs, tol)))
    expo = -lo_(0.0, r ** (n + 1)) - 0.5 * d * lo_(r ** (n - 1), r ** n) \
        + 0.5 * d * hi_(0.0, r ** (n - 2))
    rhs = consts.C_tilde * k ** (d / 2) * math.exp(expo)
    out.append(BoundCheck("index_bound", n, k, M, rhs, _judge(M, rhs, tol)))
    return out


def verify_bounds(env, ks, theta: float = 1.0, profile: BumpProfile | None = None,
                  quad: QuadratureSpec | None = None, n_max: int = DEFAULT_N_MAX,
                  tol: float = BOUND_TOL, table: LevelTable | None = None) -> EnergyReport:
    """Evaluate every level sandwich and, per ``k``, the index bounds.

    Checks whose preconditions fail (index beyond horizon, index 1 where the
    bound refers to level ``n(k) - 1``) are recorded as ``skipped``.
    """
    ks = [ks] if np.isscalar(ks) else list(ks)
    table = table or LevelTable(env, profile, quad, theta, n_max=n_max)
    p = table.profile
    consts = profile_constants(p.d, p.r, table.quad, p)
    checks = _level_checks(table, consts, tol)
    indices = {}
    for k in ks:
        nk = table.index(k)
        indices[k] = nk
        checks.extend(_index_checks(table, consts, k, nk, tol))
    return EnergyReport(table.theta, table.energy_theta, table.levels(), indices, checks,
                        consts, table.n_max, {"env": getattr(env, "metadata", {})})
