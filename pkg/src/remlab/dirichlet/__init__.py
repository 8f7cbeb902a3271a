"""Bump functions, weighted mass/energy quadrature and recurrence indices."""

from __future__ import annotations

from pathlib import Path

from ..io import write_csv, write_json
from .bump import BumpProfile, ProfileConstants, bump, profile_constants, unit_ball_volume
from .criterion import ComponentSpec, CriterionPoint, CriterionResult, product_criterion
from .index import (
    BoundCheck,
    EnergyReport,
    LevelTable,
    NotFoundWithinHorizon,
    closed_form_index,
    index_ellk,
    index_nk,
    is_found,
    verify_bounds,
)
from .quadrature import (
    LevelIntegrals,
    QuadratureError,
    QuadratureSpec,
    energy,
    level_integrals,
    mass,
)

LEVEL_HEADER = ["n", "mass", "energy", "ratio"]
INDEX_HEADER = ["k", "n_of_k", "lemma33_slack", "lemma34_slack", "cor35_slack"]


def write_energy_report(report: EnergyReport, outdir: str | Path, manifest: dict | None = None) -> list[Path]:
    """``levels.csv``, ``indices.csv`` and ``checks.csv`` plus a JSON manifest."""
    outdir = Path(outdir)
    paths = [
        write_csv(outdir / "levels.csv", LEVEL_HEADER, report.level_rows()),
        write_csv(outdir / "indices.csv", INDEX_HEADER, report.index_rows()),
        write_csv(outdir / "checks.csv", ["name", "n", "k", "lhs", "rhs", "slack", "status"],
                  ([c.name, c.level, c.k, c.lhs, c.rhs, c.slack, c.status] for c in report.checks)),
    ]
    info = {
        "theta": report.theta,
        "energy_theta": report.energy_theta,
        "n_max": report.n_max,
        "constants": vars(report.constants),
        "violations": len(report.violations()),
        **report.metadata,
        **(manifest or {}),
    }
    paths.append(write_json(outdir / "manifest.json", info))
    return paths


__all__ = [
    "BoundCheck", "BumpProfile", "ComponentSpec", "CriterionPoint", "CriterionResult",
    "EnergyReport", "INDEX_HEADER", "LEVEL_HEADER", "LevelIntegrals", "LevelTable",
    "NotFoundWithinHorizon", "ProfileConstants", "QuadratureError", "QuadratureSpec", "bump",
    "closed_form_index", "energy", "index_ellk", "index_nk", "is_found", "level_integrals",
    "mass", "product_criterion", "profile_constants", "unit_ball_volume", "verify_bounds",
    "write_energy_report",
]
