"""CSV and JSON artifacts."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .env.core import Environment1D, ProductEnvironment


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if callable(obj):
        return getattr(obj, "__name__", repr(obj))
    return obj


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_environment(env, path: str | Path) -> list[Path]:
    """Write ``x,w`` CSV files (one per component) plus a JSON sidecar."""
    path = Path(path)
    comps = env.components if isinstance(env, ProductEnvironment) else (env,)
    written = []
    for i, c in enumerate(comps):
        if not isinstance(c, Environment1D):
            raise TypeError("only grid-sampled one-dimensional components can be written")
        p = path if len(comps) == 1 else path.with_name(f"{path.stem}_{i + 1}{path.suffix}")
        written.append(write_csv(p, ["x", "w"], zip(c.grid, c.values)))
    meta = env.metadata if len(comps) > 1 else comps[0].metadata
    written.append(write_json(path.with_suffix(".json"), meta))
    return written


def read_environment(path: str | Path, strict: bool = True) -> Environment1D:
    header, rows = read_csv(path)
    if header != ["x", "w"]:
        raise ValueError(f"{path}: expected header x,w")
    data = np.array([[float(a), float(b)] for a, b in rows])
    meta = {}
    side = Path(path).with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
    return Environment1D(data[:, 0], data[:, 1], meta, strict=strict)
