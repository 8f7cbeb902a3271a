"""Command-line front door: seeded runs writing CSV artifacts and a JSON manifest.

Configuration is layered: built-in defaults, then an optional preset, then a
JSON file given by ``--config``, then command-line flags.  Exit codes: 0 on
success, 2 on configuration errors, 3 on numerical failures, 4 when a
required index or path runs past its horizon.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .env import (
    BrownianLaw,
    DeterministicLaw,
    FactorizationError,
    GaussianKernelLaw,
    JumpLaw,
    LevyLaw,
    LevyTriplet,
    ProductLaw,
    ZeroEnvironment,
    kernel_names,
)
from .io import fmt, read_csv, write_csv, write_environment, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_HORIZON = 4

SUBCOMMANDS = ("sample", "energy", "index", "conditions", "simulate", "criterion", "report")
LAWS = ("zero", "brownian", "gaussian", "compound-poisson", "stable")
COMPONENTS = ("diffusion", "brox", "bm")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str = "sample"
    law: str = "brownian"
    kernel: str | None = None
    r: float = 1.5
    alpha: float = 0.5
    d: int = 1
    seed: int = 0
    trials: int | None = None
    k_grid: list = field(default_factory=lambda: [1.0, 10.0, 100.0, 1000.0])
    n_max: int = 8
    theta: float = 1.0
    t_end: float = 1.0
    dt: float = 0.01
    out: str | None = None
    workers: int = 1
    preset: str | None = None
    # options reachable through --config only
    L: float | None = None
    h: float = 0.01
    components: list | None = None
    quad: dict = field(default_factory=dict)
    M: float = 1.0
    a: float = 1.0
    stride: int = 1
    dt_clock: float = 1e-4
    dx_max: float = 0.05
    start: list | None = None
    rho: float | None = None
    t0: float = 0.0
    allow_exhaustion: bool = True

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.law not in LAWS:
            raise ConfigError(f"unknown law {self.law!r}; choose from {', '.join(LAWS)}")
        if self.kernel is not None and self.kernel not in kernel_names():
            raise ConfigError(f"unknown kernel {self.kernel!r}; choose from {', '.join(kernel_names())}")
        if self.law == "gaussian" and self.kernel is None:
            raise ConfigError("law 'gaussian' needs --kernel")
        _require(self.r > 1, "r must exceed 1")
        _require(self.alpha > 0, "alpha must be positive")
        _require(int(self.d) == self.d and self.d >= 1, "d must be a positive integer")
        _require(int(self.seed) == self.seed and self.seed >= 0, "seed must be a nonnegative integer")
        _require(self.trials is None or (int(self.trials) == self.trials and self.trials >= 1),
                 "trials must be a positive integer")
        _require(len(self.k_grid) > 0 and all(k >= 1 for k in self.k_grid), "k values must be >= 1")
        _require(int(self.n_max) == self.n_max and self.n_max >= 1, "n_max must be a positive integer")
        _require(self.theta >= 1, "theta must be >= 1")
        _require(self.t_end > 0 and self.dt > 0, "t_end and dt must be positive")
        _require(self.dt <= self.t_end, "dt must not exceed t_end")
        _require(int(self.workers) == self.workers and self.workers >= 1, "workers must be >= 1")
        _require(self.L is None or self.L > 0, "L must be positive")
        _require(self.h > 0, "h must be positive")
        _require(self.stride >= 1, "stride must be >= 1")
        _require(self.dt_clock > 0 and self.dx_max > 0, "dt_clock and dx_max must be positive")
        _require(self.M > 0 and self.a > 0, "M and a must be positive")
        _require(self.rho is None or self.rho > 0, "rho must be positive")
        if self.components is not None:
            bad = [c for c in self.components if c not in COMPONENTS]
            _require(not bad and self.components, f"components must be drawn from {COMPONENTS}")
        self.d, self.seed, self.n_max, self.workers = int(self.d), int(self.seed), int(self.n_max), int(self.workers)
        self.trials = None if self.trials is None else int(self.trials)
        self.k_grid = [float(k) for k in self.k_grid]
        self.quad_spec()
        return self

    def quad_spec(self):
        from .dirichlet import QuadratureSpec

        try:
            return QuadratureSpec(**self.quad)
        except TypeError as err:
            raise ConfigError(f"bad quad spec: {err}") from err

    def extent(self, default: float | None = None) -> float:
        if self.L is not None:
            return float(self.L)
        if default is not None:
            return default
        return float(math.ceil(1.05 * self.r ** (self.n_max + 1)))


def _require(ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(message)


PRESETS = {
    "brownian-events": {
        "subcommand": "conditions", "law": "brownian", "r": 1.5, "alpha": 0.5, "trials": 100_000,
        "seed": 0,
    },
    "brox-bm-criterion": {
        "subcommand": "criterion", "law": "brownian", "r": 1.5, "alpha": 0.5,
        "components": ["brox", "bm"], "k_grid": [1, 10, 100, 1000], "n_max": 12, "L": 200.0,
        "h": 0.02, "seed": 0,
    },
    "compound-poisson-event": {
        "subcommand": "conditions", "law": "compound-poisson", "M": 1.0, "a": 1.0,
        "trials": 100_000, "seed": 0,
    },
}

FLAG_KEYS = ("law", "kernel", "r", "alpha", "d", "seed", "trials", "k_grid", "n_max", "theta",
             "t_end", "dt", "out", "workers", "preset")


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so usage errors reach stderr as JSON."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="remlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"remlab {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file of RunConfig keys; flags override it")
        s.add_argument("--law")
        s.add_argument("--kernel")
        s.add_argument("--r", type=float)
        s.add_argument("--alpha", type=float)
        s.add_argument("--d", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--k-grid", dest="k_grid", help="comma-separated k values")
        s.add_argument("--k", type=float, help="single k (shorthand for --k-grid)")
        s.add_argument("--n-max", dest="n_max", type=int)
        s.add_argument("--theta", type=float)
        s.add_argument("--t-end", dest="t_end", type=float)
        s.add_argument("--dt", type=float)
        s.add_argument("--out")
        s.add_argument("--workers", type=int)
        s.add_argument("--preset", choices=sorted(PRESETS))
    return p


def _parse_k_grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as err:
        raise ConfigError(f"bad --k-grid {text!r}") from err


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then preset, then ``--config`` JSON, then flags."""
    known = {f.name for f in dataclasses.fields(RunConfig)}
    merged: dict = {}
    file_cfg: dict = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {args.config}: {err}") from err
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    preset = args.preset or file_cfg.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        if PRESETS[preset]["subcommand"] != args.subcommand:
            raise ConfigError(f"preset {preset} belongs to '{PRESETS[preset]['subcommand']}'")
        merged.update(PRESETS[preset])
        merged["preset"] = preset
    merged.update(file_cfg)
    for key in FLAG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = _parse_k_grid(v) if key == "k_grid" else v
    if args.k is not None:
        merged["k_grid"] = [args.k]
    merged["subcommand"] = args.subcommand
    try:
        cfg = RunConfig(**merged)
    except TypeError as err:
        raise ConfigError(str(err)) from err
    try:
        return cfg.validate()
    except TypeError as err:
        raise ConfigError(f"bad value type: {err}") from err


# ---------------------------------------------------------------------------
# helpers shared by the subcommands

def out_dir(cfg: RunConfig) -> Path:
    root = cfg.out or os.environ.get("REMLAB_OUT_DIR") or "remlab_out"
    return Path(root)


def make_law(cfg: RunConfig):
    if cfg.law == "zero":
        return DeterministicLaw(r=cfg.r, alpha=cfg.alpha, func=lambda x: 0.0 * x, label="zero")
    if cfg.law == "brownian":
        return BrownianLaw(r=cfg.r, alpha=cfg.alpha)
    if cfg.law == "gaussian":
        return GaussianKernelLaw(r=cfg.r, alpha=cfg.alpha, kernel=cfg.kernel)
    if cfg.law == "compound-poisson":
        return LevyLaw(r=cfg.r, alpha=cfg.alpha,
                       triplet=LevyTriplet(compound=((1.0, JumpLaw("fixed", 2.0)),)))
    # strictly stable with index 1/alpha
    index = 1.0 / cfg.alpha
    if not 0 < index <= 2:
        raise ConfigError("stable law needs alpha >= 1/2")
    return LevyLaw(r=cfg.r, alpha=cfg.alpha, triplet=LevyTriplet(stable_index=index))


def make_env(cfg: RunConfig, L: float):
    """The environment of a single-component run; ``zero`` stays exact."""
    if cfg.law == "zero":
        return ZeroEnvironment(cfg.d)
    law = make_law(cfg)
    if cfg.d == 1:
        return law.sample(cfg.seed, L, cfg.h)
    return ProductLaw(r=cfg.r, alpha=cfg.alpha, laws=(law,) * cfg.d).sample(cfg.seed, L, cfg.h)


def _component_envs(cfg: RunConfig, names: list, L: float) -> list:
    """One independent environment per non-Brownian component."""
    slots = [i for i, c in enumerate(names) if c != "bm"]
    envs = [None] * len(names)
    if not slots:
        return envs
    if cfg.law == "zero":
        for i in slots:
            envs[i] = ZeroEnvironment(1)
        return envs
    law = make_law(cfg)
    if len(slots) == 1:
        envs[slots[0]] = law.sample(cfg.seed, L, cfg.h)
    else:
        sampled = ProductLaw(r=cfg.r, alpha=cfg.alpha, laws=(law,) * len(slots)).sample(cfg.seed, L, cfg.h)
        for i, env in zip(slots, sampled.components):
            envs[i] = env
    return envs


def short(v: float) -> str:
    v = float(v)
    if abs(v) < 1e-12:
        v = 0.0
    return f"{v:.10g}"


@dataclass
class Outcome:
    outputs: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    exit_code: int = EXIT_OK


# ---------------------------------------------------------------------------
# subcommands

def cmd_sample(cfg: RunConfig, out: Path) -> Outcome:
    target = out if out.suffix == ".csv" else out / "env.csv"
    if cfg.law == "zero":
        env = DeterministicLaw(r=cfg.r, alpha=cfg.alpha, func=lambda x: 0.0 * x,
                               label="zero").sample(cfg.seed, cfg.extent(50.0), cfg.h)
    else:
        env = make_env(cfg, cfg.extent(50.0))
    paths = write_environment(env, target)
    return Outcome([str(p) for p in paths], [f"wrote {paths[0]}"])


def cmd_energy(cfg: RunConfig, out: Path) -> Outcome:
    from .dirichlet import BumpProfile, verify_bounds, write_energy_report

    env = make_env(cfg, cfg.extent())
    report = verify_bounds(env, cfg.k_grid, cfg.theta, BumpProfile(r=cfg.r, d=cfg.d),
                           cfg.quad_spec(), cfg.n_max)
    paths = write_energy_report(report, out, {"config": dataclasses.asdict(cfg)})
    bad = report.violations()
    lines = [f"levels={len(report.levels)} checks={len(report.applicable())} violations={len(bad)}"]
    lines += [f"violation {c.name} n={c.level} k={fmt(c.k)} slack={short(c.slack)}" for c in bad]
    return Outcome([str(p) for p in paths], lines,
                   {"violations": len(bad), "applicable": len(report.applicable())},
                   EXIT_NUMERIC if bad else EXIT_OK)


def cmd_index(cfg: RunConfig, out: Path) -> Outcome:
    from .dirichlet import BumpProfile, LevelTable, is_found

    env = make_env(cfg, cfg.extent())
    table = LevelTable(env, BumpProfile(r=cfg.r, d=cfg.d), cfg.quad_spec(), cfg.theta, n_max=cfg.n_max)
    rows, lines, missing = [], [], 0
    for k in cfg.k_grid:
        nk = table.index(k)
        missing += not is_found(nk)
        rows.append([k, nk if is_found(nk) else str(nk)])
        lines.append(f"n({fmt(int(k)) if k == int(k) else fmt(k)})={nk}")
    path = write_csv(out / "index.csv", ["k", "n_of_k"], rows)
    return Outcome([str(path)], lines, {"unresolved": missing},
                   EXIT_HORIZON if missing else EXIT_OK)


def cmd_conditions(cfg: RunConfig, out: Path) -> Outcome:
    from . import conditions as C

    if cfg.kernel is not None:
        res = C.gauss_condition_integrals(cfg.kernel, cfg.r, cfg.quad_spec())
        decay = C.gauss_mixing_decay(cfg.kernel, cfg.r, cfg.alpha)
        sup_t, inf_i, inf_a, holds = res.as_tuple()
        path = write_csv(out / "conditions.csv",
                         ["kernel", "r", "sup_term", "inf_inner", "inf_annulus", "holds", "decay_holds"],
                         [[cfg.kernel, cfg.r, sup_t, inf_i, inf_a, holds, decay.holds]])
        line = f"({short(sup_t)}, {short(inf_i)}, {short(inf_a)}, holds={fmt(holds)})"
        # failing the sufficient decay condition does not refute mixing
        mixing = "holds" if decay.holds else "unknown"
        return Outcome([str(path)], [line, f"weak mixing: {mixing}"],
                       {"holds": holds, "decay_holds": decay.holds})
    trials = cfg.trials or 100_000
    if cfg.law == "compound-poisson" or cfg.law == "stable":
        law = make_law(cfg)
        est = C.estimate_levy_event(law.triplet, cfg.M, cfg.a, trials, cfg.seed, workers=cfg.workers)
        path = write_csv(out / "events.csv", ["event"] + C.EVENT_HEADER, [["levy"] + est.row()])
        lines = [f"levy event p={short(est.p_hat)} wilson99=[{short(est.wilson_lo)}, "
                 f"{short(est.wilson_hi)}] positive={fmt(est.positive)}"]
        if est.warning:
            lines.append(f"warning: {est.warning}")
        return Outcome([str(path)], lines, {"positive": est.positive})
    law = make_law(cfg)
    search = C.combined_search(law, cfg.r, trials, cfg.seed, workers=cfg.workers)
    rows = [["RE1", ""] + search.re1.row()]
    rows += [["mainassump", fmt(float(a))] + est.row() for a, est in search.candidates]
    path = write_csv(out / "events.csv", ["event", "a"] + C.EVENT_HEADER, rows)
    lines = [f"RE1 p={short(search.re1.p_hat)} wilson99_lo={short(search.re1.wilson_lo)} "
             f"positive={fmt(search.re1.positive)}"]
    if search.found:
        at, eps, b, est = search.found
        lines.append(f"found a~={at} b={short(b)} wilson99_lo={short(est.wilson_lo)}")
    else:
        lines.append("no a~ with positive lower bound on the grid")
    return Outcome([str(path)], lines,
                   {"re1_positive": search.re1.positive, "found": search.found is not None})


def cmd_simulate(cfg: RunConfig, out: Path) -> Outcome:
    from .sde import Component, estimate_return, simulate_product

    names = cfg.components or ["diffusion"]
    envs = _component_envs(cfg, names, cfg.extent(50.0))
    comps = [Component.bm() if n == "bm" else
             Component(env, 3 if n == "brox" else 2, "adaptive", cfg.dt_clock, cfg.dx_max)
             for n, env in zip(names, envs)]
    trials = cfg.trials or 1000
    start = None if cfg.start is None else np.asarray(cfg.start, dtype=float)
    ps = simulate_product(comps, cfg.t_end, cfg.dt, cfg.seed, trials, start=start)
    m = len(comps)
    head = ["t"] + [f"x{j + 1}" for j in range(m)]
    outputs = [write_csv(out / "paths.csv", head, ps.rows(cfg.stride, 0))]
    final = ps.states[:, -1, :]
    outputs.append(write_csv(out / "endpoints.csv", ["trial"] + head[1:] + ["exhausted"],
                             ([i, *final[i], bool(ps.exhausted[i])] for i in range(trials))))
    n_exh = int(ps.exhausted.sum())
    lines = [f"trials={trials} t_end={fmt(cfg.t_end)} exhausted={n_exh}",
             f"mean |X(t_end)|={short(np.linalg.norm(final, axis=1).mean())}"]
    summary = {"exhausted": n_exh}
    if cfg.rho is not None:
        st = estimate_return(comps, start if start is not None else np.full(m, 3.0 / math.sqrt(m)),
                             cfg.rho, cfg.t0, cfg.t_end, trials, cfg.seed, cfg.dt)
        outputs.append(out / "returns.csv")
        st.write(outputs[-1])
        lo, hi = st.interval
        lines.append(f"return frequency={short(st.frequency)} wilson99=[{short(lo)}, {short(hi)}]")
        summary["return_frequency"] = st.frequency
    code = EXIT_HORIZON if n_exh and not cfg.allow_exhaustion else EXIT_OK
    return Outcome([str(p) for p in outputs], lines, summary, code)


def cmd_criterion(cfg: RunConfig, out: Path) -> Outcome:
    from .dirichlet import BumpProfile, ComponentSpec, product_criterion

    names = cfg.components or ["brox", "bm"]
    envs = _component_envs(cfg, names, cfg.extent())
    specs = [ComponentSpec(ZeroEnvironment(1)) if n == "bm" else
             ComponentSpec.time_changed(e) if n == "brox" else ComponentSpec(e, cfg.theta, cfg.theta)
             for n, e in zip(names, envs)]
    res = product_criterion(specs, cfg.k_grid, BumpProfile(r=cfg.r), cfg.quad_spec(), cfg.n_max)
    N = len(specs)
    head = ["k"] + [f"n{i + 1}" for i in range(N)] + [f"M{i + 1}" for i in range(N)] + ["value"]
    rows = [[p.k, *[("" if n is None else n) for n in p.indices], *p.masses,
             p.value if p.complete else math.nan] for p in res.points]
    path = write_csv(out / "criterion.csv", head, rows)
    lines = [f"k={fmt(p.k)} n={list(p.indices)} value={short(p.value) if p.complete else 'incomplete'}"
             for p in res.points]
    summary = {"complete": res.complete}
    if res.complete and len(res.points) > 1:
        summary["decreasing"] = res.decreasing_from(min(1, len(res.points) - 1))
        lines.append(f"decreasing from second k: {fmt(summary['decreasing'])}")
    return Outcome([str(path)], lines, summary, EXIT_OK if res.complete else EXIT_HORIZON)


def _numeric(column: list[str]) -> list[float]:
    vals = []
    for v in column:
        try:
            x = float(v)
        except ValueError:
            return []
        if math.isfinite(x):
            vals.append(x)
    return vals


def cmd_report(cfg: RunConfig, out: Path) -> Outcome:
    """Summarize every CSV found under the output directory; nothing is recomputed."""
    if not out.is_dir():
        raise ConfigError(f"no output directory {out}")
    files = sorted(p for p in out.rglob("*.csv") if p.name != "report.csv")
    rows, summary = [], {}
    for p in files:
        header, body = read_csv(p)
        rel = str(p.relative_to(out))
        cols = {}
        for j, name in enumerate(header):
            vals = _numeric([r[j] for r in body if j < len(r)])
            if vals:
                cols[name] = {"min": min(vals), "max": max(vals), "mean": sum(vals) / len(vals)}
                rows.append([rel, name, len(body), min(vals), max(vals), sum(vals) / len(vals)])
        summary[rel] = {"header": header, "rows": len(body), "numeric": cols}
    paths = [write_csv(out / "report.csv", ["file", "column", "rows", "min", "max", "mean"], rows),
             write_json(out / "report.json", summary)]
    lines = [f"{rel}: {info['rows']} rows" for rel, info in summary.items()]
    return Outcome([str(p) for p in paths], lines or ["no CSV artifacts found"], {"files": len(files)})


COMMANDS = {
    "sample": cmd_sample, "energy": cmd_energy, "index": cmd_index, "conditions": cmd_conditions,
    "simulate": cmd_simulate, "criterion": cmd_criterion, "report": cmd_report,
}


def _versions() -> dict:
    import numba
    import scipy

    return {"remlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def _manifest_path(cfg: RunConfig, out: Path) -> Path:
    if out.suffix == ".csv":
        return out.with_name(f"{out.stem}_manifest.json")
    return out / f"{cfg.subcommand}_manifest.json"


def _fail(code: int, err: BaseException, subcommand: str | None) -> int:
    payload = {"error": type(err).__name__, "message": str(err), "exit_code": code,
               "subcommand": subcommand}
    print(json.dumps(payload), file=sys.stderr)
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as err:
        return _fail(EXIT_CONFIG, err, None)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg = resolve_config(args)
    except ConfigError as err:
        return _fail(EXIT_CONFIG, err, args.subcommand)
    out = out_dir(cfg)
    t_start = time.perf_counter()
    try:
        outcome = COMMANDS[cfg.subcommand](cfg, out)
    except ConfigError as err:
        return _fail(EXIT_CONFIG, err, cfg.subcommand)
    except (ArithmeticError, FactorizationError, FloatingPointError, RuntimeError) as err:
        return _fail(EXIT_NUMERIC, err, cfg.subcommand)
    except (ValueError, TypeError, KeyError) as err:
        return _fail(EXIT_CONFIG, err, cfg.subcommand)
    manifest = {
        "config": dataclasses.asdict(cfg),
        "seeds": {"seed": cfg.seed},
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - t_start,
        "outputs": outcome.outputs,
        "summary": outcome.summary,
        "exit_code": outcome.exit_code,
    }
    write_json(_manifest_path(cfg, out), manifest)
    for line in outcome.lines:
        print(line)
    if outcome.exit_code == EXIT_HORIZON:
        print(json.dumps({"error": "HorizonExhausted", "message": "result runs past its horizon",
                          "exit_code": EXIT_HORIZON, "subcommand": cfg.subcommand}), file=sys.stderr)
    elif outcome.exit_code == EXIT_NUMERIC:
        print(json.dumps({"error": "BoundViolation", "message": "numerical checks failed",
                          "exit_code": EXIT_NUMERIC, "subcommand": cfg.subcommand}), file=sys.stderr)
    return outcome.exit_code


def main() -> None:
    sys.exit(run())
