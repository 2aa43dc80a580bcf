"""Parameter-sweep orchestration: locate the multiplicity threshold and
report branches from both the energy and shooting paths.

A sweep evaluates points lam on a grid (or by auto-doubling from an initial
value until the full ordered chain of m-1 solution windows appears, then
bisecting the threshold to a relative width).  Each point runs multistart
minimization per truncation level and a shooting scan, classifies solutions
by the window a_k < sup <= a_{k+1}, and records the ordering flag.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__ as _tool_version
from . import nonlinearity
from .energy import MinimizeOptions, minimize_multistart
from .exceptions import ConfigError
from .grid import GridFunction, RadialGrid
from .nfunction import NFunctionSpec
from .nonlinearity import BumpNonlinearity
from .radial import find_branches

SCHEMA_VERSION = 1

_PARAM_NAMES = {
    "power": ("p",),
    "exp_growth": (),
    "power_gamma": ("gamma",),
    "p_log": ("p",),
    "two_power": ("p", "q"),
}


@dataclass(frozen=True)
class DomainConfig:
    N: int = 1
    R: float = 1.0
    nodes: int = 2000
    shoot_steps: Optional[int] = None  # default: nodes - 1 (matching r nodes)
    scout_nodes: Optional[int] = None  # coarser resolution for threshold search

    @property
    def steps(self) -> int:
        return self.shoot_steps if self.shoot_steps else self.nodes - 1


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 60000
    cascade_iter: int = 4000
    multistart_deltas: tuple = (0.25, 0.125, 0.0625)
    workers: int = 1
    retry_budget: int = 1

    def options(self) -> MinimizeOptions:
        return MinimizeOptions(tol=self.tol, max_iter=self.max_iter,
                               cascade_iter=self.cascade_iter)


@dataclass(frozen=True)
class SweepConfig:
    lambdas: Optional[tuple] = None
    auto: bool = False
    lambda_init: float = 1.0
    max_doublings: int = 24
    bisect_rel_width: float = 0.05
    residual_factor: float = 1e-6  # shooting profiles refined to factor*(1+lam)


@dataclass(frozen=True)
class Config:
    nfunction: NFunctionSpec
    bumps: BumpNonlinearity
    domain: DomainConfig
    solver: SolverConfig
    sweep: SweepConfig
    raw: dict = field(default_factory=dict, compare=False)


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def config_from_dict(raw: dict) -> Config:
    """Build a validated Config from a JSON-compatible dictionary."""
    _require(isinstance(raw, dict), "config must be a mapping")
    unknown = set(raw) - {"nfunction", "bumps", "domain", "solver", "sweep"}
    _require(not unknown, f"unknown config sections: {sorted(unknown)}")
    nf_raw = raw.get("nfunction")
    _require(isinstance(nf_raw, dict) and "kind" in nf_raw,
             "nfunction section with a kind is required")
    kind = nf_raw["kind"]
    _require(kind in _PARAM_NAMES, f"unsupported nfunction kind {kind!r}")
    pmap = nf_raw.get("params", {})
    _require(isinstance(pmap, dict), "nfunction params must be a mapping")
    names = _PARAM_NAMES[kind]
    _require(set(pmap) == set(names),
             f"nfunction kind {kind!r} needs params {list(names)}, got {sorted(pmap)}")
    try:
        spec = NFunctionSpec(kind, tuple(float(pmap[n]) for n in names),
                             quadrature_tol=float(nf_raw.get("quadrature_tol", 1e-10)))
    except ValueError as exc:
        raise ConfigError(f"invalid nfunction parameters: {exc}") from exc

    b_raw = raw.get("bumps")
    _require(isinstance(b_raw, dict) and "a" in b_raw and "b" in b_raw,
             "bumps section with breakpoint lists a and b is required")
    if "nodes" in b_raw:
        nd = b_raw["nodes"]
        _require(isinstance(nd, dict) and "x" in nd and "y" in nd,
                 "bumps.nodes needs x and y arrays")
        pl = nonlinearity.PiecewiseLinear(np.asarray(nd["x"], float),
                                          np.asarray(nd["y"], float))
        bumps = nonlinearity.validate(b_raw["a"], b_raw["b"], pl)
    else:
        bumps = nonlinearity.default_bump_builder(b_raw["a"], b_raw["b"],
                                                  b_raw.get("amplitudes"))

    d_raw = raw.get("domain", {})
    domain = DomainConfig(N=int(d_raw.get("N", 1)), R=float(d_raw.get("R", 1.0)),
                          nodes=int(d_raw.get("nodes", 2000)),
                          shoot_steps=d_raw.get("shoot_steps"),
                          scout_nodes=d_raw.get("scout_nodes"))
    _require(domain.N >= 1 and domain.R > 0 and domain.nodes >= 16,
             "domain needs N >= 1, R > 0, nodes >= 16")

    s_raw = raw.get("solver", {})
    solver = SolverConfig(
        tol=float(s_raw.get("tol", 1e-6)),
        max_iter=int(s_raw.get("max_iter", 60000)),
        cascade_iter=int(s_raw.get("cascade_iter", 4000)),
        multistart_deltas=tuple(s_raw.get("multistart_deltas", (0.25, 0.125, 0.0625))),
        workers=int(s_raw.get("workers", 1)),
        retry_budget=int(s_raw.get("retry_budget", 1)),
    )
    _require(solver.tol > 0 and solver.workers >= 1, "solver needs tol > 0, workers >= 1")

    w_raw = raw.get("sweep", {})
    lambdas = w_raw.get("lambdas")
    auto = bool(w_raw.get("auto", lambdas is None))
    if lambdas is not None:
        _require(isinstance(lambdas, (list, tuple)) and len(lambdas) > 0,
                 "sweep.lambdas must be a non-empty list")
        lambdas = tuple(float(x) for x in lambdas)
        _require(all(x >= 0 for x in lambdas), "sweep.lambdas must be nonnegative")
    sweep = SweepConfig(
        lambdas=lambdas,
        auto=auto,
        lambda_init=float(w_raw.get("lambda_init", 1.0)),
        max_doublings=int(w_raw.get("max_doublings", 24)),
        bisect_rel_width=float(w_raw.get("bisect_rel_width", 0.05)),
        residual_factor=float(w_raw.get("residual_factor", 1e-6)),
    )
    _require(sweep.lambdas is not None or sweep.auto,
             "sweep needs either a lambdas list or auto mode")
    return Config(spec, bumps, domain, solver, sweep, raw=raw)


def load_config(path) -> Config:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# per-point evaluation


@dataclass(frozen=True)
class BranchRow:
    k: int
    sup_norm: float
    energy: float
    converged: bool
    grad_norm: float
    window_ok: bool
    radial_sup: Optional[float]
    boundary_residual: Optional[float]
    agreement: Optional[float]
    sup_gt_b: bool
    integral_positive: float


@dataclass(frozen=True)
class RadialRow:
    k: int
    d: float
    sup_norm: float
    boundary_value: float
    monotone: bool
    sup_gt_b: Optional[bool]
    integral_positive: Optional[float]
    bv_resolved: bool = True


@dataclass(frozen=True)
class PointReport:
    lam: float
    nodes: int
    rows: List[BranchRow]
    radial: List[RadialRow]
    ordering_ok: bool
    inconclusive: bool
    notes: List[str]


@dataclass(frozen=True)
class LambdaBar:
    lo: float
    hi: float
    estimate: float


@dataclass
class SweepReport:
    schema_version: int
    tool_version: str
    config: dict
    lambdas: List[float]
    entries: List[PointReport]
    lambda_bar: Optional[LambdaBar]
    findings: List[str]
    profiles: Dict[str, Dict[str, List[float]]]


def _profile_key(lam: float, k: int, path: str) -> str:
    return f"lam={lam!r};k={k};path={path}"


def solve_point(cfg: Config, lam: float, nodes: Optional[int] = None,
                warm: Optional[Dict[int, GridFunction]] = None):
    """Evaluate one parameter value through both solution paths.

    Returns (PointReport, profiles, warm) where profiles maps profile keys to
    r/u arrays and warm carries the energy minimizers for reuse at nearby
    parameter values.
    """
    bn = cfg.bumps
    nf = cfg.nfunction
    m = bn.m
    nodes = int(nodes or cfg.domain.nodes)
    scale = nodes / cfg.domain.nodes
    steps = max(64, int(round(cfg.domain.steps * scale)))
    grid = RadialGrid.uniform(cfg.domain.R, cfg.domain.N, nodes)
    opts = cfg.solver.options()
    warm = warm or {}
    notes: List[str] = []

    def run_level(k):
        tf = nonlinearity.truncate(bn, k + 1)
        extra = [warm[k]] if k in warm else []
        res = minimize_multistart(grid, nf, tf, lam, opts,
                                  deltas=cfg.solver.multistart_deltas,
                                  extra_starts=extra)
        retries = 0
        while (not res.converged and res.grad_norm > 1e3 * opts.tol
               and retries < cfg.solver.retry_budget):
            retries += 1
            bigger = replace(opts, max_iter=2 * opts.max_iter,
                             cascade_iter=2 * opts.cascade_iter)
            res = minimize_multistart(grid, nf, tf, lam, bigger,
                                      deltas=cfg.solver.multistart_deltas,
                                      extra_starts=extra + [res.u])
        return k, res

    windows = list(range(1, m))
    if cfg.solver.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.solver.workers) as pool:
            solved = dict(pool.map(run_level, windows))
    else:
        solved = dict(run_level(k) for k in windows)

    scan = find_branches(nf, bn, lam, cfg.domain.N, cfg.domain.R, n_steps=steps,
                         residual_target=cfg.sweep.residual_factor * (1.0 + lam))
    notes.extend(scan.notes)
    if scan.degenerate:
        notes.append("shooting scan degenerate in the center value")

    rows = []
    profiles: Dict[str, Dict[str, List[float]]] = {}
    new_warm: Dict[int, GridFunction] = {}
    for k in windows:
        res = solved[k]
        sup = res.u.sup_norm
        window_ok = bool((bn.a[k - 1] < sup <= bn.a[k]) and np.isfinite(res.energy))
        in_window = [b for b in scan.branches if b.k == k]
        match = None
        if in_window:
            gap = min(abs(b.shoot.sup_norm - sup) for b in in_window)
            near = [b for b in in_window
                    if abs(b.shoot.sup_norm - sup) <= 10.0 * gap + 1e-12]
            match = min(near, key=lambda b: (not b.bv_resolved,
                                             abs(b.shoot.sup_norm - sup)))
        claims_src = sup if window_ok else (match.shoot.sup_norm if match else None)
        if claims_src is not None:
            sup_gt_b = bool(claims_src > bn.b[k - 1])
            integral_positive = float(bn.window_integral(k, claims_src))
        else:
            sup_gt_b = False
            integral_positive = float("nan")
        rows.append(BranchRow(
            k=k,
            sup_norm=float(sup),
            energy=float(res.energy),
            converged=bool(res.converged),
            grad_norm=float(res.grad_norm),
            window_ok=window_ok,
            radial_sup=float(match.shoot.sup_norm) if match else None,
            boundary_residual=abs(float(match.shoot.boundary_value)) if match else None,
            agreement=abs(float(match.shoot.sup_norm) - sup) if match else None,
            sup_gt_b=sup_gt_b,
            integral_positive=integral_positive,
        ))
        new_warm[k] = res.u
        profiles[_profile_key(lam, k, "energy")] = {
            "r": [float(x) for x in grid.r], "u": [float(x) for x in res.u.values]}
        if match is not None:
            profiles[_profile_key(lam, k, "radial")] = {
                "r": [float(x) for x in match.shoot.grid.r],
                "u": [float(x) for x in match.shoot.u]}
    radial_rows = [RadialRow(
        k=b.k, d=b.shoot.d, sup_norm=b.shoot.sup_norm,
        boundary_value=b.shoot.boundary_value, monotone=b.shoot.monotone_flag,
        sup_gt_b=b.sup_gt_b, integral_positive=b.integral_positive,
        bv_resolved=b.bv_resolved) for b in scan.branches]
    ordering_ok = all(r.window_ok for r in rows) and all(
        any(b.k == k for b in scan.branches) for k in windows)
    inconclusive = any((not r.converged) and r.grad_norm > 1e3 * opts.tol for r in rows)
    report = PointReport(lam=float(lam), nodes=nodes, rows=rows, radial=radial_rows,
                         ordering_ok=bool(ordering_ok), inconclusive=bool(inconclusive),
                         notes=notes)
    return report, profiles, new_warm


# ---------------------------------------------------------------------------
# sweep drivers


def monotonicity_findings(entries: List[PointReport]) -> List[str]:
    """Once the ordering flag holds it should hold at every larger tested
    value; regressions are reported as findings, never silently dropped."""
    found = []
    seen_ok = None
    for e in sorted(entries, key=lambda e: e.lam):
        if e.ordering_ok and seen_ok is None:
            seen_ok = e.lam
        if seen_ok is not None and e.lam > seen_ok and not e.ordering_ok:
            found.append(
                f"ordering flag regressed at lam={e.lam} after holding at lam={seen_ok}")
    return found


def run_sweep(cfg: Config) -> SweepReport:
    """Evaluate the configured parameter grid, or auto-locate the threshold.

    Auto mode doubles lam from lambda_init until the ordered chain appears on
    both paths (or the doubling budget runs out), then bisects the bracket to
    the configured relative width.  The threshold is reported as an interval;
    with a scouting resolution configured, the search runs on the coarser
    grid and the passing endpoint is re-evaluated at full resolution.
    """
    entries: List[PointReport] = []
    profiles: Dict[str, Dict[str, List[float]]] = {}
    findings: List[str] = []
    warm: Dict[int, GridFunction] = {}

    def evaluate(lam, nodes=None):
        nonlocal warm
        point, prof, warm = solve_point(cfg, lam, nodes=nodes, warm=warm)
        entries.append(point)
        profiles.update(prof)
        return point

    lambda_bar = None
    if cfg.sweep.lambdas is not None:
        for lam in sorted(cfg.sweep.lambdas):
            evaluate(lam)
        passing = [e.lam for e in entries if e.ordering_ok]
        if passing:
            hi = min(passing)
            below = [e.lam for e in entries if e.lam < hi]
            lo = max(below) if below else 0.0
            lambda_bar = LambdaBar(lo=lo, hi=hi, estimate=hi)
    else:
        scout = cfg.domain.scout_nodes
        lam = cfg.sweep.lambda_init
        lo, hi = None, None
        for _ in range(cfg.sweep.max_doublings + 1):
            point = evaluate(lam, nodes=scout)
            if point.ordering_ok:
                hi = lam
                break
            lo = lam
            lam *= 2.0
        if hi is not None:
            if lo is None:
                lo = 0.0
            while lo > 0.0 and (hi - lo) > cfg.sweep.bisect_rel_width * hi:
                mid = 0.5 * (lo + hi)
                point = evaluate(mid, nodes=scout)
                if point.ordering_ok:
                    hi = mid
                else:
                    lo = mid
            if scout:
                point = evaluate(hi)  # confirm at full resolution
                if not point.ordering_ok:
                    findings.append(
                        f"threshold candidate {hi} passed at scout resolution "
                        f"but not at full resolution")
            lambda_bar = LambdaBar(lo=float(lo), hi=float(hi), estimate=float(hi))
        else:
            findings.append(
                f"ordered chain not reached within {cfg.sweep.max_doublings} doublings "
                f"from {cfg.sweep.lambda_init}")

    entries.sort(key=lambda e: (e.lam, e.nodes))
    findings.extend(monotonicity_findings(entries))
    return SweepReport(
        schema_version=SCHEMA_VERSION,
        tool_version=_tool_version,
        config=cfg.raw,
        lambdas=[e.lam for e in entries],
        entries=entries,
        lambda_bar=lambda_bar,
        findings=findings,
        profiles=profiles,
    )


# ---------------------------------------------------------------------------
# export / import

CSV_HEADER = "lambda,k,sup_norm,energy,boundary_residual,sup_gt_b,integral_positive,ordering_ok"


def _csv_cell(x):
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def export(report: SweepReport, format: str, path) -> None:
    """Write the report: 'csv' branch table, 'json' full document,
    'profiles' directory of r,u files, or 'all' (directory with the three)."""
    path = Path(path)
    if format == "csv":
        lines = [CSV_HEADER]
        for e in report.entries:
            for r in e.rows:
                lines.append(",".join(_csv_cell(v) for v in (
                    e.lam, r.k, r.sup_norm, r.energy, r.boundary_residual,
                    r.sup_gt_b, r.integral_positive, e.ordering_ok)))
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    elif format == "json":
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report_to_json(report))
    elif format == "profiles":
        path.mkdir(parents=True, exist_ok=True)
        for key, prof in report.profiles.items():
            parts = dict(p.split("=", 1) for p in key.split(";"))
            lam = float(parts["lam"])
            name = f"profile_lam{lam:.8g}_k{parts['k']}_{parts['path']}.csv"
            with open(path / name, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["r", "u"])
                for r, u in zip(prof["r"], prof["u"]):
                    w.writerow([repr(r), repr(u)])
    elif format == "all":
        path.mkdir(parents=True, exist_ok=True)
        export(report, "csv", path / "branches.csv")
        export(report, "json", path / "report.json")
        export(report, "profiles", path / "profiles")
    else:
        raise ValueError(f"unknown export format {format!r}")


def _sanitize(x):
    """JSON-safe values: numpy scalars unwrapped, non-finite floats to None."""
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _sanitize(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_sanitize(v) for v in x]
    return x


def report_to_dict(report: SweepReport) -> dict:
    return _sanitize(asdict(report))


def report_to_json(report: SweepReport) -> str:
    return json.dumps(report_to_dict(report), indent=1)


def report_from_dict(data: dict) -> SweepReport:
    def opt_f(x):
        return None if x is None else float(x)

    entries = [PointReport(
        lam=e["lam"], nodes=e["nodes"],
        rows=[BranchRow(**{**r, "radial_sup": opt_f(r["radial_sup"]),
                           "boundary_residual": opt_f(r["boundary_residual"]),
                           "agreement": opt_f(r["agreement"]),
                           "integral_positive": (float("nan")
                                                 if r["integral_positive"] is None
                                                 else r["integral_positive"])})
              for r in e["rows"]],
        radial=[RadialRow(**r) for r in e["radial"]],
        ordering_ok=e["ordering_ok"], inconclusive=e["inconclusive"],
        notes=list(e["notes"])) for e in data["entries"]]
    lb = data.get("lambda_bar")
    return SweepReport(
        schema_version=data["schema_version"],
        tool_version=data["tool_version"],
        config=data["config"],
        lambdas=list(data["lambdas"]),
        entries=entries,
        lambda_bar=LambdaBar(**lb) if lb else None,
        findings=list(data["findings"]),
        profiles=data["profiles"],
    )


def report_from_json(text: str) -> SweepReport:
    return report_from_dict(json.loads(text))
