"""Scenario configs, the runner, report emission and parameter sweeps.

A scenario is a single JSON document describing a surface, a grid, a
reference frame, a list of checks with optional tolerance overrides, and
probe/growth parameters.  Runs are deterministic: a fixed config yields a
byte-identical report, regardless of the parallelism degree, because grid
points are reduced in a fixed order and all reductions are associative.
"""

from __future__ import annotations

import copy
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import checks as _checks
from .checks import (
    CheckConfigError,
    CheckResult,
    DEFAULT_TOLERANCES,
    GLOBAL_CHECKS,
    GRID_CHECKS,
    ProbeParams,
    aggregate_check,
    evaluate_point,
    growth_check_result,
    make_check_state,
    probe_check_result,
)
from .expressions import ParseError, parse_expression
from .immersions import (
    GridSpec,
    Immersion,
    ImmersionError,
    build_graph_immersion,
    catalogue_lookup,
)


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class CheckSpec:
    name: str
    tol: float
    options: dict = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    """Validated scenario: surface, grid, frame, checks, probe parameters."""

    surface: Immersion
    grid: GridSpec
    reference_frame: np.ndarray | None
    checks: list[CheckSpec]
    probe: ProbeParams | None
    output_path: str | None
    output_format: str
    detail: bool
    raw: dict

    @property
    def frame_or_default(self) -> np.ndarray:
        if self.reference_frame is not None:
            return self.reference_frame
        # coordinate n-plane; for graphs this makes the alignment positive
        return np.eye(self.surface.n, self.surface.n + self.surface.m)


def _require(cond, path, message):
    if not cond:
        raise ConfigError(path, message)


def _build_surface(d: dict) -> Immersion:
    _require(isinstance(d, dict), "surface", "must be an object")
    kind = d.get("kind", "catalogue")
    if kind == "catalogue":
        name = d.get("name")
        _require(isinstance(name, str), "surface.name", "catalogue surfaces need a name")
        try:
            return catalogue_lookup(name, d.get("params", {}))
        except ImmersionError as exc:
            raise ConfigError("surface", str(exc)) from exc
    if kind == "graph":
        exprs = d.get("exprs")
        _require(isinstance(exprs, list) and exprs, "surface.exprs", "graph surfaces need expressions")
        n = d.get("n", 2)
        _require(n in (2, 3), "surface.n", "domain dimension must be 2 or 3")
        try:
            return build_graph_immersion(exprs, n, name=d.get("name", "graph"))
        except (ParseError, ImmersionError) as exc:
            raise ConfigError("surface.exprs", str(exc)) from exc
    raise ConfigError("surface.kind", f"unknown kind {kind!r} (catalogue | graph)")


def _build_grid(d: dict, n: int) -> GridSpec:
    _require(isinstance(d, dict), "grid", "must be an object")
    ranges = d.get("ranges")
    counts = d.get("counts")
    _require(isinstance(ranges, list) and len(ranges) == n, "grid.ranges",
             f"need {n} [lo, hi] pairs")
    _require(isinstance(counts, list) and len(counts) == n, "grid.counts",
             f"need {n} sample counts")
    mask = None
    if d.get("mask"):
        try:
            mask = parse_expression(d["mask"], n)
        except ParseError as exc:
            raise ConfigError("grid.mask", str(exc)) from exc
    try:
        return GridSpec(
            tuple((float(lo), float(hi)) for lo, hi in ranges),
            tuple(int(c) for c in counts),
            mask,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("grid", str(exc)) from exc


def _build_frame(rows, surface: Immersion) -> np.ndarray | None:
    if rows is None:
        return None
    frame = np.asarray(rows, dtype=float)
    n, N = surface.n, surface.n + surface.m
    _require(frame.shape == (n, N), "reference_frame", f"must be {n} rows of length {N}")
    gram = frame @ frame.T
    _require(
        float(np.abs(gram - np.eye(n)).max()) <= 1e-8,
        "reference_frame",
        "rows must be orthonormal",
    )
    return frame


def _build_checks(items, surface, frame) -> list[CheckSpec]:
    _require(isinstance(items, list), "checks", "must be a list")
    specs = []
    known = set(GRID_CHECKS) | set(GLOBAL_CHECKS)
    for idx, item in enumerate(items):
        path = f"checks[{idx}]"
        _require(isinstance(item, dict), path, "must be an object")
        name = item.get("name")
        _require(isinstance(name, str), f"{path}.name", "missing check name")
        _require(name in known, f"{path}.name",
                 f"unknown check {name!r} (known: {', '.join(sorted(known))})")
        tol = item.get("tol", DEFAULT_TOLERANCES[name])
        _require(isinstance(tol, (int, float)) and tol > 0, f"{path}.tol",
                 "tolerance must be positive")
        options = {k: v for k, v in item.items() if k not in ("name", "tol")}
        if name in GRID_CHECKS:
            try:
                make_check_state(name, surface, frame, options, float(tol))
            except CheckConfigError as exc:
                raise ConfigError(path, str(exc)) from exc
        specs.append(CheckSpec(name=name, tol=float(tol), options=options))
    return specs


def _build_probe(d: dict | None) -> ProbeParams | None:
    if d is None:
        return None
    _require(isinstance(d, dict), "probe", "must be an object")
    known = {"t", "q", "s", "R", "R0", "cells"}
    for key in d:
        _require(key in known, f"probe.{key}", "unknown probe parameter")
    params = ProbeParams(
        t=float(d.get("t", 3.0)),
        q=float(d.get("q", 4.0)),
        s=float(d.get("s", 1.0)),
        R=float(d.get("R", 1.0)),
        R0=float(d.get("R0", 0.5)),
        cells=int(d.get("cells", 256)),
    )
    try:
        params.validate()
    except CheckConfigError as exc:
        raise ConfigError("probe", str(exc)) from exc
    return params


def load_config(data: dict) -> ScenarioConfig:
    """Validate a raw config dict into a ScenarioConfig."""
    _require(isinstance(data, dict), "config", "must be a JSON object")
    surface = _build_surface(data.get("surface", {}))
    grid = _build_grid(data.get("grid", {}), surface.n)
    frame = _build_frame(data.get("reference_frame"), surface)
    effective_frame = frame if frame is not None else np.eye(surface.n, surface.n + surface.m)
    specs = _build_checks(data.get("checks", []), surface, effective_frame)
    probe = _build_probe(data.get("probe"))
    if any(s.name == "probe" for s in specs) and probe is None:
        probe = _build_probe({})  # defaults, already legal
    output = data.get("output", {}) or {}
    fmt = output.get("format", "json")
    _require(fmt in ("json", "csv"), "output.format", "format must be json or csv")
    return ScenarioConfig(
        surface=surface,
        grid=grid,
        reference_frame=frame,
        checks=specs,
        probe=probe,
        output_path=output.get("path"),
        output_format=fmt,
        detail=bool(output.get("detail", False)),
        raw=data,
    )


def load_config_file(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"not valid JSON: {exc}") from exc
    return load_config(data)


@dataclass
class Report:
    """Everything a scenario run produced."""

    scenario: dict
    results: list[CheckResult]
    overall: str  # 'pass' | 'fail'
    n_grid_points: int
    elapsed_seconds: float  # console-only; excluded from emitted files

    def to_dict(self, detail: bool = False) -> dict:
        out = {
            "scenario": self.scenario,
            "n_grid_points": self.n_grid_points,
            "overall": self.overall,
            "checks": [],
        }
        for res in self.results:
            entry = {
                "name": res.name,
                "verdict": res.verdict,
                "worst_residual": res.worst_residual,
                "tolerance": res.tolerance,
                "n_points": res.n_points,
                "n_skipped": res.n_skipped,
            }
            if res.reason:
                entry["reason"] = res.reason
            if res.extras:
                entry["extras"] = _jsonify(res.extras)
            if detail:
                entry["details"] = _jsonify(res.details)
            out["checks"].append(entry)
        return out


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


# module-level worker so ProcessPoolExecutor can pickle it
def _point_worker(payload, point):
    imm, frame, specs = payload
    return evaluate_point(imm, frame, specs, point)


def run_scenario(config: ScenarioConfig, jobs: int = 1) -> Report:
    """Execute every configured check; deterministic for a fixed config.

    Grid points are mapped (possibly in parallel) in a fixed order and
    reduced by order-independent max/sum aggregations, so the report does
    not depend on the parallelism degree.
    """
    start = time.perf_counter()
    imm = config.surface
    frame = config.frame_or_default

    grid_specs = []
    for spec in config.checks:
        if spec.name in GRID_CHECKS:
            state = make_check_state(spec.name, imm, frame, spec.options, spec.tol)
            grid_specs.append((spec.name, state))

    points = config.grid.points()
    per_point = []
    if grid_specs:
        payload = (imm, frame, grid_specs)
        if jobs is not None and jobs > 1 and len(points) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                chunk = max(1, len(points) // (4 * jobs))
                per_point = list(
                    pool.map(_point_worker, [payload] * len(points), points, chunksize=chunk)
                )
        else:
            per_point = [_point_worker(payload, p) for p in points]
        all_failed = per_point and all(
            all(rec["skipped"] and str(rec["reason"]).startswith("evaluation error")
                for rec in by_check.values())
            for by_check in per_point
        )
        if all_failed:
            first = next(iter(per_point[0].values()))
            raise CheckConfigError(f"surface evaluation failed at every grid point: {first['reason']}")

    results = []
    for spec in config.checks:
        if spec.name in GRID_CHECKS:
            records = [by_check[spec.name] for by_check in per_point]
            results.append(aggregate_check(spec.name, spec.tol, records))
        elif spec.name == "growth":
            radii = spec.options.get("radii", [1.0, 2.0, 4.0])
            cells = int(spec.options.get("cells", 256))
            try:
                result, _ = growth_check_result(imm, radii, cells, spec.tol)
            except CheckConfigError as exc:
                result = CheckResult(
                    name="growth", tolerance=spec.tol, worst_residual=None,
                    verdict="not-applicable", n_points=0, n_skipped=0, reason=str(exc),
                )
            results.append(result)
        elif spec.name == "probe":
            params = config.probe if config.probe is not None else ProbeParams()
            result, _ = probe_check_result(imm, frame, params, config.grid, spec.tol)
            results.append(result)

    overall = "pass" if all(r.verdict != "fail" for r in results) else "fail"
    return Report(
        scenario=copy.deepcopy(config.raw),
        results=results,
        overall=overall,
        n_grid_points=len(points),
        elapsed_seconds=time.perf_counter() - start,
    )


# -- emission --------------------------------------------------------------------

def _format_float(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def emit_report(report: Report, fmt: str, path, detail: bool = False) -> None:
    """Write a report to disk; floats round-trip at full double precision.

    The wall-clock timing is deliberately omitted so identical configs
    produce byte-identical files.
    """
    if fmt == "json":
        text = json.dumps(report.to_dict(detail=detail), indent=2) + "\n"
    elif fmt == "csv":
        lines = ["check,u1,u2,u3,residual,status"]
        for res in report.results:
            if not res.details:
                continue
            for rec in res.details:
                pt = list(rec.get("point", ()))
                coords = [_format_float(c) for c in pt] + [""] * (3 - len(pt))
                if rec["skipped"]:
                    status = "skipped"
                    resid = ""
                else:
                    status = "ok" if rec["residual"] <= res.tolerance else "violation"
                    resid = _format_float(rec["residual"])
                lines.append(",".join([res.name, *coords, resid, status]))
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# -- sweeps ----------------------------------------------------------------------

def _set_by_path(data: dict, dotted: str, value):
    keys = dotted.split(".")
    cur = data
    for key in keys[:-1]:
        if key not in cur or not isinstance(cur[key], dict):
            cur[key] = {}
        cur = cur[key]
    cur[keys[-1]] = value


def sweep(raw_config: dict, jobs: int = 1):
    """Run the scenario once per swept parameter value.

    The config's `sweep` section is {"parameter": <dotted.path>, "values":
    [...]}.  Returns (reports, aggregation table); the table collects the
    implied constants and growth fits that each run produced.
    """
    sweep_cfg = raw_config.get("sweep")
    if not isinstance(sweep_cfg, dict):
        raise ConfigError("sweep", "sweep runs need a sweep section")
    parameter = sweep_cfg.get("parameter")
    values = sweep_cfg.get("values")
    if not isinstance(parameter, str) or not parameter:
        raise ConfigError("sweep.parameter", "must be a dotted config path")
    if not isinstance(values, list):
        raise ConfigError("sweep.values", "must be a list (may be empty)")

    reports = []
    table = []
    for value in values:
        variant = copy.deepcopy(raw_config)
        variant.pop("sweep", None)
        _set_by_path(variant, parameter, value)
        config = load_config(variant)
        report = run_scenario(config, jobs=jobs)
        reports.append(report)
        row = {"parameter": parameter, "value": _jsonify(value), "overall": report.overall}
        for res in report.results:
            if res.name == "probe":
                row["implied_c3"] = res.extras.get("implied_c3")
                row["implied_c4"] = res.extras.get("implied_c4")
            if res.name == "growth":
                row["volumes"] = res.extras.get("volumes")
                row["volume_exponent"] = res.extras.get("volume_exponent")
                row["max_v"] = res.extras.get("max_v")
        table.append(_jsonify(row))
    return reports, table
