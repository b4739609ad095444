"""
Named experiments: configuration, sweeps, report files and verdicts.

An experiment is described by an :class:`ExperimentSpec` (usually parsed
from JSON by :func:`validate_config`).  :func:`run_experiment` walks the
sweep, writes one CSV and one JSON file per sweep point, and a
``summary.json`` holding every check with its threshold and a top-level
verdict.  A failing sweep point is recorded and the sweep carries on.
"""

from __future__ import annotations

import json
import logging
import math
import re
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .elliptic import reproduce_slice, slice_consistency, solve_steady
from .exact import ExactSolution
from .fields import SpaceTimeField, fmt, write_field_csv
from .geometry import build_grid, cylinder_nodes
from .problem import ExteriorData, FaceData, ProblemConfig, Source
from .regularity import (
    HolderSampling,
    boundary_lipschitz_ratio,
    fit_boundary_exponent,
    flatness_trace,
    holder_seminorm,
    tangential_derivative,
    weighted_time_derivative,
)
from .solver import (
    check_discrete_comparison,
    coarse_comparison_grid,
    march_to_steady,
    solve_problem,
    stable_dt,
)

__all__ = [
    "KINDS",
    "TOLERANCES",
    "ConfigError",
    "Diagnostic",
    "GridParams",
    "ExperimentSpec",
    "ExperimentReport",
    "validate_config",
    "spec_from_dict",
    "run_experiment",
    "dumps",
]

log = logging.getLogger(__name__)

KINDS = (
    "manufactured_convergence",
    "exponent_inhomogeneous",
    "exponent_mixed_data",
    "homogeneous_weighted",
    "flatness_decay",
    "slice_check",
    "comparison_suite",
)

TOLERANCES = {
    "min_order": 1.0,
    "weighted_rel_error": 0.05,
    "weighted_min_xn": 1.0 / 16.0,
    "alpha_abs": 0.05,
    "ratio_slack": 0.1,
    "holder_change": 0.20,
    "holder_growth": 1.5,
    "holder_offset": 0.2,
    "lipschitz_change": 0.20,
    "slice_decrease": 1.5,
    "steady_agreement": 1e-6,
    "floor_factor": 10.0,
    "comparison_eps_factor": 10.0,
    "runtime_convergence_s": 120.0,
    "runtime_exponent_s": 60.0,
}


# ---------------------------------------------------------------------------
# JSON output


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with every float printed to 17 significant digits (NaN -> null)."""
    return _encode(_plain(obj), indent, 0) + "\n"


# ---------------------------------------------------------------------------
# Specs and validation


class ConfigError(ValueError):
    """Raised with every diagnostic found, not only the first."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    line: int
    path: str
    message: str

    def __str__(self):
        where = f"line {self.line}" if self.line else "line ?"
        return f"{where}: {self.path}: {self.message}"


@dataclass(frozen=True)
class GridParams:
    """How a resolution N becomes a grid: N normal intervals, ratios for the rest."""

    n_dims: int = 2
    tan_ratio: float = 0.25
    time_ratio: float = 0.25
    grading_q: float = 2.0
    t_start: float = -1.0

    def build(self, n_normal, gamma, n_time=None):
        n_tan = max(2, int(round(self.tan_ratio * n_normal)))
        if n_time is None:
            n_time = max(1, int(round(self.time_ratio * n_normal)))
        return build_grid(self.n_dims, n_tan, n_normal, n_time, self.grading_q, gamma, self.t_start)


# per-kind defaults; anything given in a config overrides these
KIND_DEFAULTS = {
    "manufactured_convergence": dict(
        grid=dict(tan_ratio=0.25, time_ratio=0.25, grading_q=2.0),
        problem=dict(exact="phi"),
        resolutions=[64, 128, 256],
    ),
    "exponent_inhomogeneous": dict(
        grid=dict(tan_ratio=0.5, time_ratio=0.25, grading_q=2.0),
        problem=dict(source=1.0),
        resolutions=[256],
        options=dict(K=5, k_min=1, k_max=5, cross_check=True),
    ),
    "flatness_decay": dict(
        grid=dict(tan_ratio=0.5, time_ratio=0.25, grading_q=2.0),
        problem=dict(source=1.0),
        resolutions=[256],
        options=dict(K=5, k_min=1, k_max=5, cross_check=False),
    ),
    "exponent_mixed_data": dict(
        grid=dict(tan_ratio=4.0, time_ratio=0.25, grading_q=2.0),
        problem=dict(source=1.0),
        resolutions=[256],
        betas=[0.25, 0.75],
        options=dict(K=5, k_min=1, k_max=5),
    ),
    "homogeneous_weighted": dict(
        grid=dict(tan_ratio=0.25, time_ratio=2.0, grading_q=4.0),
        problem=dict(bump=1.0),
        resolutions=[128, 256],
        options=dict(radius=0.5),
    ),
    "slice_check": dict(
        grid=dict(tan_ratio=0.25, time_ratio=2.0, grading_q=4.0),
        problem=dict(bump=1.0),
        resolutions=[64, 128, 256],
        options=dict(tolerance=1e-10),
    ),
    "comparison_suite": dict(
        grid=dict(n_dims=1, t_start=-0.01),
        problem=dict(scheme="explicit"),
        resolutions=[8],
        options=dict(trials=100, cfl_safety=0.9),
    ),
}

_PROBLEM_KEYS = {"exact", "source", "sources", "bump", "scheme", "linear_solve_tolerance"}
_OPTION_KEYS = {
    "eta", "K", "k_min", "k_max", "cross_check", "radius", "tolerance", "trials",
    "cfl_safety", "holder_cap", "holder_random_pairs",
}
_TOP_KEYS = {
    "name", "kind", "gammas", "gamma", "betas", "beta", "resolutions", "resolution",
    "grid", "problem", "options", "seed", "output_dir",
}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    kind: str
    gammas: tuple
    resolutions: tuple
    betas: tuple = ()
    grid: GridParams = field(default_factory=GridParams)
    problem: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "runs"

    def __post_init__(self):
        diags = _check_spec_values(self.to_dict(), lambda path: 0)
        if diags:
            raise ConfigError(diags)

    def option(self, key, default=None):
        return self.options.get(key, KIND_DEFAULTS[self.kind].get("options", {}).get(key, default))

    def setting(self, key, default=None):
        return self.problem.get(key, KIND_DEFAULTS[self.kind].get("problem", {}).get(key, default))

    def to_dict(self):
        return {
            "name": self.name,
            "kind": self.kind,
            "gammas": list(self.gammas),
            "betas": list(self.betas),
            "resolutions": list(self.resolutions),
            "grid": asdict(self.grid),
            "problem": dict(self.problem),
            "options": dict(self.options),
            "seed": self.seed,
            "output_dir": str(self.output_dir),
        }


def _line_locator(raw):
    """Map a dotted key path to the 1-based line where its last key appears."""

    def locate(path):
        pos = 0
        for key in re.sub(r"\[\d+\]", "", path).split("."):
            m = re.compile(r'"%s"\s*:' % re.escape(key)).search(raw, pos)
            if m is None:
                return 0
            pos = m.start()
        return raw.count("\n", 0, pos) + 1

    return locate


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_unit_interval(values, path, label, locate, diags):
    for i, v in enumerate(values):
        if not _is_number(v):
            diags.append(Diagnostic(locate(path), f"{path}[{i}]", f"{label} must be a number"))
        elif not 0 < v < 1:
            diags.append(Diagnostic(locate(path), f"{path}[{i}]", f"{label} out of (0,1): {v!r}"))


def _check_spec_values(d, locate):
    diags = []
    if not isinstance(d.get("name"), str) or not d.get("name"):
        diags.append(Diagnostic(locate("name"), "name", "name must be a nonempty string"))
    kind = d.get("kind")
    if kind not in KINDS:
        diags.append(Diagnostic(locate("kind"), "kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}"))
    for key, label in (("gammas", "gamma"), ("resolutions", "resolution")):
        vals = d.get(key)
        if not isinstance(vals, (list, tuple)) or len(vals) == 0:
            diags.append(Diagnostic(locate(key), key, f"sweep list '{key}' must be a nonempty list"))
    if isinstance(d.get("gammas"), (list, tuple)):
        _check_unit_interval(d["gammas"], "gammas", "gamma", locate, diags)
    betas = d.get("betas", [])
    if not isinstance(betas, (list, tuple)):
        diags.append(Diagnostic(locate("betas"), "betas", "betas must be a list"))
    else:
        _check_unit_interval(betas, "betas", "beta", locate, diags)
        if kind == "exponent_mixed_data" and len(betas) == 0:
            diags.append(Diagnostic(locate("betas"), "betas", "sweep list 'betas' must be nonempty for power-profile face data"))
    for i, n in enumerate(d.get("resolutions") or []):
        if not isinstance(n, int) or isinstance(n, bool) or n < 8:
            diags.append(Diagnostic(locate("resolutions"), f"resolutions[{i}]", f"resolution must be an integer >= 8: {n!r}"))
    seed = d.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        diags.append(Diagnostic(locate("seed"), "seed", "seed must be an integer"))
    grid = d.get("grid", {})
    if isinstance(grid, dict):
        n_dims = grid.get("n_dims", 2)
        if n_dims not in (1, 2, 3):
            diags.append(Diagnostic(locate("grid.n_dims"), "grid.n_dims", f"n_dims must be 1, 2 or 3: {n_dims!r}"))
        for key in ("tan_ratio", "time_ratio"):
            v = grid.get(key, 1.0)
            if not _is_number(v) or v <= 0:
                diags.append(Diagnostic(locate(f"grid.{key}"), f"grid.{key}", f"{key} must be a positive number"))
        q = grid.get("grading_q", 2.0)
        if not _is_number(q) or q < 1:
            diags.append(Diagnostic(locate("grid.grading_q"), "grid.grading_q", f"grading_q must be >= 1: {q!r}"))
        ts = grid.get("t_start", -1.0)
        if not _is_number(ts) or ts >= 0:
            diags.append(Diagnostic(locate("grid.t_start"), "grid.t_start", f"t_start must be negative: {ts!r}"))
    problem = d.get("problem", {})
    if isinstance(problem, dict):
        exact = problem.get("exact")
        if exact is not None and exact not in ("phi", "psi"):
            diags.append(Diagnostic(locate("problem.exact"), "problem.exact", f"exact must be 'phi' or 'psi': {exact!r}"))
        scheme = problem.get("scheme")
        if scheme is not None and scheme not in ("explicit", "implicit"):
            diags.append(Diagnostic(locate("problem.scheme"), "problem.scheme", f"unknown scheme {scheme!r}"))
        sources = problem.get("sources")
        if sources is not None:
            if not isinstance(sources, list) or not all(_is_number(s) for s in sources):
                diags.append(Diagnostic(locate("problem.sources"), "problem.sources", "sources must be a list of numbers"))
            elif len(sources) not in (1, len(betas) if isinstance(betas, (list, tuple)) else -1):
                diags.append(Diagnostic(locate("problem.sources"), "problem.sources", "sources must have length 1 or match betas"))
        for key in ("source", "bump"):
            if key in problem and not _is_number(problem[key]):
                diags.append(Diagnostic(locate(f"problem.{key}"), f"problem.{key}", f"{key} must be a number"))
    options = d.get("options", {})
    if isinstance(options, dict):
        eta = options.get("eta", 0.5)
        if not _is_number(eta) or not 0 < eta < 1:
            diags.append(Diagnostic(locate("options.eta"), "options.eta", f"eta out of (0,1): {eta!r}"))
        kmin, kmax = options.get("k_min", 1), options.get("k_max", 5)
        if isinstance(kmin, int) and isinstance(kmax, int) and kmax <= kmin:
            diags.append(Diagnostic(locate("options.k_max"), "options.k_max", "k_max must exceed k_min"))
        trials = options.get("trials", 1)
        if not isinstance(trials, int) or trials < 1:
            diags.append(Diagnostic(locate("options.trials"), "options.trials", "trials must be a positive integer"))
    return diags


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _normalise(raw_dict, locate, diags):
    """Fold scalar aliases into sweep lists and flag unknown keys."""
    d = dict(raw_dict)
    for key in d:
        if key not in _TOP_KEYS:
            diags.append(Diagnostic(locate(key), key, "unknown key"))
    for single, plural in (("gamma", "gammas"), ("beta", "betas"), ("resolution", "resolutions")):
        if single in d:
            if plural in d:
                diags.append(Diagnostic(locate(single), single, f"give either '{single}' or '{plural}', not both"))
            d[plural] = _as_list(d.pop(single))
    for block, allowed in (("grid", set(GridParams.__dataclass_fields__)), ("problem", _PROBLEM_KEYS), ("options", _OPTION_KEYS)):
        val = d.get(block, {})
        if not isinstance(val, dict):
            diags.append(Diagnostic(locate(block), block, f"'{block}' must be an object"))
            d[block] = {}
            continue
        for key in val:
            if key not in allowed:
                diags.append(Diagnostic(locate(f"{block}.{key}"), f"{block}.{key}", "unknown key"))
    kind = d.get("kind")
    defaults = KIND_DEFAULTS.get(kind, {})
    if "resolutions" not in d and "resolutions" in defaults:
        d["resolutions"] = list(defaults["resolutions"])
    if "betas" not in d and "betas" in defaults:
        d["betas"] = list(defaults["betas"])
    return d


def _build_spec(d, defaults):
    grid_kw = dict(defaults.get("grid", {}))
    grid_kw.update({k: v for k, v in d.get("grid", {}).items() if k in GridParams.__dataclass_fields__})
    return ExperimentSpec(
        name=d["name"],
        kind=d["kind"],
        gammas=tuple(float(g) for g in d["gammas"]),
        resolutions=tuple(int(n) for n in d["resolutions"]),
        betas=tuple(float(b) for b in d.get("betas", ())),
        grid=GridParams(**grid_kw),
        problem={k: v for k, v in d.get("problem", {}).items() if k in _PROBLEM_KEYS},
        options={k: v for k, v in d.get("options", {}).items() if k in _OPTION_KEYS},
        seed=int(d.get("seed", 0)),
        output_dir=str(d.get("output_dir", "runs")),
    )


def spec_from_dict(d, raw=None):
    """Validate a parsed config; raises :class:`ConfigError` listing every problem."""
    locate = _line_locator(raw) if raw is not None else (lambda path: 0)
    if not isinstance(d, dict):
        raise ConfigError([Diagnostic(1, "<root>", "config must be a JSON object")])
    diags = []
    d = _normalise(d, locate, diags)
    diags += _check_spec_values(d, locate)
    if diags:
        raise ConfigError(diags)
    return _build_spec(d, KIND_DEFAULTS[d["kind"]])


def validate_config(raw):
    """Parse JSON text into an :class:`ExperimentSpec`.

    All violations are collected and raised together in a
    :class:`ConfigError`; each diagnostic carries the line of the
    offending key.
    """
    try:
        d = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError([Diagnostic(exc.lineno, "<json>", exc.msg)]) from None
    return spec_from_dict(d, raw)


# ---------------------------------------------------------------------------
# Running


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    directory: Path
    points: list
    checks: list

    @property
    def verdict(self):
        return bool(self.checks) and all(c["pass"] for c in self.checks) and all(
            p.get("status") == "ok" for p in self.points
        )

    def summary(self):
        return {
            "name": self.spec.name,
            "kind": self.spec.kind,
            "spec": self.spec.to_dict(),
            "points": self.points,
            "checks": self.checks,
            "verdict": "pass" if self.verdict else "fail",
        }

    def check_lines(self):
        out = []
        for c in self.checks:
            tag = "PASS" if c["pass"] else "FAIL"
            out.append(f"{tag} {c['name']}: value={fmt(c['value'])} {c['relation']} {fmt(c['threshold'])}")
        for p in self.points:
            if p.get("status") != "ok":
                out.append(f"FAIL point {p['id']}: {p.get('error')}")
        return out


def _check(name, value, relation, threshold):
    value = float(value)
    ok = math.isfinite(value) and (value <= threshold if relation == "<=" else value >= threshold)
    return {"name": name, "value": value, "relation": relation, "threshold": float(threshold), "pass": bool(ok)}


class _Writer:
    def __init__(self, directory):
        self.directory = Path(directory)
        (self.directory / "points").mkdir(parents=True, exist_ok=True)

    def path(self, point_id, suffix):
        return self.directory / "points" / f"{point_id}{suffix}"

    def rows(self, point_id, header, rows):
        with open(self.path(point_id, ".csv"), "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")

    def field(self, point_id, fld, levels=None):
        write_field_csv(self.path(point_id, ".csv"), fld, levels)

    def summary(self, point_id, data):
        self.path(point_id, ".json").write_text(dumps(data))


def _point_id(**kw):
    return "_".join(f"{k}={fmt(v) if isinstance(v, float) else v}" for k, v in kw.items())


def _run_point(writer, point_id, func):
    """Run one sweep point; errors are recorded, never propagated."""
    t0 = time.perf_counter()
    try:
        data = func()
        data = {"id": point_id, "status": "ok", **data}
    except Exception as exc:  # isolation: a failed point must not sink its siblings
        log.warning("sweep point %s failed: %s", point_id, exc)
        data = {"id": point_id, "status": "error", "error": f"{type(exc).__name__}: {exc}"}
    data["runtime_s"] = time.perf_counter() - t0
    writer.summary(point_id, data)
    return data


def _face_center(grid, t=0.0):
    return (tuple([0.0] * (grid.n_dims - 1) + [0.0]), float(t))


# -- manufactured convergence ------------------------------------------------


def _weighted_error(field, exact, min_xn):
    grid = field.grid
    w = weighted_time_derivative(field).values
    xn = np.broadcast_to(grid.normal_coordinate(), grid.shape)
    target = xn ** (1.0 - grid.gamma)
    sel = (xn >= min_xn) & np.isfinite(w)
    return float(np.max(np.abs(w[sel] - target[sel]) / target[sel]))


def _run_convergence(spec, writer):
    kind = spec.setting("exact", "phi")
    scheme = spec.setting("scheme", "implicit")
    points, checks = [], []
    for gamma in spec.gammas:
        rows = []
        for n in spec.resolutions:
            pid = _point_id(gamma=gamma, N=n)

            def work(gamma=gamma, n=n, pid=pid):
                grid = spec.grid.build(n, gamma)
                ex = ExactSolution(kind, gamma)
                config = ProblemConfig.from_exact(ex, scheme=scheme)
                if scheme == "explicit":
                    limit = stable_dt(grid, gamma, config.cfl_safety)
                    n_time = int(np.ceil(-grid.t_start / limit))
                    if n_time > 200_000:
                        raise ValueError(f"explicit scheme needs {n_time} steps on this grid")
                    grid = build_grid(grid.n_dims, grid.n_tan, grid.n_normal, n_time, grid.grading_q, gamma, grid.t_start)
                u = solve_problem(config, grid)
                last = grid.shape[0] - 1
                err = float(np.max(np.abs(u.values[last] - ex(grid.mesh(), 0.0))))
                writer.field(pid, u, levels=[last])
                out = {
                    "gamma": gamma, "N": n, "exact": kind, "scheme": scheme,
                    "linf_error": err, "min": float(np.min(u.values[last])), "max": float(np.max(u.values[last])),
                }
                if kind == "psi":
                    out["weighted_rel_error"] = _weighted_error(u, ex, TOLERANCES["weighted_min_xn"])
                return out

            p = _run_point(writer, pid, work)
            points.append(p)
            if p["status"] == "ok":
                rows.append(p)
                checks.append(_check(f"runtime gamma={gamma} N={n}", p["runtime_s"], "<=", TOLERANCES["runtime_convergence_s"]))
        for a, b in zip(rows, rows[1:]):
            order = math.log(a["linf_error"] / b["linf_error"]) / math.log(b["N"] / a["N"])
            b["order"] = order
            checks.append(_check(f"order gamma={gamma} N={a['N']}->{b['N']}", order, ">=", TOLERANCES["min_order"]))
        if kind == "psi" and rows:
            fine = rows[-1]
            checks.append(_check(
                f"weighted derivative gamma={gamma} N={fine['N']}",
                fine["weighted_rel_error"], "<=", TOLERANCES["weighted_rel_error"],
            ))
    return points, checks


# -- steady exponent experiments ---------------------------------------------


def steady_floor(grid, gamma, source):
    """10x the steady manufactured error on ``grid``.

    The reference is u* = -F x_n^(2-gamma) / ((2-gamma)(1-gamma)), which
    solves x_n^gamma Lap u = -F with its own boundary values.
    """
    if source == 0:
        source = 1.0
    xn = np.broadcast_to(grid.normal_coordinate(), grid.spatial_shape)
    exact = -source * xn ** (2.0 - gamma) / ((2.0 - gamma) * (1.0 - gamma))
    u = solve_steady(grid, gamma, source, exact)
    return TOLERANCES["floor_factor"] * float(np.max(np.abs(u - exact)))


def _trace_rows(trace):
    return [(lv.k, trace.eta ** lv.k, lv.a_k, lv.residual_k) for lv in trace.levels]


def _steady_zero_data(spec, gamma, n, cross_check):
    # a steady field needs only the two end levels
    grid = spec.grid.build(n, gamma, n_time=1)
    source = float(spec.setting("source", 1.0))
    u = solve_steady(grid, gamma, source, 0.0)
    out = {"gamma": gamma, "N": n, "source": source}
    if cross_check:
        config = ProblemConfig(gamma, Source("constant", source), FaceData("zero"), ExteriorData("zero"))
        um = march_to_steady(config, grid, tol=1e-9)
        out["steady_route_difference"] = float(np.max(np.abs(um - u)))
    floor = steady_floor(grid, gamma, source)
    field_ = SpaceTimeField.constant_in_time(grid, u)
    eta = float(spec.option("eta", 0.5))
    trace = flatness_trace(field_, _face_center(grid), eta, int(spec.option("K", 5)), "flat")
    fit = fit_boundary_exponent(trace, int(spec.option("k_min", 1)), int(spec.option("k_max", 5)), floor)
    out.update({"floor": floor, "truncated": trace.truncated, "fit": fit.to_dict(), "metric": "anisotropic"})
    return out, trace, fit


def _run_exponent_inhomogeneous(spec, writer, decay_checks=False):
    points, checks = [], []
    cross = bool(spec.option("cross_check", True))
    for gamma in spec.gammas:
        for n in spec.resolutions:
            pid = _point_id(gamma=gamma, N=n)
            holder = {}

            def work(gamma=gamma, n=n, pid=pid):
                out, trace, fit = _steady_zero_data(spec, gamma, n, cross)
                writer.rows(pid, ["k", "radius", "a_k", "residual_k"], _trace_rows(trace))
                holder["trace"], holder["fit"] = trace, fit
                return out

            p = _run_point(writer, pid, work)
            points.append(p)
            if p["status"] != "ok":
                continue
            alpha = p["fit"]["alpha_hat"]
            tag = f"gamma={gamma} N={n}"
            if decay_checks:
                checks += _decay_checks(holder["trace"], holder["fit"], tag)
            else:
                checks.append(_check(f"alpha_hat error {tag}", abs(alpha - (1.0 - gamma)), "<=", TOLERANCES["alpha_abs"]))
                if "steady_route_difference" in p:
                    checks.append(_check(f"steady routes agree {tag}", p["steady_route_difference"], "<=", TOLERANCES["steady_agreement"]))
            checks.append(_check(f"runtime {tag}", p["runtime_s"], "<=", TOLERANCES["runtime_exponent_s"]))
    return points, checks


def _decay_checks(trace, fit, tag):
    """Residual and coefficient ratios over the levels used by the fit."""
    lo, hi = fit.k_range
    levels = [lv for lv in trace.levels if lo <= lv.k <= hi]
    eta, alpha, slack = trace.eta, fit.alpha_hat, TOLERANCES["ratio_slack"]
    out = []
    res_bound = eta ** (1.0 + alpha - slack)
    worst = max(b.residual_k / a.residual_k for a, b in zip(levels, levels[1:]))
    out.append(_check(f"residual ratio {tag}", worst, "<=", res_bound))
    diffs = [abs(b.a_k - a.a_k) for a, b in zip(levels, levels[1:])]
    worst_a = max(d2 / d1 for d1, d2 in zip(diffs, diffs[1:]))
    out.append(_check(f"coefficient ratio {tag}", worst_a, "<=", eta ** (alpha - slack)))
    return out


def _run_exponent_mixed(spec, writer):
    points, checks = [], []
    sources = spec.setting("sources")
    if sources is None:
        sources = [spec.setting("source", 1.0)]
    if len(sources) == 1:
        sources = list(sources) * len(spec.betas)
    for gamma in spec.gammas:
        for beta, source in zip(spec.betas, sources):
            for n in spec.resolutions:
                pid = _point_id(gamma=gamma, beta=beta, N=n)

                def work(gamma=gamma, beta=beta, source=float(source), n=n, pid=pid):
                    grid = spec.grid.build(n, gamma, n_time=1)
                    config = ProblemConfig(gamma, Source("constant", source), FaceData("power", beta=beta),
                                           ExteriorData("extend"))
                    u = solve_steady(grid, gamma, source, config.boundary_values(grid, 0.0))
                    floor = steady_floor(grid, gamma, source)
                    fld = SpaceTimeField.constant_in_time(grid, u)
                    trace = flatness_trace(fld, _face_center(grid), float(spec.option("eta", 0.5)),
                                           int(spec.option("K", 5)), "affine")
                    fit = fit_boundary_exponent(trace, int(spec.option("k_min", 1)), int(spec.option("k_max", 5)), floor)
                    writer.rows(pid, ["k", "radius", "a_k", "residual_k"], _trace_rows(trace))
                    return {
                        "gamma": gamma, "beta": beta, "N": n, "source": source, "floor": floor,
                        "expected_alpha": min(beta, 1.0 - gamma), "truncated": trace.truncated,
                        "fit": fit.to_dict(), "metric": "anisotropic",
                    }

                p = _run_point(writer, pid, work)
                points.append(p)
                if p["status"] == "ok":
                    err = abs(p["fit"]["alpha_hat"] - p["expected_alpha"])
                    checks.append(_check(f"alpha_hat error gamma={gamma} beta={beta} N={n}", err, "<=", TOLERANCES["alpha_abs"]))
    return points, checks


# -- homogeneous runs --------------------------------------------------------


def homogeneous_config(gamma, bump=1.0, scheme="implicit"):
    """Zero source, zero face data, nontrivial initial bump."""
    return ProblemConfig(gamma, Source("constant", 0.0), FaceData("zero"), ExteriorData("zero", bump=bump), scheme=scheme)


def _sampling(spec):
    return HolderSampling(
        cap=int(spec.option("holder_cap", 20_000)),
        n_random=int(spec.option("holder_random_pairs", 1_000_000)),
        seed=spec.seed,
    )


def _relative_change(a, b):
    return abs(b - a) / abs(a) if a != 0 else math.inf


def _run_homogeneous(spec, writer):
    points, checks = [], []
    bump = float(spec.setting("bump", 1.0))
    radius = float(spec.option("radius", 0.5))
    offset = TOLERANCES["holder_offset"]
    for gamma in spec.gammas:
        rows = []
        for n in spec.resolutions:
            pid = _point_id(gamma=gamma, N=n)

            def work(gamma=gamma, n=n, pid=pid):
                grid = spec.grid.build(n, gamma)
                u = solve_problem(homogeneous_config(gamma, bump), grid)
                region = cylinder_nodes(grid, _face_center(grid), radius)
                w = weighted_time_derivative(u)
                sampling = _sampling(spec)
                reports = []
                for expo in (1.0 - gamma, min(1.0, 1.0 - gamma + offset)):
                    for metric in ("parabolic", "anisotropic"):
                        reports.append(("weighted", holder_seminorm(w, expo, metric, region, sampling)))
                boot = [("time", (0,) * (grid.n_dims - 1) + (1,))]
                if grid.n_dims > 1:
                    boot.insert(0, ("x1", (1,) + (0,) * (grid.n_dims - 1)))
                for name, kappa in boot:
                    wd = weighted_time_derivative(tangential_derivative(u, kappa))
                    reports.append((f"bootstrap_{name}", holder_seminorm(wd, 1.0 - gamma, "parabolic", region, sampling)))
                lip = boundary_lipschitz_ratio(u, region)
                writer.rows(pid, ["quantity", "metric", "exponent", "seminorm_lower_bound", "pair_count"],
                            [(q, r.metric, r.exponent, r.seminorm_lower_bound, r.pair_count) for q, r in reports])
                out = {"gamma": gamma, "N": n, "region_nodes": region.size, "lipschitz_ratio": lip,
                       "reports": [dict(quantity=q, **r.to_dict()) for q, r in reports]}
                return out

            p = _run_point(writer, pid, work)
            points.append(p)
            if p["status"] == "ok":
                rows.append(p)
        if len(rows) < 2:
            continue
        a, b = rows[-2], rows[-1]
        tag = f"gamma={gamma} N={a['N']}->{b['N']}"

        def pick(row, quantity, expo, metric="parabolic"):
            for r in row["reports"]:
                if r["quantity"] == quantity and r["metric"] == metric and abs(r["exponent"] - expo) < 1e-12:
                    return r["seminorm_lower_bound"]
            raise KeyError(quantity)

        e0, e1 = 1.0 - gamma, min(1.0, 1.0 - gamma + offset)
        checks.append(_check(f"weighted holder change {tag}", _relative_change(pick(a, "weighted", e0), pick(b, "weighted", e0)),
                             "<=", TOLERANCES["holder_change"]))
        checks.append(_check(f"weighted holder growth above 1-gamma {tag}", pick(b, "weighted", e1) / pick(a, "weighted", e1),
                             ">=", TOLERANCES["holder_growth"]))
        checks.append(_check(f"lipschitz ratio change {tag}", _relative_change(a["lipschitz_ratio"], b["lipschitz_ratio"]),
                             "<=", TOLERANCES["lipschitz_change"]))
        for q in ("bootstrap_x1", "bootstrap_time"):
            if any(r["quantity"] == q for r in b["reports"]):
                checks.append(_check(f"{q} holder change {tag}", _relative_change(pick(a, q, e0), pick(b, q, e0)),
                                     "<=", TOLERANCES["holder_change"]))
    return points, checks


def _run_slice_check(spec, writer):
    points, checks = [], []
    bump = float(spec.setting("bump", 1.0))
    tol = float(spec.option("tolerance", 1e-10))
    for gamma in spec.gammas:
        rows = []
        for n in spec.resolutions:
            pid = _point_id(gamma=gamma, N=n)

            def work(gamma=gamma, n=n, pid=pid):
                grid = spec.grid.build(n, gamma)
                u = solve_problem(homogeneous_config(gamma, bump), grid)
                last = grid.shape[0] - 1
                _, report = reproduce_slice(u, last, gamma, tol)
                defect = SpaceTimeField(grid, np.full(grid.shape, np.nan))
                defect.values[last] = report.defect
                writer.field(pid, defect, levels=[last])
                return {"gamma": gamma, "N": n, "tolerance": tol, **report.to_dict()}

            p = _run_point(writer, pid, work)
            points.append(p)
            if p["status"] == "ok":
                rows.append(p)
                checks.append(_check(f"slice reproduction gamma={gamma} N={n}", p["reproduction_error"], "<=",
                                     p["defect_max"] + tol))
        for a, b in zip(rows, rows[1:]):
            checks.append(_check(f"defect decrease gamma={gamma} N={a['N']}->{b['N']}",
                                 a["defect_max"] / b["defect_max"], ">=", TOLERANCES["slice_decrease"]))
    return points, checks


def comparison_configs(gamma, scheme="explicit", cfl_safety=0.9):
    """An ordered pair of problems: zero data below, positive source and data above."""
    low = ProblemConfig(gamma, Source("constant", 0.0), FaceData("zero"), ExteriorData("zero"),
                        scheme=scheme, cfl_safety=cfl_safety)
    high = ProblemConfig(gamma, Source("constant", 1.0), FaceData("linear", offset=0.5),
                         ExteriorData("extend", bump=0.5), scheme=scheme, cfl_safety=cfl_safety)
    return low, high


def _run_comparison(spec, writer):
    points, checks = [], []
    scheme = spec.setting("scheme", "explicit")
    trials = int(spec.option("trials", 100))
    safety = float(spec.option("cfl_safety", 0.9))
    for gamma in spec.gammas:
        for n in spec.resolutions:
            pid = _point_id(gamma=gamma, N=n)

            def work(gamma=gamma, n=n, pid=pid):
                grid = coarse_comparison_grid(gamma, spec.grid.n_dims, n, max(2, int(round(spec.grid.tan_ratio * n))),
                                              safety, spec.grid.t_start)
                low, high = comparison_configs(gamma, scheme, safety)
                rep = check_discrete_comparison(low, high, grid, trials, spec.seed)
                writer.rows(pid, ["instances", "max_violation", "scale"], [(rep.instances, rep.max_violation, rep.scale)])
                return {"gamma": gamma, "N": n, "grid": grid.to_dict(), **rep.to_dict()}

            p = _run_point(writer, pid, work)
            points.append(p)
            if p["status"] == "ok":
                checks.append(_check(f"comparison violation gamma={gamma} N={n}", p["max_violation"], "<=",
                                     TOLERANCES["comparison_eps_factor"] * np.finfo(float).eps * p["scale"]))
    return points, checks


_PIPELINES = {
    "manufactured_convergence": _run_convergence,
    "exponent_inhomogeneous": _run_exponent_inhomogeneous,
    "flatness_decay": lambda spec, writer: _run_exponent_inhomogeneous(spec, writer, decay_checks=True),
    "exponent_mixed_data": _run_exponent_mixed,
    "homogeneous_weighted": _run_homogeneous,
    "slice_check": _run_slice_check,
    "comparison_suite": _run_comparison,
}


def run_experiment(spec, output_dir=None):
    """Run every sweep point of ``spec`` and write its report bundle.

    Files go to ``<output_dir>/<name>/``: ``points/<id>.csv`` and
    ``points/<id>.json`` per sweep point and ``summary.json``.
    """
    if isinstance(spec, dict):
        spec = spec_from_dict(spec)
    directory = Path(output_dir if output_dir is not None else spec.output_dir) / spec.name
    writer = _Writer(directory)
    points, checks = _PIPELINES[spec.kind](spec, writer)
    report = ExperimentReport(spec, directory, points, checks)
    (directory / "summary.json").write_text(dumps(report.summary()))
    return report
