"""
Command line entry point.

    degenlab solve --gamma 0.5 --resolution 64
    degenlab exponent --gamma 0.25,0.5,0.75
    degenlab exponent --gamma 0.5 --beta 0.25,0.75 --source 1,16
    degenlab run experiment.json

Exit status: 0 when every check passes, 1 on a tolerance failure, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .exact import ExactSolution
from .fields import fmt, write_field_csv
from .harness import ConfigError, Diagnostic, dumps, run_experiment, spec_from_dict, validate_config
from .problem import ProblemConfig
from .solver import solve_problem, stable_dt
from .geometry import build_grid

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
MAX_EXPLICIT_STEPS = 200_000


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p, gamma_default="0.5"):
    p.add_argument("--gamma", type=_floats, default=_floats(gamma_default), help="comma-separated gamma values")
    p.add_argument("--resolution", type=_ints, default=None, help="comma-separated normal resolutions N")
    p.add_argument("--scheme", choices=("implicit", "explicit"), default=None)
    p.add_argument("--eta", type=float, default=None, help="shrink factor of the flatness trace")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="degenlab", description=__doc__.split("\n")[1])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one manufactured solve; writes the final level as CSV plus a JSON summary")
    _common(p)
    p.add_argument("--exact", choices=("phi", "psi"), default="psi")

    p = sub.add_parser("exponent", help="boundary exponent of a steady problem (mixed data when --beta is given)")
    _common(p, "0.25,0.5,0.75")
    p.add_argument("--beta", type=_floats, default=None, help="comma-separated beta values of the face profile")
    p.add_argument("--source", type=_floats, default=None, help="source amplitude(s); one, or one per beta")

    p = sub.add_parser("flatness", help="flatness decay ratios of the zero-data steady problem")
    _common(p, "0.25,0.5,0.75")

    p = sub.add_parser("slice-check", help="slice consistency of homogeneous runs")
    _common(p)

    p = sub.add_parser("compare", help="discrete comparison principle suite")
    _common(p)
    p.add_argument("--trials", type=int, default=100)

    p = sub.add_parser("convergence", help="manufactured convergence study")
    _common(p, "0.25,0.5,0.75")
    p.add_argument("--exact", choices=("phi", "psi"), default="phi")

    p = sub.add_parser("weighted", help="weighted time-derivative Hölder monitors of homogeneous runs")
    _common(p)

    p = sub.add_parser("run", help="run an experiment described by a JSON config")
    p.add_argument("config", type=Path)
    p.add_argument("--out", default=None, help="override the config's output_dir")
    return parser


def _spec_dict(args, name, kind, **extra):
    d = {"name": name, "kind": kind, "gammas": args.gamma, "seed": args.seed, "output_dir": args.out}
    if args.resolution:
        d["resolutions"] = args.resolution
    problem, options = {}, {}
    if getattr(args, "scheme", None):
        problem["scheme"] = args.scheme
    if getattr(args, "eta", None) is not None:
        options["eta"] = args.eta
    problem.update(extra.pop("problem", {}))
    options.update(extra.pop("options", {}))
    if problem:
        d["problem"] = problem
    if options:
        d["options"] = options
    d.update(extra)
    return d


def _cmd_solve(args):
    if len(args.gamma) != 1:
        raise ConfigError([_diag("gamma", "solve takes a single gamma")])
    gamma = args.gamma[0]
    n = (args.resolution or [64])[0]
    spec_from_dict({"name": "solve", "kind": "manufactured_convergence", "gammas": [gamma], "resolutions": [n]})
    scheme = args.scheme or "implicit"
    ex = ExactSolution(args.exact, gamma)
    config = ProblemConfig.from_exact(ex, scheme=scheme)
    grid = build_grid(2, max(2, n // 4), n, max(1, n // 4), 2.0, gamma)
    if scheme == "explicit":
        n_time = int(np.ceil(1.0 / stable_dt(grid, gamma, config.cfl_safety)))
        if n_time > MAX_EXPLICIT_STEPS:
            raise ConfigError([_diag("scheme", f"explicit scheme needs {n_time} steps on this grid; use implicit")])
        grid = build_grid(2, grid.n_tan, n, n_time, 2.0, gamma)
    u = solve_problem(config, grid)
    last = grid.shape[0] - 1
    err = float(np.max(np.abs(u.values[last] - ex(grid.mesh(), 0.0))))
    out = Path(args.out) / "solve"
    out.mkdir(parents=True, exist_ok=True)
    write_field_csv(out / "field.csv", u, levels=[last])
    summary = {
        "exact": args.exact, "gamma": gamma, "N": n, "scheme": scheme, "grid": grid.to_dict(),
        "min": float(np.min(u.values[last])), "max": float(np.max(u.values[last])), "linf_error": err,
    }
    (out / "summary.json").write_text(dumps(summary))
    print(f"linf_error {fmt(err)}")
    print(f"min {fmt(summary['min'])} max {fmt(summary['max'])}")
    print(f"wrote {out}")
    return EXIT_PASS


def _diag(path, message):
    return Diagnostic(0, path, message)


def _report(report):
    for line in report.check_lines():
        print(line)
    verdict = "PASS" if report.verdict else "FAIL"
    print(f"{verdict} {report.spec.name} ({report.directory})")
    return EXIT_PASS if report.verdict else EXIT_FAIL


def _run_dict(d):
    return _report(run_experiment(spec_from_dict(d)))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "run":
            try:
                raw = args.config.read_text()
            except OSError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            spec = validate_config(raw)
            return _report(run_experiment(spec, args.out))
        if args.command == "exponent":
            if args.beta:
                problem = {"sources": args.source} if args.source else {}
                d = _spec_dict(args, "exponent_mixed", "exponent_mixed_data", betas=args.beta, problem=problem)
            else:
                problem = {"source": args.source[0]} if args.source else {}
                d = _spec_dict(args, "exponent", "exponent_inhomogeneous", problem=problem)
            return _run_dict(d)
        if args.command == "flatness":
            return _run_dict(_spec_dict(args, "flatness", "flatness_decay"))
        if args.command == "slice-check":
            return _run_dict(_spec_dict(args, "slice_check", "slice_check"))
        if args.command == "compare":
            return _run_dict(_spec_dict(args, "compare", "comparison_suite", options={"trials": args.trials}))
        if args.command == "convergence":
            return _run_dict(_spec_dict(args, "convergence", "manufactured_convergence", problem={"exact": args.exact}))
        if args.command == "weighted":
            return _run_dict(_spec_dict(args, "weighted", "homogeneous_weighted"))
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
