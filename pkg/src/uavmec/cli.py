"""Command-line harness: single solves, comparison schemes, and sweeps.

    uavmec solve    --config scenario.json --out-dir results/
    uavmec baseline local_computing --out-dir results/
    uavmec sweep    --parameter task_size_uniform --values 3e8 4e8 5e8 \
                    --schemes proposed offloading_only --out-dir sweep/
    uavmec validate --config scenario.json

Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .baselines import BaselineKind, run_baseline
from .config import default_config, load_config
from .model import ConfigError, ScenarioConfig, SolverError, UeSpec
from .solver import solve

SCHEMES = ("proposed",) + tuple(k.value for k in BaselineKind)
SWEEP_PARAMETERS = ("task_size_uniform", "completion_time", "ap_position")


@dataclass(frozen=True)
class SweepSpec:
    """One scan: a parameter name, its values, and the schemes to run."""

    parameter: str
    values: tuple
    schemes: tuple = ("proposed",)

    def validate(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {self.parameter!r}; "
                              f"choose from {SWEEP_PARAMETERS}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown schemes {bad}; choose from {SCHEMES}")
        return self


def apply_sweep_value(cfg: ScenarioConfig, parameter, value) -> ScenarioConfig:
    if parameter == "task_size_uniform":
        bits = float(value)
        return replace(cfg, ues=tuple(replace(u, input_bits=bits)
                                      for u in cfg.ues)).validate()
    if parameter == "completion_time":
        return replace(cfg, horizon_s=float(value)).validate()
    if parameter == "ap_position":
        if isinstance(value, str):
            x, y = (float(p) for p in value.split(","))
        else:
            x, y = (float(p) for p in value)
        return replace(cfg, ap_pos=(x, y)).validate()
    raise ConfigError(f"unknown sweep parameter {parameter!r}")


def _run_scheme(cfg: ScenarioConfig, scheme, max_outer):
    if scheme == "proposed":
        return solve(cfg, max_outer=max_outer)
    return run_baseline(scheme, cfg, max_outer=max_outer).solution


def _sweep_point(args):
    cfg_dictless, parameter, value, scheme, max_outer = args
    cfg = apply_sweep_value(cfg_dictless, parameter, value)
    sol = _run_scheme(cfg, scheme, max_outer)
    return {
        "parameter": parameter,
        "value": value,
        "scheme": scheme,
        "tec_joules": sol.report.tec_trace[-1],
        "outer_iterations": sol.report.outer_iterations,
        "converged": sol.report.converged,
    }


def run_sweep(cfg: ScenarioConfig, spec: SweepSpec, max_outer=50, jobs=1):
    """All (value, scheme) points, optionally across processes; results are
    merged in a deterministic order regardless of completion order."""
    spec.validate()
    points = [(cfg, spec.parameter, value, scheme, max_outer)
              for value in spec.values for scheme in spec.schemes]
    if jobs <= 1:
        return [_sweep_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, points))


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else default_config()
    overrides = {}
    if args.tol is not None:
        overrides["tol_outer"] = args.tol
    if args.tol_inner is not None:
        overrides["tol_inner"] = args.tol_inner
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.validate()


def _fail(code, payload, quiet):
    print(json.dumps(payload, indent=None if quiet else 2), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="uavmec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, outdir=True):
        p.add_argument("--config", help="JSON scenario override file")
        p.add_argument("--tol", type=float, help="outer stop tolerance")
        p.add_argument("--tol-inner", type=float, help="per-block tolerance")
        p.add_argument("--max-outer", type=int, default=50)
        p.add_argument("--quiet", action="store_true")
        if outdir:
            p.add_argument("--out-dir", required=True)
            p.add_argument("--no-figures", action="store_true",
                           help="skip figure rendering")

    p_solve = sub.add_parser("solve", help="run the full optimization")
    common(p_solve)

    p_base = sub.add_parser("baseline", help="run one comparison scheme")
    p_base.add_argument("kind", choices=[k.value for k in BaselineKind])
    common(p_base)

    p_sweep = sub.add_parser("sweep", help="scan a parameter across schemes")
    p_sweep.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    p_sweep.add_argument("--values", nargs="+", required=True)
    p_sweep.add_argument("--schemes", nargs="+", default=["proposed"],
                         choices=SCHEMES)
    p_sweep.add_argument("--jobs", type=int, default=1)
    common(p_sweep)

    p_val = sub.add_parser("validate", help="check a scenario file")
    common(p_val, outdir=False)

    args = parser.parse_args(argv)
    from . import reporting

    try:
        cfg = _load(args)
    except ConfigError as exc:
        return _fail(2, {"error": "config", "message": str(exc)}, args.quiet)

    if args.command == "validate":
        if not args.quiet:
            print(json.dumps({"status": "ok", "num_ues": cfg.num_ues,
                              "n_slots": cfg.n_slots}, indent=2))
        return 0

    try:
        if args.command == "solve":
            sol = solve(cfg, max_outer=args.max_outer)
            summary = reporting.write_solution_files(
                args.out_dir, cfg, sol, scheme="proposed",
                figures=not args.no_figures)
        elif args.command == "baseline":
            res = run_baseline(args.kind, cfg, max_outer=args.max_outer)
            summary = reporting.write_solution_files(
                args.out_dir, cfg, res.solution, scheme=args.kind,
                metadata=res.metadata, figures=not args.no_figures)
        else:
            if args.parameter == "ap_position":
                values = tuple(args.values)
            else:
                values = tuple(float(v) for v in args.values)
            spec = SweepSpec(args.parameter, values, tuple(args.schemes))
            rows = run_sweep(cfg, spec, max_outer=args.max_outer, jobs=args.jobs)
            reporting.write_sweep_files(args.out_dir, rows,
                                        figures=not args.no_figures)
            summary = {"points": len(rows)}
    except ConfigError as exc:
        return _fail(2, {"error": "config", "message": str(exc)}, args.quiet)
    except SolverError as exc:
        return _fail(3, {"error": "solver", "message": str(exc),
                         "residuals": getattr(exc, "residuals", {})}, args.quiet)

    if not args.quiet:
        print(json.dumps({k: v for k, v in summary.items()
                          if k in ("scheme", "tec_joules", "outer_iterations",
                                   "converged", "points")}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
