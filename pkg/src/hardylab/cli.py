"""Command-line experiment driver.

Usage::

    hardylab <command> (--config PATH | --scenario NAME) [--out DIR] [--seed N]

Every run writes ``report.json`` to the output directory plus the CSV/JSON
artifacts of the command.  Exit codes: 0 success, 2 unreadable or malformed
config, 3 violated precondition, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, ExperimentConfig, builtin_scenarios
from .eigensolver import generalized_eigen_oracle, minimize_rayleigh, truncated_eigen_study
from .errors import (
    ArgumentError,
    BracketError,
    DivergenceError,
    DomainError,
    HardyLabError,
    InitializationError,
    PicardError,
)
from .mesh import load_field, save_field
from .parabolic import SOLVER_FAILURE, bump, evolve, sweep_lambda, truncation_family_study
from .weights import check_admissibility, truncate_weight

log = logging.getLogger("hardylab")

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_SOLVER = 0, 2, 3, 4

_EXIT_CODES = {
    ConfigError: EXIT_PARSE,
    ArgumentError: EXIT_PRECONDITION,
    DomainError: EXIT_PRECONDITION,
    BracketError: EXIT_PRECONDITION,
    InitializationError: EXIT_PRECONDITION,
    DivergenceError: EXIT_SOLVER,
    PicardError: EXIT_SOLVER,
}

DEFAULTS_HELP = """\
config file (TOML) sections and defaults:
  scenario = "radial-power" | "distance-pair" | "unit-interval-p2"   (optional base)
  [weights.omega1], [weights.omega2]
      kind = constant (value) | power_radial (exponent)
           | distance_boundary (exponent, boundary=[0, 1])
           | tabulated (table = "file.csv" with node,value columns)
           | truncated (level, base) | scaled (factor, base)
  [mesh]     a=0  b=1  n=256  grading=1  metric="interval"|"radial"  N=1
  [physics]  p=3  lam | lam_fraction (of the eigen estimate)  m  m_list
             q=p+1  s=p+3  lam_lo=0.5*lam1  lam_hi=2*lam1  bisection_steps=12
             hardy_constant (default: computed by the eigensolver)
  [time]     dt=1e-3  T=1  dt_min=1e-30
  [solver]   tol=1e-9  max_iters=20000  seed=0  eps=1e-8/diameter
             picard_tol=1e-10  picard_max=200  blowup_factor=1e6  relax=2/p
  [initial]  shape="bump"|"zero"|"file"  amplitude=1  path
  [io]       out="out"
"""


def _dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def _write_trace(path, trace):
    np.savetxt(path, np.column_stack([trace.times, trace.l2sq, trace.dirichlet, trace.mass]),
               delimiter=",", header="t,l2sq,dirichlet,mass", comments="", fmt="%.17g")


def _initial_field(cfg, mesh):
    init = cfg.initial
    if init.shape == "zero":
        return np.zeros(mesh.n + 1)
    if init.shape == "bump":
        return bump(mesh, float(init.amplitude))
    if init.path is None:
        raise ArgumentError("initial.shape = 'file' needs initial.path")
    path = Path(init.path)
    if cfg.base_dir is not None and not path.is_absolute():
        path = cfg.base_dir / path
    nodes, values = load_field(path)
    if nodes.shape != mesh.nodes.shape or not np.allclose(nodes, mesh.nodes):
        raise ArgumentError(f"initial field in {path} is not defined on the configured mesh")
    if not mesh.is_field(values):
        raise ArgumentError("initial field must vanish at the Dirichlet nodes")
    return values


def _eigen(cfg, mesh, weights, m=None):
    s = cfg.solver
    omega1 = weights.omega1 if m is None else truncate_weight(weights.omega1, m)
    return minimize_rayleigh(omega1, weights.omega2, float(cfg.physics.p), mesh,
                             max_iters=int(s.max_iters), tol=float(s.tol), seed=int(s.seed), m=m)


def _hardy_constant(cfg, mesh, weights):
    if cfg.physics.hardy_constant is not None:
        return float(cfg.physics.hardy_constant), None
    rep = _eigen(cfg, mesh, weights)
    return rep.lambda_est, rep


def _lam(cfg, lam1):
    ph = cfg.physics
    if ph.lam is not None:
        return float(ph.lam)
    if ph.lam_fraction is not None:
        return float(ph.lam_fraction) * lam1
    raise ArgumentError("evolve needs physics.lam or physics.lam_fraction")


def cmd_check_weights(cfg, mesh, weights, out):
    p = float(cfg.physics.p)
    q = float(cfg.physics.q if cfg.physics.q is not None else p + 1)
    s = float(cfg.physics.s if cfg.physics.s is not None else p + 3)
    report = check_admissibility(weights.omega1, weights.omega2, p, q, s, mesh)
    _dump(out / "admissibility.json", report.to_dict())
    return {
        "passed": report.passed,
        "conditions": {k: e.status for k, e in report.entries.items()},
    }, EXIT_OK


def cmd_eigen(cfg, mesh, weights, out):
    m = cfg.physics.m
    rep = _eigen(cfg, mesh, weights, None if m is None else float(m))
    save_field(out / "minimizer.csv", rep.minimizer, mesh)
    head = {"lambda": rep.lambda_est, "converged": rep.converged, "iterations": rep.iterations,
            "note": rep.note, "m": m}
    if cfg.physics.p == 2:
        omega1 = weights.omega1 if m is None else truncate_weight(weights.omega1, m)
        head["dense_oracle"] = generalized_eigen_oracle(omega1, weights.omega2, mesh)
    return head, EXIT_OK


def cmd_eigen_study(cfg, mesh, weights, out):
    s = cfg.solver
    if not cfg.physics.m_list:
        raise ArgumentError("eigen-study needs physics.m_list")
    study = truncated_eigen_study(weights.omega1, weights.omega2, float(cfg.physics.p), mesh,
                                  cfg.physics.m_list, max_iters=int(s.max_iters),
                                  tol=float(s.tol), seed=int(s.seed))
    lines = ["m,lambda,iterations,converged"]
    for row in study.rows:
        lines.append(f"{row.m!r},{row.lam!r},{row.report.iterations},{str(row.report.converged).lower()}")
    full = study.untruncated
    lines.append(f"inf,{full.lambda_est!r},{full.iterations},{str(full.converged).lower()}")
    (out / "eigen.csv").write_text("\n".join(lines) + "\n")
    save_field(out / "minimizer.csv", full.minimizer, mesh)
    lams = [row.lam for row in study.rows]
    tol = float(s.tol)
    return {
        "rows": [{"m": r.m, "lambda": r.lam, "converged": r.report.converged} for r in study.rows],
        "lambda_untruncated": full.lambda_est,
        "untruncated_converged": full.converged,
        "nonincreasing": bool(all(b <= a + 10 * tol for a, b in zip(lams, lams[1:]))),
        "above_untruncated": bool(all(v >= full.lambda_est - 10 * tol for v in lams)),
    }, EXIT_OK


def cmd_evolve(cfg, mesh, weights, out):
    lam1, _ = _hardy_constant(cfg, mesh, weights)
    lam = _lam(cfg, lam1)
    m = cfg.physics.m
    trace = evolve(_initial_field(cfg, mesh), cfg.evolution_config(lam, None if m is None else float(m)),
                   weights, mesh, hardy_constant=lam1)
    _write_trace(out / "trace.csv", trace)
    save_field(out / "final.csv", trace.final, mesh)
    summary = trace.summary()
    _dump(out / "status.json", summary)
    code = EXIT_SOLVER if trace.status.kind == SOLVER_FAILURE else EXIT_OK
    return summary, code


def cmd_sweep(cfg, mesh, weights, out):
    lam1, _ = _hardy_constant(cfg, mesh, weights)
    ph = cfg.physics
    lo = float(ph.lam_lo) if ph.lam_lo is not None else 0.5 * lam1
    hi = float(ph.lam_hi) if ph.lam_hi is not None else 2.0 * lam1
    res = sweep_lambda(_initial_field(cfg, mesh), cfg.evolution_config(0.0), weights, mesh,
                       lo, hi, int(ph.bisection_steps), hardy_constant=lam1)
    lines = ["lambda,status,t_end,l2sq_initial,l2sq_final"]
    for lam, tr in sorted(res.traces, key=lambda item: item[0]):
        lines.append(",".join([repr(float(lam)), tr.status.kind]
                              + [repr(float(v)) for v in (tr.times[-1], tr.l2sq[0], tr.l2sq[-1])]))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    return {
        "lambda_crit": res.lambda_crit,
        "bracket": list(res.bracket),
        "lambda1": lam1,
        "relative_gap": abs(res.lambda_crit - lam1) / lam1,
    }, EXIT_OK


def cmd_truncation_study(cfg, mesh, weights, out):
    lam1, _ = _hardy_constant(cfg, mesh, weights)
    lam = _lam(cfg, lam1)
    if not cfg.physics.m_list:
        raise ArgumentError("truncation-study needs physics.m_list")
    study = truncation_family_study(_initial_field(cfg, mesh), lam, cfg.physics.m_list,
                                    cfg.evolution_config(lam), weights, mesh, hardy_constant=lam1)
    for m, tr in study.traces.items():
        _write_trace(out / f"trace_m{m:g}.csv", tr)
    lines = ["m,m_next,t,min_difference"] + [
        ",".join(repr(float(v)) for v in row) for row in study.comparison]
    (out / "comparison.csv").write_text("\n".join(lines) + "\n")
    return {
        "lam": lam,
        "lambda1": lam1,
        "members": {f"{m:g}": tr.summary() for m, tr in study.traces.items()},
        "monotonicity_violations": len(study.violations()),
        "comparisons": len(study.comparison),
    }, EXIT_OK


HANDLERS = {
    "check-weights": cmd_check_weights,
    "eigen": cmd_eigen,
    "eigen-study": cmd_eigen_study,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "truncation-study": cmd_truncation_study,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hardylab",
        description="Weighted parabolic p-Laplacian experiments.",
        epilog=DEFAULTS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=COMMANDS)
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="TOML experiment file")
    src.add_argument("--scenario", choices=sorted(builtin_scenarios()), help="built-in scenario")
    parser.add_argument("--out", type=Path, help="output directory (overrides io.out)")
    parser.add_argument("--seed", type=int, help="random seed (overrides solver.seed)")
    parser.add_argument("--print-config", action="store_true",
                        help="print the resolved configuration as TOML and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def load_config(args):
    if args.config is not None:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = ExperimentConfig.from_dict({"scenario": args.scenario})
    cfg.command = args.command
    if args.seed is not None:
        cfg.solver.seed = args.seed
    if args.out is not None:
        cfg.io.out = str(args.out)
    return cfg


def run(args):
    """Execute one parsed command line; returns the exit code."""
    out = None
    try:
        cfg = load_config(args)
        if args.print_config:
            sys.stdout.write(cfg.dumps())
            return EXIT_OK
        out = Path(cfg.io.out)
        out.mkdir(parents=True, exist_ok=True)
        mesh = cfg.build_mesh()
        weights = cfg.build_weights()
        headline, code = HANDLERS[cfg.command](cfg, mesh, weights, out)
    except HardyLabError as exc:
        code = next((c for cls, c in _EXIT_CODES.items() if isinstance(exc, cls)), EXIT_SOLVER)
        error = {"status": "error", "category": exc.category, "message": str(exc),
                 "command": args.command}
        sys.stderr.write(json.dumps(error) + "\n")
        if out is not None:
            _dump(out / "report.json", error)
        return code
    report = {
        "command": cfg.command,
        "scenario": cfg.scenario,
        "config": cfg.to_dict(),
        "status": "ok" if code == EXIT_OK else "solver-failure",
        "headline": headline,
    }
    _dump(out / "report.json", report)
    sys.stdout.write(json.dumps(headline, default=_jsonable, sort_keys=True) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
