"""Command-line front end.

Subcommands:
  solve <config>                        assemble and run the inclusion solver
  calc <config> --op NAME --input VEC   evaluate one blockwise operation
  report <path>                         print the summary of a residual trace

Exit codes: 0 success/converged, 1 parse or capability error, 2 iteration
budget exhausted, 3 divergence, 4 report I/O failure.  No environment
variables are read.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .errors import CapabilityError, ProxfieldError
from .field import BlockVector
from .functions import (
    di_conjugate,
    di_envelope,
    di_prox,
    project,
    recession_estimate,
)
from .linear import prox_mixture
from .solver import STATUS_CONVERGED, STATUS_DIVERGED, SolveReport, fbf_solve

__all__ = ["main", "emit_report", "run_solve", "run_calc"]

_EXIT_BY_STATUS = {STATUS_CONVERGED: 0, STATUS_DIVERGED: 3}


def _fmt(x: float) -> str:
    if x == math.inf:
        return "inf"
    return format(float(x), ".17g")


def _fmt_blocks(x: BlockVector) -> str:
    return " ".join("(" + ", ".join(_fmt(v) for v in b) + ")" for b in x)


def emit_report(report: SolveReport, path) -> None:
    """Write the residual trace as a comma-delimited table with a # header."""
    lines = [
        f"# status={report.status}",
        f"# iterations={report.iterations}",
        f"# kkt_residual={_fmt(report.kkt_residual)}",
        f"# primal_residual={_fmt(report.primal_residual)}",
        f"# dual_residual={_fmt(report.dual_residual)}",
        "iteration,kkt_residual,primal_residual,dual_residual",
    ]
    for it, kkt, pri, dua in report.trace:
        lines.append(f"{it},{_fmt(kkt)},{_fmt(pri)},{_fmt(dua)}")
    Path(path).write_text("\n".join(lines) + "\n")


def _resolve_config(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    if arg in cfgmod.BUNDLED_CONFIGS:
        return cfgmod.bundled_config_path(arg)
    return p  # let the parser report the read failure


def run_solve(args) -> int:
    cfg = cfgmod.parse_config(_resolve_config(args.config))
    problem = cfgmod.build_problem(cfg)
    solver_cfg = cfgmod.build_solver_config(cfg)
    point, report = fbf_solve(problem, solver_cfg)

    stem = Path(args.config).stem
    out_dir = Path(args.out_dir)
    trace_path = out_dir / f"{stem}_trace.csv"
    summary_path = out_dir / f"{stem}_report.json"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        emit_report(report, trace_path)
        summary = {
            "status": report.status,
            "iterations": report.iterations,
            "kkt_residual": report.kkt_residual,
            "primal_residual": report.primal_residual,
            "dual_residual": report.dual_residual,
            "z": point.z.tolist(),
            "dual": [b.tolist() for b in point.dual],
        }
        summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return 4

    print(f"status: {report.status} after {report.iterations} iterations")
    print(f"kkt_residual: {_fmt(report.kkt_residual)}")
    print(f"z: ({', '.join(_fmt(v) for v in point.z)})")
    print(f"trace: {trace_path}")
    return _EXIT_BY_STATUS.get(report.status, 2)


def _parse_vector(text: str) -> np.ndarray:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise cfgmod.ConfigError("--input", f"not a numeric vector: {exc}") from exc


def run_calc(args) -> int:
    cfg = cfgmod.parse_config(_resolve_config(args.config))
    vec = _parse_vector(args.input)
    gamma = args.gamma

    if args.op == "prox":
        f = cfgmod.build_function(cfg)
        x = BlockVector.from_flat(f.field, vec)
        print(_fmt_blocks(di_prox(f, gamma, x)))
    elif args.op == "envelope":
        f = cfgmod.build_function(cfg)
        x = BlockVector.from_flat(f.field, vec)
        print(_fmt(di_envelope(f, gamma, x)))
    elif args.op == "conjugate":
        f = cfgmod.build_function(cfg)
        x = BlockVector.from_flat(f.field, vec)
        print(_fmt(di_conjugate(f, x, estimate=args.estimate)))
    elif args.op == "project":
        sets = cfgmod.build_sets(cfg)
        x = BlockVector.from_flat(sets.field, vec)
        print(_fmt_blocks(project(sets, x)))
    elif args.op == "mixture":
        f = cfgmod.build_function(cfg)
        family = cfgmod.build_family(cfg)
        out = prox_mixture(f, family, vec)
        print("(" + ", ".join(_fmt(v) for v in out) + ")")
    elif args.op == "recession":
        f = cfgmod.build_function(cfg)
        x = BlockVector.from_flat(f.field, vec)
        est = recession_estimate(f, x)
        print(_fmt(est.value))
    else:  # unreachable behind argparse choices
        raise cfgmod.ConfigError("--op", f"unknown operation '{args.op}'")
    return 0


def run_report(args) -> int:
    try:
        text = Path(args.path).read_text()
    except OSError as exc:
        print(f"error: cannot read report: {exc}", file=sys.stderr)
        return 4
    lines = text.splitlines()
    for line in lines:
        if line.startswith("#"):
            print(line)
    rows = [l for l in lines if l and not l.startswith("#") and not l.startswith("iteration")]
    if rows:
        print(f"rows: {len(rows)}")
        print(f"final: {rows[-1]}")
    else:
        print("rows: 0")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="proxfield",
        description="Blockwise prox/resolvent calculus and a primal-dual inclusion solver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the inclusion solver on a config")
    p_solve.add_argument("config", help="config path or bundled name")
    p_solve.add_argument("--out-dir", default=".", help="directory for report files")
    p_solve.set_defaults(func=run_solve)

    p_calc = sub.add_parser("calc", help="evaluate a blockwise operation")
    p_calc.add_argument("config", help="config path or bundled name")
    p_calc.add_argument(
        "--op",
        required=True,
        choices=["prox", "envelope", "conjugate", "project", "mixture", "recession"],
    )
    p_calc.add_argument("--input", required=True, help="input vector, comma/space separated")
    p_calc.add_argument("--gamma", type=float, default=1.0)
    p_calc.add_argument("--estimate", action="store_true", help="allow estimated conjugates")
    p_calc.set_defaults(func=run_calc)

    p_report = sub.add_parser("report", help="summarize a residual trace file")
    p_report.add_argument("path")
    p_report.set_defaults(func=run_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (cfgmod.ConfigError, CapabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ProxfieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
