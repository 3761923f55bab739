"""Command-line front end.

Subcommands
-----------
solve
    Run one solver configuration on a preset or file-based problem and
    write the residual history and per-time summary.
compare
    Run several methods on the identical problem and emit one table row
    per method (with wall-clock runtimes, which are reported but never
    part of any contract).
bounds
    For m = 1..m_max, emit the measured error against the dense integral
    reference together with the a-posteriori bounds (desk-scale only).

All numeric CSV fields are written with 17 significant digits so they
round-trip exactly; with a fixed seed the output is byte-identical
across runs.
"""

import argparse
import json
import sys
import time

import numpy as np

from .bounds import (
    bound_alpha,
    bound_beta,
    bound_global,
    lognorm2_sparse,
)
from .driver import (
    BASIS_FLAVORS,
    METHODS,
    NORM_CHOICES,
    DSEProblem,
    SolverConfig,
    solve,
)
from .exceptions import SizeGuardError, SylKrylovError
from .integrators import solve_exp_quadrature
from .krylov import BlockArnoldiBuilder, ExtendedBlockArnoldiBuilder
from .problems import (
    INTEGRAL_GUARD,
    PRESETS,
    integral_reference,
    make_preset,
    random_low_rank,
)
from .projection import project
from .quadrature import QuadratureSpec
from .sparse import load_operator

CSV_HEADER = "# sylkrylov-csv v1"

_DEFAULTS = dict(
    preset=None,
    a_file=None,
    b_file=None,
    n0=10,
    p0=None,
    s=2,
    seed=42,
    sign="+",
    interval=(0.0, 2.0),
    method="exp",
    methods=None,
    basis="eba",
    tol=1e-10,
    m_max=30,
    h=0.01,
    dtol=1e-12,
    gamma=None,
    norm="fro",
    quad_nodes=12,
    quad_substeps=8,
    grid_points=21,
    t=None,
    out=None,
    format="csv",
)


def fmt(x):
    """17-significant-digit decimal form (exact float round trip)."""
    return "%.17g" % float(x)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sylkrylov",
        description="Krylov projection solvers for differential Sylvester equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "run one solver configuration"),
        ("compare", "run several methods on the same problem"),
        ("bounds", "error-vs-bound table over the step count"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value file mirroring the flags")
        p.add_argument("--preset", help=f"one of: {', '.join(sorted(PRESETS))}")
        p.add_argument("--a-file", dest="a_file", help="Matrix Market file for A")
        p.add_argument("--b-file", dest="b_file", help="Matrix Market file for B")
        p.add_argument("--n0", type=int, help="inner grid points per direction (A)")
        p.add_argument("--p0", type=int, help="inner grid points per direction (B)")
        p.add_argument("--s", type=int, help="rank of the constant term")
        p.add_argument("--seed", type=int, help="seed for the E, F factors")
        p.add_argument("--sign", choices=("+", "-"), help="sign of the E F^T term")
        p.add_argument("--interval", type=float, nargs=2, metavar=("T0", "TF"))
        if name == "compare":
            p.add_argument("--methods", help="comma-separated method list")
        else:
            p.add_argument("--method", help=f"one of: {', '.join(METHODS)}")
        p.add_argument("--basis", help=f"one of: {', '.join(BASIS_FLAVORS)}")
        p.add_argument("--tol", type=float, help="residual stopping tolerance")
        p.add_argument("--m-max", dest="m_max", type=int, help="max outer steps")
        p.add_argument("--h", type=float, help="time step for bdf/ros2")
        p.add_argument("--dtol", type=float, help="SVD truncation tolerance")
        p.add_argument("--gamma", type=float, help="ROS(2) parameter")
        p.add_argument("--norm", help=f"residual norm: {', '.join(NORM_CHOICES)}")
        p.add_argument("--quad-nodes", dest="quad_nodes", type=int)
        p.add_argument("--quad-substeps", dest="quad_substeps", type=int)
        p.add_argument("--grid-points", dest="grid_points", type=int,
                       help="output grid size for the exp method")
        if name == "bounds":
            p.add_argument("--t", type=float, help="evaluation time (default TF)")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        if name == "solve":
            p.add_argument("--dump-factors", dest="dump_factors",
                           help="write the per-time low-rank factors to an .npz file")
    return parser


def _read_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {line!r}")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


_CONFIG_PARSERS = dict(
    n0=int, p0=int, s=int, seed=int, m_max=int, quad_nodes=int,
    quad_substeps=int, grid_points=int,
    tol=float, h=float, dtol=float, gamma=float, t=float,
    interval=lambda v: tuple(float(x) for x in v.split()),
)


def _merge_options(args):
    """CLI flags override config-file values override defaults."""
    opts = dict(_DEFAULTS)
    if getattr(args, "config", None):
        for key, raw in _read_config_file(args.config).items():
            if key not in opts:
                raise ValueError(f"unknown config key {key!r}")
            parse = _CONFIG_PARSERS.get(key, str)
            opts[key] = parse(raw)
    for key in opts:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = tuple(val) if key == "interval" else val
    return opts


def _build_problem(opts):
    t0, tf = opts["interval"]
    sign = 1.0 if opts["sign"] == "+" else -1.0
    if opts["a_file"]:
        A = load_operator(opts["a_file"])
        B = load_operator(opts["b_file"]) if opts["b_file"] else A
        E, F = random_low_rank(A.n, B.n, opts["s"], opts["seed"])
        return DSEProblem(A=A, B=B, E=E, F=F, t0=t0, Tf=tf, sign=sign,
                          name=opts["a_file"])
    preset = opts["preset"]
    if preset is None:
        raise ValueError("give --preset or --a-file")
    if preset == "example1":
        return make_preset("example1", n0=opts["n0"], p0=opts["p0"],
                           s=opts["s"], seed=opts["seed"], t0=t0, tf=tf)
    return make_preset(preset, s=opts["s"], seed=opts["seed"], t0=t0, tf=tf)


def _build_config(opts, method):
    return SolverConfig(
        method=method,
        basis=opts["basis"],
        tol=opts["tol"],
        m_max=opts["m_max"],
        dtol=opts["dtol"],
        h=opts["h"],
        grid_points=opts["grid_points"],
        quad=QuadratureSpec(opts["quad_nodes"], opts["quad_substeps"]),
        gamma=opts["gamma"],
        norm=opts["norm"],
    )


def _emit(lines_or_obj, opts):
    if opts["format"] == "csv":
        text = "\n".join(lines_or_obj) + "\n"
    else:
        text = json.dumps(lines_or_obj, indent=2, sort_keys=True) + "\n"
    if opts["out"]:
        with open(opts["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _validate_method(method):
    if method not in METHODS:
        raise ValueError(
            f"unknown method {method!r}; allowed methods: {', '.join(METHODS)}"
        )


def cmd_solve(args):
    opts = _merge_options(args)
    _validate_method(opts["method"])
    problem = _build_problem(opts)
    config = _build_config(opts, opts["method"])
    sol = solve(problem, config)
    if opts["format"] == "csv":
        lines = [CSV_HEADER, "# schema=solve", "record,index,time,name,value"]
        summary = [
            ("method", opts["method"]), ("basis", config.basis),
            ("problem", problem.name), ("n", problem.n), ("p", problem.p),
            ("s", problem.s), ("seed", opts["seed"]),
            ("tol", fmt(config.tol)), ("m_final", sol.m_final),
            ("converged", int(sol.converged)),
        ]
        for name, value in summary:
            lines.append(f"summary,,,{name},{value}")
        for m, value in enumerate(sol.residual_history, start=1):
            lines.append(f"history,{m},,residual_max,{fmt(value)}")
        for k, t in enumerate(sol.times):
            lines.append(f"time,{k},{fmt(t)},residual_fro,{fmt(sol.residuals.frobenius[k])}")
            lines.append(f"time,{k},{fmt(t)},residual_two,{fmt(sol.residuals.two_norm[k])}")
            lines.append(f"time,{k},{fmt(t)},rank,{sol.factor_rank(k)}")
        _emit(lines, opts)
    else:
        obj = {
            "schema": "solve",
            "method": opts["method"],
            "basis": config.basis,
            "problem": problem.name,
            "n": problem.n,
            "p": problem.p,
            "s": problem.s,
            "seed": opts["seed"],
            "tol": config.tol,
            "m_final": sol.m_final,
            "converged": sol.converged,
            "residual_history": [float(v) for v in sol.residual_history],
            "times": [float(t) for t in sol.times],
            "residual_fro": [float(v) for v in sol.residuals.frobenius],
            "residual_two": [float(v) for v in sol.residuals.two_norm],
            "ranks": [sol.factor_rank(k) for k in range(len(sol.times))],
        }
        _emit(obj, opts)
    if getattr(args, "dump_factors", None):
        arrays = {}
        for k, (ZA, ZB) in enumerate(sol.factors):
            arrays[f"ZA_{k}"] = ZA
            arrays[f"ZB_{k}"] = ZB
        np.savez(args.dump_factors, times=sol.times, **arrays)
    return 0 if sol.converged else 2


def cmd_compare(args):
    opts = _merge_options(args)
    raw = opts["methods"]
    methods = [m for m in (raw.split(",") if raw else []) if m]
    if not methods:
        raise ValueError(f"empty method list; allowed methods: {', '.join(METHODS)}")
    for method in methods:
        _validate_method(method)
    problem = _build_problem(opts)
    rows = []
    all_converged = True
    for method in methods:
        config = _build_config(opts, method)
        started = time.perf_counter()
        sol = solve(problem, config)
        runtime = time.perf_counter() - started
        all_converged &= sol.converged
        rows.append(
            dict(
                method=method,
                m_final=sol.m_final,
                converged=int(sol.converged),
                runtime_s=runtime,
                residual_final=float(sol.residuals.frobenius[-1]),
            )
        )
    if opts["format"] == "csv":
        lines = [CSV_HEADER, "# schema=compare",
                 "method,m_final,converged,runtime_s,residual_final"]
        for row in rows:
            lines.append(
                f"{row['method']},{row['m_final']},{row['converged']},"
                f"{fmt(row['runtime_s'])},{fmt(row['residual_final'])}"
            )
        _emit(lines, opts)
    else:
        _emit({"schema": "compare", "rows": rows}, opts)
    return 0 if all_converged else 2


def cmd_bounds(args):
    opts = _merge_options(args)
    problem = _build_problem(opts)
    if max(problem.n, problem.p) > INTEGRAL_GUARD:
        raise SizeGuardError(
            f"bounds need the dense reference oracle, which is limited to "
            f"dimensions <= {INTEGRAL_GUARD} (problem has n={problem.n}, p={problem.p})"
        )
    t_eval = opts["t"] if opts["t"] is not None else problem.Tf
    quad = QuadratureSpec(opts["quad_nodes"], opts["quad_substeps"])
    grid = np.linspace(problem.t0, t_eval, opts["grid_points"])
    reference = integral_reference(problem, grid, quad)[-1]
    mu2A = lognorm2_sparse(problem.A)
    mu2B = lognorm2_sparse(problem.B)
    builder_cls = (
        ExtendedBlockArnoldiBuilder if opts["basis"] == "eba" else BlockArnoldiBuilder
    )
    builderA = builder_cls(problem.A, problem.E)
    builderB = builder_cls(problem.B.T, problem.F)
    rows = []
    for m in range(1, opts["m_max"] + 1):
        grew = builderA.step() and builderB.step()
        decompA = builderA.decomposition()
        decompB = builderB.decomposition()
        proj = project(decompA, decompB, problem.E, problem.F,
                       (problem.t0, t_eval), problem.sign)
        traj = solve_exp_quadrature(proj, grid, quad)
        Xm = decompA.Vm @ traj.G[-1] @ decompB.Vm.T
        error = float(np.linalg.norm(reference - Xm, 2))
        rows.append(
            dict(
                m=m,
                error=error,
                bound_alpha=bound_alpha(proj, traj, mu2A, mu2B, t_eval),
                bound_beta=bound_beta(proj, traj, mu2A, mu2B, t_eval),
                bound_global=bound_global(proj, t_eval, mu2A, mu2B, quad),
            )
        )
        if not grew:
            break
    if opts["format"] == "csv":
        lines = [CSV_HEADER, "# schema=bounds",
                 "m,error,bound_alpha,bound_beta,bound_global"]
        for row in rows:
            lines.append(
                f"{row['m']},{fmt(row['error'])},{fmt(row['bound_alpha'])},"
                f"{fmt(row['bound_beta'])},{fmt(row['bound_global'])}"
            )
        _emit(lines, opts)
    else:
        _emit({"schema": "bounds", "rows": rows}, opts)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"solve": cmd_solve, "compare": cmd_compare, "bounds": cmd_bounds}[
        args.command
    ]
    try:
        return handler(args)
    except (SylKrylovError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
