"""Command-line front end.

Subcommands
-----------
``run <config>``
    Execute a solve described by a JSON config file (or a shipped config
    name), write the CSV trace, and print a one-line summary.  Exit 0 on
    convergence, 2 when the outer iteration cap is hit, 3 when the inner
    loop caps out, 1 on invalid input.
``check <trace> [--m M]``
    Run every trace checker, print one line per checker, exit 0 iff all
    pass (4 when a check fails, 1 when the file cannot be parsed).
``compare <config> --m M [M ...]``
    Re-run the same problem once per window size and emit a comparison CSV.
``list``
    Print the registered oracle names and shipped configs.

The ``PROXGRAD_LOG`` environment variable ({quiet, info, debug}, default
quiet) controls stderr verbosity.  Summaries and CSV output go to stdout;
all file formats are bit-exact and deterministic across invocations.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from . import diagnostics
from .core import CompositeProblem, as_vector, make_problem
from .diagnostics import TraceFormatError, read_trace_csv, write_trace_csv
from .prox_oracles import PROX_REGISTRY, build_prox
from .smooth_oracles import SMOOTH_REGISTRY, build_smooth
from .solver import (
    STATUS_CONVERGED_RESIDUAL,
    STATUS_CONVERGED_STEP,
    STATUS_INNER_CAP,
    STATUS_MAX_OUTER,
    SolverConfig,
    solve,
)

__all__ = ["main", "entry_point", "load_run_config", "shipped_config_names"]

log = logging.getLogger("proxgrad")

_EXIT_OK = 0
_EXIT_INVALID = 1
_EXIT_MAX_OUTER = 2
_EXIT_INNER_CAP = 3
_EXIT_CHECK_FAILED = 4

_STATUS_EXIT = {
    STATUS_CONVERGED_RESIDUAL: _EXIT_OK,
    STATUS_CONVERGED_STEP: _EXIT_OK,
    STATUS_MAX_OUTER: _EXIT_MAX_OUTER,
    STATUS_INNER_CAP: _EXIT_INNER_CAP,
}

COMPARE_HEADER = "m,status,outer_iters,total_inner,final_psi"


def _configure_logging() -> None:
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("PROXGRAD_LOG", "quiet"), logging.WARNING
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")


def shipped_config_names() -> list[str]:
    """Names of the example configs distributed with the package."""
    pkg = resources.files("proxgrad") / "configs"
    return sorted(p.name[: -len(".json")] for p in pkg.iterdir() if p.name.endswith(".json"))


def _resolve_config_path(arg: str) -> Path | None:
    """A config argument is a filesystem path or a shipped config name."""
    p = Path(arg)
    if p.is_file():
        return p
    name = arg[:-5] if arg.endswith(".json") else arg
    candidate = resources.files("proxgrad") / "configs" / f"{name}.json"
    if candidate.is_file():
        return Path(str(candidate))
    return None


def load_run_config(path: Path) -> dict:
    """Parse and validate a run config; returns a dict with instantiated
    problem, solver config, x0, and output path.

    Raises ValueError with a diagnostic message on any invalid entry.
    """
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from exc
    if "problem" not in raw:
        raise ValueError("config is missing the 'problem' section")
    prob = raw["problem"]
    for key in ("smooth", "nonsmooth", "dimension"):
        if key not in prob:
            raise ValueError(f"problem section is missing {key!r}")
    dimension = prob["dimension"]
    if not (isinstance(dimension, int) and dimension >= 1):
        raise ValueError(f"problem dimension must be a positive integer, got {dimension!r}")

    smooth = build_smooth(prob["smooth"]["name"], prob["smooth"].get("params", {}), dimension)
    nonsmooth = build_prox(prob["nonsmooth"]["name"], prob["nonsmooth"].get("params", {}), dimension)
    problem = make_problem(smooth, nonsmooth, dimension)

    solver_fields = dict(raw.get("solver", {}))
    try:
        config = SolverConfig(**solver_fields)
    except TypeError as exc:
        raise ValueError(f"unknown solver field: {exc}") from exc

    x0_raw = raw.get("x0", "zeros")
    if x0_raw == "zeros":
        x0 = np.zeros(dimension)
    elif x0_raw == "ones":
        x0 = np.ones(dimension)
    elif isinstance(x0_raw, list):
        x0 = as_vector(x0_raw, dimension)
    else:
        raise ValueError(f"x0 must be 'zeros', 'ones', or a coordinate list, got {x0_raw!r}")

    psi0 = float(smooth.eval(as_vector(x0, dimension))) + float(nonsmooth.eval(as_vector(x0, dimension)))
    if not math.isfinite(psi0):
        raise ValueError("x0 not in the domain of the nonsmooth term (psi(x0) is infinite)")

    output = raw.get("output", f"{path.stem}_trace.csv")
    return {"problem": problem, "config": config, "x0": x0, "output": Path(output)}


def _run_one(problem: CompositeProblem, config: SolverConfig, x0):
    report = solve(problem, config, x0)
    log.info(
        "run %s: status=%s iterations=%d early_exits=%s metadata=%s",
        problem.name, report.status, report.iterations,
        list(report.early_exit_ks), report.metadata,
    )
    return report


def _fmt_float(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.17g}"


def cmd_run(args) -> int:
    path = _resolve_config_path(args.config)
    if path is None:
        print(f"error: config {args.config!r} not found", file=sys.stderr)
        return _EXIT_INVALID
    try:
        cfg = load_run_config(path)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_INVALID
    report = _run_one(cfg["problem"], cfg["config"], cfg["x0"])
    out = Path(args.output) if args.output else cfg["output"]
    try:
        write_trace_csv(report.trace, out)
    except OSError as exc:
        print(f"error: cannot write trace to {out}: {exc}", file=sys.stderr)
        return _EXIT_INVALID
    log.debug("trace written to %s (%d rows)", out, len(report.trace.records))
    print(
        f"status={report.status} k={report.iterations} "
        f"psi={_fmt_float(report.psi_final)} residual={_fmt_float(report.final_residual)}"
    )
    return _STATUS_EXIT[report.status]


def cmd_check(args) -> int:
    try:
        trace = read_trace_csv(args.trace)
    except (OSError, TraceFormatError) as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return _EXIT_INVALID
    if trace.config_echo is None:
        print("error: trace has no config echo; re-emit it with cmd_run", file=sys.stderr)
        return _EXIT_INVALID
    m = args.m if args.m is not None else trace.config_echo.m
    # tail-check defaults scale with the run's residual tolerance but are
    # floored at the desk-scale bands: raw step norms shrink like
    # tau_abs / gamma, so a strict tau_abs alone would over-tighten them
    tau_abs = trace.config_echo.tau_abs
    steps_tol = args.steps_tol if args.steps_tol is not None else max(tau_abs, 1e-6)
    product_tol = args.product_tol if args.product_tol is not None else max(10.0 * tau_abs, 1e-5)

    ok = True
    violations = diagnostics.check_acceptance(trace, m=m)
    if violations:
        ok = False
        print(f"check_acceptance: FAIL ({len(violations)} violations)")
        for v in violations:
            print(f"  row {v.k}: {v.detail}")
    else:
        print("check_acceptance: pass")

    for name, result in (
        ("check_envelope", diagnostics.check_envelope(trace, m)),
        ("check_level_set", diagnostics.check_level_set(trace)),
    ):
        print(f"{name}: {'pass' if result else 'FAIL'}")
        ok = ok and result

    for name, checker, tol in (
        ("check_vanishing_steps", diagnostics.check_vanishing_steps, steps_tol),
        ("check_gamma_step_product", diagnostics.check_gamma_step_product, product_tol),
    ):
        if len(trace.records) < 10:
            print(f"{name}: skipped (trace has {len(trace.records)} rows < 10)")
            continue
        result = checker(trace, tol)
        print(f"{name}: {'pass' if result else 'FAIL'} (tol={tol:g})")
        ok = ok and result

    g = diagnostics.gamma_bound_report(trace)
    print(f"gamma_bound: max={g.max_gamma:.6g} trend={'true' if g.trend_flag else 'false'}")

    return _EXIT_OK if ok else _EXIT_CHECK_FAILED


def cmd_compare(args) -> int:
    path = _resolve_config_path(args.config)
    if path is None:
        print(f"error: config {args.config!r} not found", file=sys.stderr)
        return _EXIT_INVALID
    try:
        cfg = load_run_config(path)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_INVALID

    rows = []
    all_converged = True
    out_base = cfg["output"]
    for m in args.m:
        if m < 0:
            print(f"error: m must be nonnegative, got {m}", file=sys.stderr)
            return _EXIT_INVALID
        config = SolverConfig(**{**asdict(cfg["config"]), "m": m})
        report = _run_one(cfg["problem"], config, cfg["x0"])
        trace_path = out_base.with_name(f"{out_base.stem}_m{m}{out_base.suffix}")
        try:
            write_trace_csv(report.trace, trace_path)
        except OSError as exc:
            print(f"error: cannot write trace to {trace_path}: {exc}", file=sys.stderr)
            return _EXIT_INVALID
        total_inner = sum(r.inner_iters + 1 for r in report.trace.records)
        rows.append(
            f"{m},{report.status},{report.iterations},{total_inner},{_fmt_float(report.psi_final)}"
        )
        all_converged = all_converged and report.status in (
            STATUS_CONVERGED_RESIDUAL, STATUS_CONVERGED_STEP,
        )
    lines = [COMPARE_HEADER] + rows
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="ascii")
    print(text, end="")
    return _EXIT_OK if all_converged else _EXIT_MAX_OUTER


def cmd_list(args) -> int:
    print("smooth oracles:")
    for name in sorted(SMOOTH_REGISTRY):
        print(f"  {name}")
    print("prox oracles:")
    for name in sorted(PROX_REGISTRY):
        print(f"  {name}")
    print("shipped configs:")
    for name in shipped_config_names():
        print(f"  {name}")
    return _EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxgrad",
        description="Backtracking proximal gradient solver for composite problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a configured problem and write its trace")
    p_run.add_argument("config", help="path to a JSON run config, or a shipped config name")
    p_run.add_argument("--output", help="override the trace output path")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check", help="verify the invariants of a trace file")
    p_check.add_argument("trace", help="path to a CSV trace")
    p_check.add_argument("--m", type=int, default=None,
                         help="window size used by the run (default: from the trace)")
    p_check.add_argument("--steps-tol", type=float, default=None,
                         help="tolerance for the vanishing-steps check "
                              "(default: max(tau_abs, 1e-6))")
    p_check.add_argument("--product-tol", type=float, default=None,
                         help="tolerance for the gamma*step check "
                              "(default: max(10*tau_abs, 1e-5))")
    p_check.set_defaults(func=cmd_check)

    p_cmp = sub.add_parser("compare", help="run several window sizes on one problem")
    p_cmp.add_argument("config", help="path to a JSON run config, or a shipped config name")
    p_cmp.add_argument("--m", type=int, nargs="+", required=True,
                       help="window sizes to run, in output order")
    p_cmp.add_argument("--output", help="also write the comparison CSV to this path")
    p_cmp.set_defaults(func=cmd_compare)

    p_list = sub.add_parser("list", help="show registered oracles and shipped configs")
    p_list.set_defaults(func=cmd_list)

    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entry_point() -> None:
    sys.exit(main())
