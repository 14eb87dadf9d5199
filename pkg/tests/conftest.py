import warnings

import pytest

from proxgrad.cli import _resolve_config_path, load_run_config
from proxgrad.diagnostics import IterateRecord, Trace
from proxgrad.solver import SolverConfig, solve

SHIPPED = ["lasso_small", "quartic_box", "quartic_l0", "logistic_l1", "sphere_quadratic"]


def load_shipped(name):
    """Problem/config/x0 dict for a shipped example config."""
    path = _resolve_config_path(name)
    assert path is not None, f"shipped config {name} not found"
    return load_run_config(path)


def solve_quiet(problem, config, x0):
    """Run a solve with the nonmonotone-window warning silenced."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return solve(problem, config, x0)


def synth_trace(psi, step_norm=None, gamma=None, inner_iters=None, config=None):
    """Hand-rolled trace for checker fault-injection tests."""
    n = len(psi)
    step_norm = step_norm if step_norm is not None else [0.0] * n
    gamma = gamma if gamma is not None else [1.0] * n
    inner_iters = inner_iters if inner_iters is not None else [0] * n
    records = tuple(
        IterateRecord(
            k=k,
            psi=float(psi[k]),
            f_val=float(psi[k]),
            phi_val=0.0,
            gamma0=float(gamma[k]),
            gamma=float(gamma[k]),
            inner_iters=int(inner_iters[k]),
            step_norm=float(step_norm[k]),
            residual=float("inf") if k == 0 else 1.0,
            accepted_ref=float(psi[k]),
        )
        for k in range(n)
    )
    return Trace(records=records, config_echo=config or SolverConfig(),
                 problem_name="synthetic", x0_hash="0" * 16)


@pytest.fixture
def lasso():
    return load_shipped("lasso_small")
