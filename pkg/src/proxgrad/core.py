"""Vector primitives, extended-real arithmetic, and the composite problem type.

Points live in plain Euclidean space and are represented as dense 1-D float64
numpy arrays.  The nonsmooth term of a composite objective may take the value
``+inf`` (and only ``+inf``); everywhere in this package "extended real" means
a Python float where ``math.inf`` marks points outside the domain.  IEEE
semantics already give the required behaviour: ``inf`` compares greater than
every finite value and ``finite + inf == inf``.

All types in this module are immutable values and all operations are pure,
so problems may be shared freely between concurrently running solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Vector",
    "as_vector",
    "norm",
    "dot",
    "axpy",
    "SmoothOracle",
    "ProxOracle",
    "ProblemMetadata",
    "CompositeProblem",
    "psi_eval",
]

Vector = np.ndarray


def as_vector(x, dimension: int | None = None) -> Vector:
    """Coerce `x` to a finite 1-D float64 array, optionally checking its length.

    Raises
    ------
    ValueError
        If `x` is not one-dimensional, contains NaN or +-inf, is empty, or
        does not match `dimension`.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got array of shape {v.shape}")
    if v.size == 0:
        raise ValueError("vectors must have dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    if dimension is not None and v.size != dimension:
        raise ValueError(f"dimension mismatch: expected {dimension}, got {v.size}")
    return v


def dot(x: Vector, y: Vector) -> float:
    """Euclidean inner product."""
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.dot(x, y))


def norm(x: Vector) -> float:
    """Euclidean norm, computed as sqrt(dot(x, x))."""
    return math.sqrt(float(np.dot(x, x)))


def axpy(a: float, x: Vector, y: Vector) -> Vector:
    """Return ``a*x + y``."""
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return a * x + y


@dataclass(frozen=True)
class SmoothOracle:
    """A continuously differentiable function with an exact gradient.

    `eval` and `grad` must be total on all finite vectors of the oracle's
    dimension; `grad` returns a vector of the same dimension.  Oracles are
    immutable after construction and reentrant.
    """

    name: str
    eval: Callable[[Vector], float]
    grad: Callable[[Vector], Vector]
    grad_locally_lipschitz: bool = True


@dataclass(frozen=True)
class ProxOracle:
    """A lower semicontinuous function with an exact proximal map.

    ``prox(gamma, v)`` returns a global minimizer of
    ``x -> (gamma/2)*||x - v||^2 + phi(x)`` and its output always lies in the
    domain of `eval` (i.e. ``eval(prox(gamma, v))`` is finite).  Where the
    minimizer is not unique the tie is broken deterministically toward the
    sparser / smaller-norm point; the concrete rule is documented per oracle.
    """

    name: str
    eval: Callable[[Vector], float]
    prox: Callable[[float, Vector], Vector]
    continuous_on_domain: bool = True
    affine_minorant: bool = True
    convex: bool = False


@dataclass(frozen=True)
class ProblemMetadata:
    """Structural flags declared by the problem author.

    The flags are informational: they are surfaced in reports and warnings
    but never silently assumed by the solver.
    """

    phi_continuous_on_domain: bool = True
    grad_f_locally_lipschitz: bool = True
    psi_bounded_below: bool = True
    phi_affine_minorant: bool = True


@dataclass(frozen=True)
class CompositeProblem:
    """Pairing of a smooth oracle ``f`` and a prox-friendly oracle ``phi``.

    The composite objective is ``psi(x) = f(x) + phi(x)`` on vectors of the
    given dimension.
    """

    smooth: SmoothOracle
    nonsmooth: ProxOracle
    dimension: int
    metadata: ProblemMetadata = field(default_factory=ProblemMetadata)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")

    @property
    def name(self) -> str:
        return f"{self.smooth.name}+{self.nonsmooth.name}"


def make_problem(
    smooth: SmoothOracle,
    nonsmooth: ProxOracle,
    dimension: int,
    psi_bounded_below: bool = True,
) -> CompositeProblem:
    """Build a problem, deriving metadata flags from the oracles."""
    meta = ProblemMetadata(
        phi_continuous_on_domain=nonsmooth.continuous_on_domain,
        grad_f_locally_lipschitz=smooth.grad_locally_lipschitz,
        psi_bounded_below=psi_bounded_below,
        phi_affine_minorant=nonsmooth.affine_minorant,
    )
    return CompositeProblem(smooth, nonsmooth, dimension, meta)


def psi_eval(problem: CompositeProblem, x) -> float:
    """Evaluate ``psi(x) = f(x) + phi(x)`` with extended-real addition.

    The result is finite exactly when `x` lies in the domain of the
    nonsmooth term.
    """
    v = as_vector(x, problem.dimension)
    return float(problem.smooth.eval(v)) + float(problem.nonsmooth.eval(v))
