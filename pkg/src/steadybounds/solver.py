"""Directional solves of assembled relaxations and certified intervals.

Bounds are taken from the dual objective of the conic solve: a dual
feasible point under-estimates the minimum (and, after sign flips, over-
estimates the maximum), so the reported interval errs on the safe side
within solver tolerance.  The two directions share one immutable problem
instance but never share solver state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import conic
from .pauli import PauliPolynomial
from .lindblad import LindbladModel
from .relax import AssemblyOptions, RelaxationProblem, assemble

__all__ = ["SolverSettings", "BoundResult", "IntervalResult", "bound", "certify_interval"]

log = logging.getLogger("steadybounds")

# Gap thresholds separating optimal / near-optimal / failed solves.
GAP_OPTIMAL = 1e-8
GAP_NEAR = 1e-5


@dataclass(frozen=True)
class SolverSettings:
    backend: str = conic.DEFAULT_BACKEND
    tol: float = 1e-8
    max_iterations: int = 100_000
    verbose: bool = False

    def conic_settings(self) -> conic.ConicSettings:
        return conic.ConicSettings(
            backend=self.backend,
            tol=self.tol,
            max_iterations=self.max_iterations,
            verbose=self.verbose,
        )


@dataclass
class BoundResult:
    """One directional solve; ``value`` is finite iff the status is good."""

    direction: str                # "min" | "max"
    value: float
    status: str                   # optimal | near-optimal | infeasible | unbounded | numerical-failure
    objective_primal: float
    objective_dual: float
    gap: float
    iterations: int
    wall_time: float
    solver_status: str
    fingerprint: str

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "near-optimal")


def conic_form(problem: RelaxationProblem, direction: str) -> conic.ConicProblem:
    """Lower the relaxation to `min c.x, A x + s = b, s in K`."""
    if direction not in ("min", "max"):
        raise ValueError(f"direction must be 'min' or 'max', not {direction!r}")
    nvar = problem.n_variables
    sign = 1.0 if direction == "min" else -1.0
    c = sign * problem.objective

    parts = []
    bs = []
    zero = problem.n_equalities
    if zero:
        parts.append(problem.eq_matrix.tocsc())
        bs.append(problem.eq_rhs)
    nonneg = 0
    if problem.box:
        nonneg = 2 * nvar
        eye = sp.identity(nvar, format="csc")
        parts.append(sp.vstack([eye, -eye]).tocsc())  # 1 - x >= 0, 1 + x >= 0
        bs.append(np.ones(2 * nvar))
    psd_dims = []
    for block in problem.blocks:
        d = block.dim
        psd_dims.append(d)
        tri_rows = conic._upper_colmajor_index(d, block.rows, block.cols)
        scale = np.where(block.rows == block.cols, 1.0, conic._SQRT2)
        nrows = d * (d + 1) // 2
        b_vec = np.zeros(nrows)
        const = block.var_idx < 0
        np.add.at(b_vec, tri_rows[const], (block.vals * scale)[const])
        var = ~const
        a_block = sp.csc_matrix(
            (-(block.vals * scale)[var], (tri_rows[var], block.var_idx[var])),
            shape=(nrows, nvar),
        )
        parts.append(a_block)
        bs.append(b_vec)
    a_matrix = sp.vstack(parts).tocsc() if parts else sp.csc_matrix((0, nvar))
    b = np.concatenate(bs) if bs else np.zeros(0)
    return conic.ConicProblem(
        c, a_matrix, b, conic.ConeSpec(zero=zero, nonneg=nonneg, psd_dims=tuple(psd_dims))
    )


def bound(
    problem: RelaxationProblem,
    direction: str,
    settings: SolverSettings | None = None,
) -> BoundResult:
    """Solve one direction; "min" yields the certified lower bound."""
    settings = settings or SolverSettings()
    data = conic_form(problem, direction)
    sol = conic.solve_conic(data, settings.conic_settings())

    sign = 1.0 if direction == "min" else -1.0
    scale = max(1.0, abs(sol.obj_primal), abs(sol.obj_dual))
    gap = abs(sol.obj_primal - sol.obj_dual) / scale
    if sol.infeasible:
        status = "infeasible"
    elif sol.unbounded:
        status = "unbounded"
    elif sol.optimal and gap <= GAP_OPTIMAL:
        status = "optimal"
    elif (sol.optimal or sol.x is not None) and gap <= GAP_NEAR:
        status = "near-optimal"
    else:
        status = "numerical-failure"

    if status in ("optimal", "near-optimal"):
        certified = sol.obj_dual if math.isfinite(sol.obj_dual) else sol.obj_primal
        value = sign * certified + problem.objective_const
    else:
        value = math.nan
    return BoundResult(
        direction=direction,
        value=value,
        status=status,
        objective_primal=sign * sol.obj_primal + problem.objective_const,
        objective_dual=sign * sol.obj_dual + problem.objective_const,
        gap=gap,
        iterations=sol.iterations,
        wall_time=sol.solve_time,
        solver_status=sol.status,
        fingerprint=problem.fingerprint(),
    )


@dataclass
class IntervalResult:
    """Certified [lb, ub] containing every steady-state expectation value."""

    lb: BoundResult
    ub: BoundResult
    problem: RelaxationProblem

    def __iter__(self):
        return iter((self.lb, self.ub))

    @property
    def ok(self) -> bool:
        return self.lb.ok and self.ub.ok

    @property
    def width(self) -> float:
        return self.ub.value - self.lb.value

    def width_of_trivial(self) -> float:
        """Interval width as a fraction of the box-only objective range."""
        lo, hi = self.problem.trivial_range()
        return self.width / (hi - lo) if hi > lo else math.nan

    @property
    def sign_certified(self) -> bool:
        return self.ok and (self.lb.value > 0 or self.ub.value < 0)


def certify_interval(
    model: LindbladModel,
    observable: PauliPolynomial,
    options: AssemblyOptions,
    settings: SolverSettings | None = None,
    problem: RelaxationProblem | None = None,
) -> IntervalResult:
    """Assemble once, solve both directions, package the interval.

    A pre-assembled ``problem`` may be passed to reuse the assembly
    across solver settings.
    """
    if problem is None:
        problem = assemble(model, observable, options)
    lb = bound(problem, "min", settings)
    ub = bound(problem, "max", settings)
    if lb.ok and ub.ok:
        log.info(
            "certified interval [%.9g, %.9g], width %.3e (%.2f%% of trivial)",
            lb.value,
            ub.value,
            ub.value - lb.value,
            100.0 * (ub.value - lb.value) / max(
                problem.trivial_range()[1] - problem.trivial_range()[0], 1e-300
            ),
        )
    else:
        log.warning("bound solve failed: lb=%s ub=%s", lb.status, ub.status)
    return IntervalResult(lb=lb, ub=ub, problem=problem)
