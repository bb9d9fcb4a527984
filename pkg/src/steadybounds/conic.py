"""Minimal conic-program interface shared by the bound solver and the oracle.

A problem is `min c.x  s.t.  A x + s = b,  s in K`, with K a product of a
zero cone (equalities), a nonnegative cone and symmetric PSD cones, in
that row order.  Backends translate this one structure to the solver's
native API; PSD rows use the backend's own scaled-triangle packing
(Clarabel: upper triangle column-major, SCS: lower triangle column-major,
both with off-diagonals scaled by sqrt(2)).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = ["ConeSpec", "ConicProblem", "ConicSolution", "solve_conic", "available_backends"]

DEFAULT_BACKEND = "clarabel"


@dataclass(frozen=True)
class ConeSpec:
    """Cone sizes, in row order: equalities, nonnegatives, PSD block dims."""

    zero: int = 0
    nonneg: int = 0
    psd_dims: tuple[int, ...] = ()


@dataclass
class ConicProblem:
    c: np.ndarray
    a_matrix: sp.csc_matrix
    b: np.ndarray
    cones: ConeSpec

    def __post_init__(self) -> None:
        rows = self.cones.zero + self.cones.nonneg + sum(
            d * (d + 1) // 2 for d in self.cones.psd_dims
        )
        if self.a_matrix.shape != (rows, self.c.size):
            raise ValueError(
                f"A is {self.a_matrix.shape}, expected ({rows}, {self.c.size})"
            )
        if self.b.size != rows:
            raise ValueError("b length does not match the cone layout")


@dataclass
class ConicSolution:
    status: str           # solver-native status string
    optimal: bool         # solver claims convergence
    x: np.ndarray | None
    obj_primal: float
    obj_dual: float
    iterations: int
    solve_time: float
    infeasible: bool = False
    unbounded: bool = False


@dataclass
class ConicSettings:
    backend: str = DEFAULT_BACKEND
    tol: float = 1e-8
    max_iterations: int = 100_000
    verbose: bool = False
    # KKT static regularization; the auto-generated equality systems are
    # near-degenerate and Clarabel's 1e-8 default stalls on them.
    static_regularization: float = 1e-7


def available_backends() -> list[str]:
    out = []
    try:
        import clarabel  # noqa: F401

        out.append("clarabel")
    except ImportError:
        pass
    try:
        import scs  # noqa: F401

        out.append("scs")
    except ImportError:
        pass
    return out


# -- triangle packings -------------------------------------------------

_SQRT2 = np.sqrt(2.0)


def _triangle_offsets(dims: tuple[int, ...]) -> list[int]:
    offs = []
    acc = 0
    for d in dims:
        offs.append(acc)
        acc += d * (d + 1) // 2
    return offs


def _upper_colmajor_index(d: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    # position of (i, j), i <= j, in [(0,0),(0,1),(1,1),(0,2),...]
    return j * (j + 1) // 2 + i


def _lower_colmajor_index(d: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    # position of (i, j), i >= j, in [(0,0),(1,0),...,(d-1,0),(1,1),...]
    return j * d - j * (j - 1) // 2 + (i - j)


def repack_psd_rows(problem: ConicProblem, order: str) -> tuple[sp.csc_matrix, np.ndarray]:
    """Return (A, b) with PSD rows permuted into the backend's packing.

    The canonical storage in ``ConicProblem`` is Clarabel's packing
    (upper triangle, column-major); ``order="lower"`` converts to SCS's.
    """
    if order == "upper":
        return problem.a_matrix, problem.b
    head = problem.cones.zero + problem.cones.nonneg
    perm = np.arange(problem.b.size)
    offset = head
    for d in problem.cones.psd_dims:
        cnt = d * (d + 1) // 2
        ii, jj = np.triu_indices(d)
        src = offset + _upper_colmajor_index(d, ii, jj)
        dst = offset + _lower_colmajor_index(d, jj, ii)  # (i,j)->(j,i) lower
        perm[dst] = src
        offset += cnt
    p = sp.csr_matrix(
        (np.ones(perm.size), (np.arange(perm.size), perm)), shape=(perm.size, perm.size)
    )
    return (p @ problem.a_matrix).tocsc(), problem.b[perm]


def svec_upper(m: np.ndarray) -> np.ndarray:
    """Canonical scaled-triangle vector of a symmetric matrix (Clarabel packing)."""
    d = m.shape[0]
    ii, jj = np.triu_indices(d)
    vals = np.asarray(m, dtype=float)[ii, jj].copy()
    vals[ii != jj] *= _SQRT2
    return vals


def embed_hermitian(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric [[Re, -Im], [Im, Re]] embedding of a Hermitian matrix.

    PSD iff the complex matrix is PSD; every eigenvalue appears twice.
    """
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(m - m.conj().T).max() > tol * max(1.0, np.abs(m).max()):
        raise ValueError("matrix is not Hermitian")
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


# -- backends ----------------------------------------------------------

def _solve_clarabel(problem: ConicProblem, settings: ConicSettings) -> ConicSolution:
    import clarabel

    cones = []
    if problem.cones.zero:
        cones.append(clarabel.ZeroConeT(problem.cones.zero))
    if problem.cones.nonneg:
        cones.append(clarabel.NonnegativeConeT(problem.cones.nonneg))
    for d in problem.cones.psd_dims:
        cones.append(clarabel.PSDTriangleConeT(d))

    st = clarabel.DefaultSettings()
    st.verbose = settings.verbose
    st.max_iter = settings.max_iterations
    st.tol_gap_abs = settings.tol
    st.tol_gap_rel = settings.tol
    st.tol_feas = settings.tol
    st.static_regularization_constant = settings.static_regularization

    nvar = problem.c.size
    p = sp.csc_matrix((nvar, nvar))
    solver = clarabel.DefaultSolver(
        p, problem.c, problem.a_matrix.tocsc(), problem.b, cones, st
    )
    t0 = time.perf_counter()
    sol = solver.solve()
    wall = time.perf_counter() - t0
    status = str(sol.status)
    optimal = status in ("Solved", "SolverStatus.Solved")
    almost = "Almost" in status
    return ConicSolution(
        status=status,
        optimal=optimal or almost,
        x=np.asarray(sol.x) if sol.x is not None else None,
        obj_primal=float(sol.obj_val),
        obj_dual=float(sol.obj_val_dual),
        iterations=int(sol.iterations),
        solve_time=wall,
        infeasible="PrimalInfeasible" in status,
        unbounded="DualInfeasible" in status,
    )


def _solve_scs(problem: ConicProblem, settings: ConicSettings) -> ConicSolution:
    import scs

    a_matrix, b = repack_psd_rows(problem, "lower")
    cone: dict = {}
    if problem.cones.zero:
        cone["z"] = problem.cones.zero
    if problem.cones.nonneg:
        cone["l"] = problem.cones.nonneg
    if problem.cones.psd_dims:
        cone["s"] = list(problem.cones.psd_dims)

    data = {"P": None, "A": a_matrix, "b": b, "c": problem.c}
    solver = scs.SCS(
        data,
        cone,
        verbose=settings.verbose,
        eps_abs=settings.tol,
        eps_rel=settings.tol,
        max_iters=settings.max_iterations,
    )
    t0 = time.perf_counter()
    out = solver.solve()
    wall = time.perf_counter() - t0
    info = out["info"]
    status = str(info["status"])
    low = status.lower()
    return ConicSolution(
        status=status,
        optimal="solved" in low and "inaccurate" not in low,
        x=out.get("x"),
        obj_primal=float(info["pobj"]),
        obj_dual=float(info["dobj"]),
        iterations=int(info["iter"]),
        solve_time=wall,
        infeasible="infeasible" in low,
        unbounded="unbounded" in low,
    )


_BACKENDS = {"clarabel": _solve_clarabel, "scs": _solve_scs}


def solve_conic(problem: ConicProblem, settings: ConicSettings | None = None) -> ConicSolution:
    settings = settings or ConicSettings()
    try:
        backend = _BACKENDS[settings.backend]
    except KeyError:
        raise ValueError(
            f"unknown backend {settings.backend!r}; available: {sorted(_BACKENDS)}"
        ) from None
    return backend(problem, settings)
