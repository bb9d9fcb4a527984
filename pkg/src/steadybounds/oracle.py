"""Exact small-system ground truth.

Dense (or sparse-LU accelerated) steady states of a Lindblad model, exact
expectation values, and the exact min/max of an observable over the full
convex set of steady states.  Everything here is independent of the
moment relaxation: it works on the 4^n-dimensional Liouvillian directly,
which is what makes it usable as an oracle for the scalable path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import conic
from .lindblad import LindbladModel, N_MAX_DENSE, liouvillian_dense, liouvillian_sparse
from .pauli import PauliPolynomial, PauliString

__all__ = ["DenseState", "SteadyStateResult", "steady_state_dense", "expectation", "moment", "exact_extrema"]

# Relative singular-value threshold for the numerical nullspace.
NULLSPACE_RTOL = 1e-10
# Largest n solved by full dense SVD; beyond this a sparse-LU solve finds
# one steady state (with SVD as fallback), which is far cheaper at 4^n.
SVD_MAX_SITES = 5


@dataclass
class DenseState:
    """A density matrix: Hermitian, unit trace, PSD up to tolerance."""

    n: int
    matrix: np.ndarray

    def validate(self, tol: float = 1e-8) -> None:
        m = self.matrix
        if m.shape != (2**self.n, 2**self.n):
            raise ValueError("state dimension does not match n")
        if np.abs(m - m.conj().T).max() > tol:
            raise ValueError("state is not Hermitian")
        if abs(np.trace(m) - 1.0) > tol:
            raise ValueError("state trace differs from 1")


@dataclass
class SteadyStateResult:
    state: DenseState
    basis: list[np.ndarray]       # Frobenius-orthonormal nullspace matrices
    nullspace_complete: bool      # False when only one state was computed
    residual: float               # ||L(rho_ss)||_F
    method: str                   # "svd" or "sparse-lu"

    @property
    def degeneracy(self) -> int:
        return len(self.basis)


def _hermitian_nullspace_basis(raw: list[np.ndarray], tol: float = 1e-9) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of a dagger-closed matrix subspace."""
    basis: list[np.ndarray] = []
    for b in raw:
        for cand in ((b + b.conj().T) / 2, (b - b.conj().T) / 2j):
            v = cand.copy()
            for h in basis:
                v -= np.vdot(h, v).real * h
            nrm = np.linalg.norm(v)
            if nrm > tol:
                basis.append(v / nrm)
    return basis


def _min_eig(m: np.ndarray) -> float:
    if m.shape[0] <= 512:
        return float(np.linalg.eigvalsh(m)[0])
    try:
        vals = spla.eigsh(m, k=1, which="SA", return_eigenvectors=False)
        return float(vals[0])
    except spla.ArpackError:
        return float(np.linalg.eigvalsh(m)[0])


def _physical_state(hbasis: list[np.ndarray], n: int) -> np.ndarray:
    """A PSD, trace-1 element of the Hermitian nullspace span."""
    if len(hbasis) == 1:
        h = hbasis[0]
        tr = np.trace(h).real
        if abs(tr) < 1e-12:
            raise RuntimeError("one-dimensional nullspace with traceless element")
        return h / tr
    # Maximize the smallest eigenvalue over trace-one combinations:
    #   max t  s.t.  sum_k c_k tr(H_k) = 1,  sum_k c_k E(H_k) - t I >= 0,
    # with E the real embedding of the complex Hermitian blocks.
    d = len(hbasis)
    dim = 2 * hbasis[0].shape[0]
    cvec = np.zeros(d + 1)
    cvec[d] = -1.0  # minimize -t
    traces = np.array([np.trace(h).real for h in hbasis])
    a_eq = sp.csr_matrix(np.concatenate([traces, [0.0]])[None, :])
    cols = [-conic.svec_upper(conic.embed_hermitian(h)) for h in hbasis]
    cols.append(conic.svec_upper(np.eye(dim)))
    a_psd = sp.csc_matrix(np.column_stack(cols))
    a_matrix = sp.vstack([a_eq, a_psd]).tocsc()
    b = np.zeros(1 + dim * (dim + 1) // 2)
    b[0] = 1.0
    problem = conic.ConicProblem(cvec, a_matrix, b, conic.ConeSpec(zero=1, psd_dims=(dim,)))
    sol = conic.solve_conic(problem, conic.ConicSettings(tol=1e-10))
    if sol.x is None:
        raise RuntimeError(f"physical-state feasibility solve failed: {sol.status}")
    rho = sum(c * h for c, h in zip(sol.x[:d], hbasis))
    return rho / np.trace(rho).real


def _steady_state_svd(model: LindbladModel) -> SteadyStateResult:
    lmat = liouvillian_dense(model)
    dim = 2**model.n
    _, svals, vh = np.linalg.svd(lmat)
    cut = NULLSPACE_RTOL * svals[0] if svals[0] > 0 else NULLSPACE_RTOL
    null = [vh[k].conj().reshape(dim, dim) for k in range(len(svals)) if svals[k] <= cut]
    if not null:
        raise RuntimeError(
            "empty numerical nullspace: a Lindblad generator always has a steady state"
        )
    hbasis = _hermitian_nullspace_basis(null)
    rho = _physical_state(hbasis, model.n)
    residual = float(np.linalg.norm((lmat @ rho.reshape(-1)).reshape(dim, dim)))
    return SteadyStateResult(
        state=DenseState(model.n, rho),
        basis=hbasis,
        nullspace_complete=True,
        residual=residual,
        method="svd",
    )


def _steady_state_lu(model: LindbladModel) -> SteadyStateResult | None:
    lmat = liouvillian_sparse(model)
    dim = 2**model.n
    nvec = dim * dim
    diag_idx = np.arange(dim) * dim + np.arange(dim)
    coo = lmat.tocoo()
    for row in (0, nvec - 1):
        keep = coo.row != row
        data = np.concatenate([coo.data[keep], np.ones(dim, dtype=complex)])
        rows = np.concatenate([coo.row[keep], np.full(dim, row)])
        cols = np.concatenate([coo.col[keep], diag_idx])
        modified = sp.csc_matrix((data, (rows, cols)), shape=(nvec, nvec))
        rhs = np.zeros(nvec, dtype=complex)
        rhs[row] = 1.0
        try:
            lu = spla.splu(modified)
            x = lu.solve(rhs)
        except RuntimeError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        rho = x.reshape(dim, dim)
        rho = (rho + rho.conj().T) / 2
        tr = np.trace(rho).real
        if abs(tr) < 1e-8:
            continue
        rho = rho / tr
        residual = float(np.linalg.norm((lmat @ rho.reshape(-1))))
        if residual > 1e-9 * max(1.0, abs(lmat).max()):
            continue
        if _min_eig(rho) < -1e-8:
            continue
        return SteadyStateResult(
            state=DenseState(model.n, rho),
            basis=[rho / np.linalg.norm(rho)],
            nullspace_complete=False,
            residual=residual,
            method="sparse-lu",
        )
    return None


def steady_state_dense(
    model: LindbladModel,
    n_max: int = N_MAX_DENSE,
    require_complete_nullspace: bool = False,
) -> SteadyStateResult:
    """Nullspace basis of the Liouvillian plus one physical steady state.

    For n <= 5 (or when the complete nullspace is requested) the dense
    SVD route is used; larger systems go through a residual-verified
    sparse-LU solve that finds one steady state, falling back to the SVD
    when that fails.
    """
    if model.n > n_max:
        raise ValueError(f"n={model.n} exceeds the dense-oracle limit {n_max}")
    if model.n <= SVD_MAX_SITES or require_complete_nullspace:
        return _steady_state_svd(model)
    result = _steady_state_lu(model)
    if result is not None:
        return result
    return _steady_state_svd(model)


def moment(state: DenseState, string: PauliString) -> float:
    """tr(P rho) for a single Pauli string (always real)."""
    if string.n != state.n:
        raise ValueError("site count mismatch")
    p = string.matrix_sparse().tocoo()
    val = complex(np.sum(p.data * state.matrix[p.col, p.row]))
    return float(val.real)


def expectation(state: DenseState, observable: PauliPolynomial, imag_tol: float = 1e-12) -> float:
    """tr(O rho); raises if the imaginary part betrays a non-Hermitian O."""
    if observable.n != state.n:
        raise ValueError("site count mismatch")
    total = 0j
    for string, coeff in observable.terms.items():
        p = string.matrix_sparse().tocoo()
        total += coeff * complex(np.sum(p.data * state.matrix[p.col, p.row]))
    scale = max(1.0, abs(total))
    if abs(total.imag) > imag_tol * scale * 10:
        raise ValueError(
            f"expectation has imaginary part {total.imag:.3e}; observable not Hermitian?"
        )
    return float(total.real)


def moments_of(state: DenseState, strings) -> dict[PauliString, float]:
    return {s: moment(state, s) for s in strings}


def exact_extrema(
    model: LindbladModel,
    observable: PauliPolynomial,
    n_max: int = N_MAX_DENSE,
    tol: float = 1e-9,
) -> tuple[float, float]:
    """Exact (min, max) of <O> over the whole convex set of steady states.

    Solves the density-matrix problem restricted to the Liouvillian
    nullspace: optimize tr(rho O) over Hermitian combinations of the
    nullspace basis subject to trace one and positivity.  With a unique
    steady state min and max coincide.
    """
    if observable.n != model.n:
        raise ValueError("site count mismatch")
    result = steady_state_dense(model, n_max=n_max, require_complete_nullspace=True)
    hbasis = result.basis
    if len(hbasis) == 1:
        val = expectation(result.state, observable)
        return val, val
    omat = observable.matrix()
    evec = np.array([np.trace(h @ omat).real for h in hbasis])
    traces = np.array([np.trace(h).real for h in hbasis])
    d = len(hbasis)
    dim = 2 * hbasis[0].shape[0]
    a_eq = sp.csr_matrix(traces[None, :])
    a_psd = sp.csc_matrix(
        np.column_stack([-conic.svec_upper(conic.embed_hermitian(h)) for h in hbasis])
    )
    a_matrix = sp.vstack([a_eq, a_psd]).tocsc()
    b = np.zeros(1 + dim * (dim + 1) // 2)
    b[0] = 1.0
    cones = conic.ConeSpec(zero=1, psd_dims=(dim,))
    out = []
    for sign in (1.0, -1.0):
        problem = conic.ConicProblem(sign * evec, a_matrix, b, cones)
        sol = conic.solve_conic(problem, conic.ConicSettings(tol=tol))
        if sol.x is None or not sol.optimal:
            raise RuntimeError(f"exact-extrema solve failed: {sol.status}")
        out.append(sign * float(evec @ sol.x[:d]))
    lo, hi = min(out), max(out)
    return lo, hi
