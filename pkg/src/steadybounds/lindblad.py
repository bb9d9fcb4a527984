"""Lindblad models: the symbolic adjoint generator and dense Liouvillians.

A model is a Hamiltonian plus rated jump operators on ``n`` sites.  The
workhorse is ``adjoint_apply``, the Heisenberg-picture generator

    Ldag(G) = i[H, G] + sum_i gamma_i (Li^dag G Li - {Li^dag Li, G} / 2),

applied symbolically to Pauli polynomials.  ``liouvillian_dense`` builds
the matrix of the Schroedinger-picture generator acting on vectorized
density matrices for the small-system oracle.

Vectorization convention: vec = C-order (row-major) flatten, so that
vec(A X B) = (A kron B^T) vec(X) and

    L = -i (H kron I - I kron H^T)
        + sum_i gamma_i (Li kron conj(Li)
                         - (Li^dag Li kron I + I kron (Li^dag Li)^T) / 2).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .pauli import EPS_ZERO, PauliPolynomial, PauliString, _mul_raw, Phase

__all__ = ["LindbladModel", "adjoint_apply", "liouvillian_dense", "liouvillian_sparse"]

# Dense Liouvillians are 4^n x 4^n; above this the oracle refuses.
N_MAX_DENSE = 8


class LindbladModel:
    """Hamiltonian + rated jump operators on ``n`` sites.

    ``hamiltonian`` must be Hermitian (real coefficients on phase-free
    strings) and every rate non-negative.  Instances are immutable after
    construction; ``adjoint_apply`` is pure and may be called from any
    number of workers.
    """

    __slots__ = ("n", "hamiltonian", "dissipators", "_ctx")

    def __init__(
        self,
        n: int,
        hamiltonian: PauliPolynomial,
        dissipators: list[tuple[PauliPolynomial, float]] | tuple = (),
    ) -> None:
        if hamiltonian.n != n:
            raise ValueError("hamiltonian site count differs from model's")
        if not hamiltonian.is_hermitian():
            raise ValueError("hamiltonian must be Hermitian (real coefficients)")
        for jump, rate in dissipators:
            if jump.n != n:
                raise ValueError("jump operator site count differs from model's")
            if rate < 0:
                raise ValueError(f"negative dissipator rate {rate}")
        self.n = n
        self.hamiltonian = hamiltonian
        self.dissipators = tuple((jump, float(rate)) for jump, rate in dissipators)
        self._ctx = None

    def __repr__(self) -> str:
        return (
            f"LindbladModel(n={self.n}, |H|={len(self.hamiltonian)} terms, "
            f"{len(self.dissipators)} dissipators)"
        )

    # Precomputed per-site index of which generator pieces can touch a
    # string supported there; pieces with support disjoint from G's
    # contribute exactly zero to Ldag(G).
    def _context(self) -> "_AdjointContext":
        if self._ctx is None:
            self._ctx = _AdjointContext(self)
        return self._ctx


class _AdjointContext:
    __slots__ = ("n", "h_terms", "diss", "site_h", "site_d")

    def __init__(self, model: LindbladModel) -> None:
        n = model.n
        self.n = n
        self.h_terms = [
            (s, c.real) for s, c in model.hamiltonian.terms.items() if not s.is_identity()
        ]
        self.diss = []
        for jump, rate in model.dissipators:
            if rate == 0.0 or jump.is_zero():
                continue
            jdag = jump.adjoint()
            pairs = [
                (ca.conjugate() * cb, sa, sb)
                for sa, ca in jump.terms.items()
                for sb, cb in jump.terms.items()
            ]
            self.diss.append((rate, pairs, (jdag @ jump).simplify()))
        self.site_h = [[] for _ in range(n)]
        for idx, (s, _) in enumerate(self.h_terms):
            for site in s.support():
                self.site_h[site - 1].append(idx)
        self.site_d = [[] for _ in range(n)]
        for idx, (_, pairs, _) in enumerate(self.diss):
            sites = set()
            for _, sa, sb in pairs:
                sites.update(sa.support())
                sites.update(sb.support())
            for site in sites:
                self.site_d[site - 1].append(idx)


def _adjoint_apply_string(ctx: _AdjointContext, g: PauliString) -> dict[PauliString, complex]:
    """Ldag applied to a single string, as a raw coefficient dict."""
    out: dict[PauliString, complex] = {}
    support = g.support()
    h_idx: set[int] = set()
    d_idx: set[int] = set()
    for site in support:
        h_idx.update(ctx.site_h[site - 1])
        d_idx.update(ctx.site_d[site - 1])

    # i [H, G]: only anticommuting terms contribute, and then hG = -Gh,
    # so i(hG - Gh) = 2i hG.
    for idx in h_idx:
        h, coeff = ctx.h_terms[idx]
        if g.commutes_with(h):
            continue
        k, x, z = _mul_raw(h, g)
        string = PauliString(ctx.n, x, z)
        out[string] = out.get(string, 0) + 2j * coeff * Phase._VALUES[k]

    for idx in d_idx:
        rate, pairs, jdagj = ctx.diss[idx]
        # Li^dag G Li, expanded over the jump's string decomposition
        for coeff, sa, sb in pairs:
            ka, xa, za = _mul_raw(sa, g)
            left = PauliString(ctx.n, xa, za)
            kb, xb, zb = _mul_raw(left, sb)
            string = PauliString(ctx.n, xb, zb)
            out[string] = out.get(string, 0) + rate * coeff * Phase._VALUES[(ka + kb) & 3]
        # -{Li^dag Li, G}/2: anticommuting terms cancel, commuting double.
        for s, c in jdagj.terms.items():
            if not g.commutes_with(s):
                continue
            k, x, z = _mul_raw(s, g)
            string = PauliString(ctx.n, x, z)
            out[string] = out.get(string, 0) - rate * c * Phase._VALUES[k]

    return {s: c for s, c in out.items() if abs(c) >= EPS_ZERO}


def adjoint_apply(model: LindbladModel, operator: PauliPolynomial) -> PauliPolynomial:
    """Apply the adjoint generator to an operator, symbolically.

    Linear in the operator; maps Hermitian to Hermitian and the identity
    to the exact zero polynomial (trace preservation).
    """
    if operator.n != model.n:
        raise ValueError("operator site count differs from model's")
    ctx = model._context()
    out: dict[PauliString, complex] = {}
    for string, coeff in operator.terms.items():
        for s, c in _adjoint_apply_string(ctx, string).items():
            v = out.get(s, 0) + coeff * c
            if abs(v) < EPS_ZERO:
                out.pop(s, None)
            else:
                out[s] = v
    return PauliPolynomial(model.n, out, _trusted=True)


def _dense_operators(model: LindbladModel) -> tuple[np.ndarray, list[tuple[float, np.ndarray]]]:
    h = model.hamiltonian.matrix()
    jumps = [(rate, jump.matrix()) for jump, rate in model.dissipators if rate > 0]
    return h, jumps


def liouvillian_sparse(model: LindbladModel) -> sp.csr_matrix:
    """Sparse 4^n x 4^n matrix of the generator on C-order vectorized states."""
    dim = 2**model.n
    eye = sp.identity(dim, dtype=complex, format="csr")
    h = model.hamiltonian.matrix_sparse()
    lmat = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    for jump, rate in model.dissipators:
        if rate == 0.0:
            continue
        j = jump.matrix_sparse()
        jdagj = (j.conjugate().T @ j).tocsr()
        lmat = lmat + rate * (
            sp.kron(j, j.conjugate())
            - 0.5 * (sp.kron(jdagj, eye) + sp.kron(eye, jdagj.T))
        )
    return lmat.tocsr()


def liouvillian_dense(model: LindbladModel, n_max: int = N_MAX_DENSE) -> np.ndarray:
    """Dense matrix of the generator; refuses above ``n_max`` sites.

    Satisfies tr(G L(rho)) = tr(Ldag(G) rho) for all G, rho.
    """
    if model.n > n_max:
        raise ValueError(
            f"n={model.n} too large for a dense Liouvillian (limit {n_max})"
        )
    return liouvillian_sparse(model).toarray()


def apply_superoperator(lmat: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Act on a density matrix through the C-order vectorization."""
    dim = rho.shape[0]
    return (lmat @ rho.reshape(-1)).reshape(dim, dim)


def adjoint_superoperator(lmat: np.ndarray) -> np.ndarray:
    """Matrix of Ldag under the Frobenius pairing: the conjugate transpose."""
    return lmat.conj().T


def pauli_decompose(matrix: np.ndarray, n: int) -> PauliPolynomial:
    """Expand a 2^n x 2^n matrix in the Pauli-string basis."""
    dim = 2**n
    if matrix.shape != (dim, dim):
        raise ValueError("matrix shape does not match the site count")
    terms = {}
    for string in _all_strings(n):
        coeff = np.trace(string.matrix() @ matrix) / dim
        if abs(coeff) >= 1e-12:
            terms[string] = complex(coeff)
    return PauliPolynomial(n, terms, _trusted=True)


def _all_strings(n: int):
    from itertools import product

    for letters in product("IXYZ", repeat=n):
        yield PauliString.from_letters(letters)
