"""Constraint families for the steady-state moment relaxation.

Four kinds of constraints on the moments <P> = tr(P rho_ss):

* linear equalities <Ldag(P)> = 0 harvested breadth-first from the
  observable's strings ("automatic" generation, with cycle detection and
  an exact solve when the closed system has full rank);
* moment-matrix positivity blocks over an operator basis;
* reduced-density-matrix positivity blocks on small site subsets;
* orbit equalities <P> = <g(P)> for declared lattice symmetries.

All products are plain data; generation for distinct seeds or subsets can
run in parallel workers and merge afterwards.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lindblad import LindbladModel, adjoint_apply, _adjoint_apply_string
from .pauli import PauliPolynomial, PauliString, multiply

__all__ = [
    "LinearConstraint",
    "PsdBlock",
    "GenerationReport",
    "ClosedSolveResult",
    "SymmetryError",
    "auto_generate",
    "solve_closed_system",
    "level_basis",
    "moment_matrix",
    "reduced_density_blocks",
    "symmetry_constraints",
    "constraints_to_text",
    "constraints_from_text",
]

# Rank decisions in the closed solve use this times the leading singular value.
RANK_RTOL = 1e-10
ILL_CONDITIONED = 1e12


class SymmetryError(ValueError):
    """A declared permutation demonstrably fails to commute with the generator."""


@dataclass
class LinearConstraint:
    """sum_P coeffs[P] * <P> = 0, with <I> read as 1.

    Coefficients are real: the adjoint generator maps Hermitian strings
    to Hermitian polynomials, and symmetry orbits contribute +-1 pairs.
    """

    coeffs: dict[PauliString, float]

    def __post_init__(self) -> None:
        if not self.coeffs:
            raise ValueError("constraint must have at least one nonzero coefficient")

    def residual(self, moments: dict[PauliString, float]) -> float:
        total = 0.0
        for string, coeff in self.coeffs.items():
            value = 1.0 if string.is_identity() else moments[string]
            total += coeff * value
        return total

    def strings(self) -> list[PauliString]:
        return sorted(self.coeffs, key=PauliString.sort_key)


@dataclass
class PsdBlock:
    """A Hermitian linear form in the moments, constrained to be PSD.

    ``entries[P]`` holds upper-triangle positions (i, j, coefficient);
    the full form is B = sum_P <P> * A_P with A_P Hermitian and the
    lower triangle implied by conjugation.  The identity string carries
    the constant part (its "moment" is pinned to one).
    """

    dim: int
    entries: dict[PauliString, tuple[tuple[int, int, complex], ...]]
    label: str = ""

    def strings(self) -> list[PauliString]:
        return sorted(self.entries, key=PauliString.sort_key)

    def coefficient_matrix(self, string: PauliString) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for i, j, c in self.entries.get(string, ()):
            out[i, j] += c
            if i != j:
                out[j, i] += c.conjugate()
        return out

    def evaluate(self, moments: dict[PauliString, float]) -> np.ndarray:
        """The numeric Hermitian matrix at a given moment assignment."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for string, positions in self.entries.items():
            value = 1.0 if string.is_identity() else moments[string]
            for i, j, c in positions:
                out[i, j] += c * value
                if i != j:
                    out[j, i] += c.conjugate() * value
        return out


def _fold_upper(raw: dict[PauliString, list[tuple[int, int, complex]]]) -> dict:
    """Merge duplicate positions and fold everything into the upper triangle."""
    folded: dict[PauliString, dict[tuple[int, int], complex]] = {}
    for string, positions in raw.items():
        acc = folded.setdefault(string, {})
        for i, j, c in positions:
            if i > j:
                i, j, c = j, i, c.conjugate()
            acc[(i, j)] = acc.get((i, j), 0) + c
    out = {}
    for string, acc in folded.items():
        kept = tuple(
            (i, j, c) for (i, j), c in sorted(acc.items()) if abs(c) > 1e-15
        )
        if kept:
            out[string] = kept
    return out


@dataclass
class GenerationReport:
    """Everything the automatic generation produced, deterministically.

    ``strings`` is the harvested set S_M in canonical order (identity
    first when referenced); ``processed`` records which strings were fed
    through the adjoint generator, in order.
    """

    strings: tuple[PauliString, ...]
    constraints: tuple[LinearConstraint, ...]
    processed: tuple[PauliString, ...]
    cycle_closed: bool
    seeds: tuple[PauliString, ...]

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)


def auto_generate(
    model: LindbladModel,
    seeds,
    budget: int,
) -> GenerationReport:
    """Breadth-first harvest of <Ldag(P)> = 0 constraints.

    Starting from the (canonically sorted, deduplicated) seed strings,
    pop a string, emit the linear constraint from its adjoint image, and
    enqueue every new string that appears, until ``budget`` constraints
    exist or the queue drains (a cycle: no new operators are generated).
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    seed_list = sorted(
        {s for s in seeds if not s.is_identity()}, key=PauliString.sort_key
    )
    if not seed_list:
        raise ValueError("empty seed set")
    for s in seed_list:
        if s.n != model.n:
            raise ValueError("seed site count differs from model's")

    ctx = model._context()
    queue = list(seed_list)
    head = 0
    enqueued = set(seed_list)
    harvested: set[PauliString] = set(seed_list)
    constraints: list[LinearConstraint] = []
    processed: list[PauliString] = []

    while head < len(queue) and len(constraints) < budget:
        string = queue[head]
        head += 1
        processed.append(string)
        image = _adjoint_apply_string(ctx, string)
        if not image:
            continue
        coeffs: dict[PauliString, float] = {}
        fresh = []
        for s, c in image.items():
            if abs(c.imag) > 1e-9:
                raise AssertionError(
                    "adjoint image of a Hermitian string must be Hermitian"
                )
            coeffs[s] = c.real
            harvested.add(s)
            if not s.is_identity() and s not in enqueued:
                enqueued.add(s)
                fresh.append(s)
        constraints.append(LinearConstraint(coeffs))
        fresh.sort(key=PauliString.sort_key)
        queue.extend(fresh)

    cycle_closed = head >= len(queue)
    return GenerationReport(
        strings=tuple(sorted(harvested, key=PauliString.sort_key)),
        constraints=tuple(constraints),
        processed=tuple(processed),
        cycle_closed=cycle_closed,
        seeds=tuple(seed_list),
    )


@dataclass
class ClosedSolveResult:
    status: str                                   # "solved" | "underdetermined"
    moments: dict[PauliString, float] | None
    rank: int
    n_variables: int
    condition: float
    ill_conditioned: bool


def solve_closed_system(report: GenerationReport) -> ClosedSolveResult:
    """Solve the cycle-closed linear system exactly under <I> = 1.

    Returns the unique moment assignment when the system has full column
    rank, or ``status="underdetermined"`` otherwise (multiple steady
    states, or closure without enough equations).
    """
    if not report.cycle_closed:
        raise ValueError("closed solve requires a cycle-closed generation report")
    variables = [s for s in report.strings if not s.is_identity()]
    index = {s: k for k, s in enumerate(variables)}
    m = len(report.constraints)
    a = np.zeros((m, len(variables)))
    rhs = np.zeros(m)
    for r, constraint in enumerate(report.constraints):
        for string, coeff in constraint.coeffs.items():
            if string.is_identity():
                rhs[r] -= coeff
            else:
                a[r, index[string]] = coeff
    svals = np.linalg.svd(a, compute_uv=False) if a.size else np.zeros(0)
    cut = RANK_RTOL * (svals[0] if svals.size and svals[0] > 0 else 1.0)
    rank = int(np.sum(svals > cut))
    smallest = svals[rank - 1] if rank else 0.0
    condition = float(svals[0] / smallest) if rank and smallest > 0 else np.inf
    if rank < len(variables):
        return ClosedSolveResult(
            "underdetermined", None, rank, len(variables), condition, condition > ILL_CONDITIONED
        )
    solution, *_ = np.linalg.lstsq(a, rhs, rcond=RANK_RTOL)
    moments = {s: float(solution[k]) for s, k in index.items()}
    return ClosedSolveResult(
        "solved", moments, rank, len(variables), condition, condition > ILL_CONDITIONED
    )


def level_basis(n: int, k: int) -> list[PauliString]:
    """Identity plus every string of order <= k, in canonical order."""
    if k < 1:
        raise ValueError("level must be at least 1")
    out = [PauliString.identity(n)]
    for order in range(1, min(k, n) + 1):
        for sites in itertools.combinations(range(1, n + 1), order):
            for letters in itertools.product("XYZ", repeat=order):
                x = z = 0
                for site, letter in zip(sites, letters):
                    if letter == "X":
                        x |= 1 << (site - 1)
                    elif letter == "Y":
                        x |= 1 << (site - 1)
                        z |= 1 << (site - 1)
                    else:
                        z |= 1 << (site - 1)
                out.append(PauliString(n, x, z))
    out.sort(key=PauliString.sort_key)
    return out


def moment_matrix(basis: list[PauliString]) -> PsdBlock:
    """Gram-type block M_ij = phase(b_i b_j) <string(b_i b_j)>.

    Strings are self-adjoint, so b_i^dag b_j reduces through the Pauli
    rules to a phase times a single string; the diagonal is identically
    one.  Every string appearing in an entry joins the variable set.
    """
    if not basis:
        raise ValueError("empty moment-matrix basis")
    if len(set(basis)) != len(basis):
        raise ValueError("moment-matrix basis contains duplicates")
    d = len(basis)
    raw: dict[PauliString, list[tuple[int, int, complex]]] = {}
    for i in range(d):
        for j in range(i, d):
            phase, string = multiply(basis[i], basis[j])
            raw.setdefault(string, []).append((i, j, phase.value))
    return PsdBlock(dim=d, entries=_fold_upper(raw), label=f"moment[{d}]")


def _subset_strings(n: int, sites: tuple[int, ...]):
    for letters in itertools.product("IXYZ", repeat=len(sites)):
        x = z = 0
        for site, letter in zip(sites, letters):
            bit = 1 << (site - 1)
            if letter == "X":
                x |= bit
            elif letter == "Y":
                x |= bit
                z |= bit
            elif letter == "Z":
                z |= bit
        yield PauliString(n, x, z), letters


_LOCAL_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def reduced_density_blocks(
    n: int, subsets: list[tuple[int, ...]], m_max: int = 6
) -> list[PsdBlock]:
    """Reduced density matrices on site subsets, as PSD linear forms.

    rho_S = 2^-m sum_P <P> mat(P) over the 4^m strings supported on S;
    Hermitian with unit trace by construction.
    """
    blocks = []
    for subset in subsets:
        sites = tuple(subset)
        if len(set(sites)) != len(sites):
            raise ValueError(f"duplicate sites in subset {subset}")
        if any(not 1 <= s <= n for s in sites):
            raise ValueError(f"subset {subset} out of range 1..{n}")
        m = len(sites)
        if m > m_max:
            raise ValueError(f"subset of size {m} exceeds the limit {m_max}")
        scale = 2.0**-m
        raw: dict[PauliString, list[tuple[int, int, complex]]] = {}
        for string, letters in _subset_strings(n, sites):
            mat = np.array([[scale]], dtype=complex)
            for letter in letters:
                mat = np.kron(mat, _LOCAL_MATS[letter])
            ii, jj = np.nonzero(mat)
            positions = raw.setdefault(string, [])
            for i, j in zip(ii, jj):
                if i <= j:
                    positions.append((int(i), int(j), complex(mat[i, j])))
        blocks.append(
            PsdBlock(dim=2**m, entries=_fold_upper(raw), label=f"reduced{sites}")
        )
    return blocks


# -- symmetries --------------------------------------------------------

def _check_permutation(perm: tuple[int, ...], n: int) -> None:
    if len(perm) != n or sorted(perm) != list(range(1, n + 1)):
        raise ValueError(f"{perm} is not a permutation of 1..{n}")


def validate_symmetry(
    model: LindbladModel,
    perm: tuple[int, ...],
    sample: list[PauliString] | None = None,
) -> None:
    """Check that the permutation action commutes with the adjoint generator.

    Tested on a deterministic sample of strings (all single-site letters
    up to a cap, plus nearest-site pairs); raises ``SymmetryError`` with
    a counterexample string on failure.
    """
    _check_permutation(perm, model.n)
    if sample is None:
        sample = []
        for site in range(1, min(model.n, 16) + 1):
            for letter in "XYZ":
                sample.append(PauliString.single(model.n, site, letter))
        for site in range(1, min(model.n - 1, 8) + 1):
            a = PauliString.single(model.n, site, "Z")
            b = PauliString.single(model.n, site + 1, "Z")
            _, pair = multiply(a, b)
            sample.append(pair)
    for string in sample:
        lhs = adjoint_apply(model, PauliPolynomial(model.n, {string.permute(perm): 1.0}))
        rhs = adjoint_apply(model, PauliPolynomial(model.n, {string: 1.0}))
        rhs = PauliPolynomial(
            model.n, {s.permute(perm): c for s, c in rhs.terms.items()}, _trusted=True
        )
        if not (lhs - rhs).simplify(1e-9).is_zero():
            raise SymmetryError(
                f"permutation {perm} does not commute with the generator; "
                f"counterexample string {string.format() or 'I'!r}"
            )


def orbit_representatives(
    generators: list[tuple[int, ...]], strings
) -> dict[PauliString, PauliString]:
    """Map each string to its orbit's canonically smallest present member.

    Orbits of the group generated by the permutations are explored by
    breadth-first closure, so members connected only through images
    outside the given set still land in one orbit.
    """
    present = set(strings)
    rep: dict[PauliString, PauliString] = {}
    for string in sorted(present, key=PauliString.sort_key):
        if string in rep:
            continue
        orbit = [string]
        seen = {string}
        k = 0
        while k < len(orbit):
            current = orbit[k]
            k += 1
            for perm in generators:
                image = current.permute(perm)
                if image not in seen:
                    seen.add(image)
                    orbit.append(image)
        members = sorted((s for s in orbit if s in present), key=PauliString.sort_key)
        for member in members:
            rep[member] = members[0]
    return rep


def symmetry_constraints(
    model: LindbladModel,
    generators: list[tuple[int, ...]],
    strings,
) -> list[LinearConstraint]:
    """Orbit equalities <P> = <g(P)> over the given string set.

    Within each orbit, every member present in ``strings`` is equated to
    the canonically smallest present member; constraints are
    deduplicated by orbit.
    """
    for perm in generators:
        validate_symmetry(model, perm)
    rep = orbit_representatives(generators, strings)
    out: list[LinearConstraint] = []
    for string in sorted(rep, key=PauliString.sort_key):
        other = rep[string]
        if string is not other and string != other and not string.is_identity():
            out.append(LinearConstraint({other: 1.0, string: -1.0}))
    return out


# -- text serialization ------------------------------------------------

def constraints_to_text(constraints: list[LinearConstraint]) -> str:
    """One constraint per line: ``coeff * string`` pairs joined by " + "."""
    lines = []
    for constraint in constraints:
        parts = [
            f"{coeff!r} {string.format() or 'I'}"
            for string, coeff in sorted(
                constraint.coeffs.items(), key=lambda kv: kv[0].sort_key()
            )
        ]
        lines.append(" + ".join(parts))
    return "\n".join(lines) + "\n"


def constraints_from_text(text: str, n: int) -> list[LinearConstraint]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        coeffs = {}
        for part in line.split(" + "):
            coeff_text, _, string_text = part.partition(" ")
            string_text = string_text.strip()
            string = (
                PauliString.identity(n)
                if string_text == "I"
                else PauliString.parse(string_text, n)
            )
            coeffs[string] = float(coeff_text)
        out.append(LinearConstraint(coeffs))
    return out
