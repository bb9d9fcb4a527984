"""Assembly of the moment relaxation over real variables.

``assemble`` turns a model + Hermitian observable + budgets into a
``RelaxationProblem``: canonical variable list (the identity moment is
eliminated, pinned to one), linear equalities, real symmetric PSD blocks
(complex Hermitian forms go through the [[Re, -Im], [Im, Re]] embedding)
and optional unit box bounds as a safety net against unbounded moments.

The module also speaks sparse SDPA (".dat-s"): equalities are split into
paired inequalities in a diagonal block, box bounds become a nonnegative
diagonal block, PSD blocks are written verbatim, and a sidecar file maps
variable indices to Pauli strings so that export -> import reproduces the
problem bit-exactly.  The exact grammar emitted is documented on
``export_sdpa``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import constraints as cns
from .lindblad import LindbladModel
from .pauli import PauliPolynomial, PauliString

__all__ = [
    "AssemblyOptions",
    "RealBlock",
    "RelaxationProblem",
    "assemble",
    "embed_complex_block",
    "export_sdpa",
    "import_sdpa",
]


@dataclass(frozen=True)
class AssemblyOptions:
    """Budgets for each constraint family of the relaxation.

    ``moment_size`` requests an "auto" moment matrix over the identity
    plus the first strings of the harvested set in canonical order;
    ``moment_level`` requests the full level-k basis instead (mutually
    exclusive).  ``reduction_subsets`` lists the site subsets whose
    reduced density matrices are constrained PSD.  ``safety_net`` keeps
    every moment inside [-1, 1].
    """

    linear_budget: int = 1000
    moment_size: int = 0
    moment_level: int = 0
    reduction_subsets: tuple[tuple[int, ...], ...] = ()
    symmetry_generators: tuple[tuple[int, ...], ...] = ()
    safety_net: bool = True

    def __post_init__(self) -> None:
        if self.moment_size and self.moment_level:
            raise ValueError("moment_size and moment_level are mutually exclusive")


@dataclass
class RealBlock:
    """dim x dim real symmetric linear form; var index -1 is the constant."""

    dim: int
    var_idx: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    label: str = ""

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        weights = np.where(self.var_idx < 0, 1.0, x[np.maximum(self.var_idx, 0)])
        np.add.at(out, (self.rows, self.cols), self.vals * weights)
        mask = self.rows != self.cols
        np.add.at(
            out,
            (self.cols[mask], self.rows[mask]),
            (self.vals * weights)[mask],
        )
        return out


@dataclass
class RelaxationProblem:
    """Moment SDP over real variables, one per non-identity Pauli string."""

    n: int
    variables: tuple[PauliString, ...]
    objective: np.ndarray
    objective_const: float
    eq_matrix: sp.csr_matrix
    eq_rhs: np.ndarray
    blocks: tuple[RealBlock, ...]
    box: bool
    info: dict = field(default_factory=dict)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_equalities(self) -> int:
        return self.eq_matrix.shape[0]

    def variable_index(self) -> dict[PauliString, int]:
        return {s: k for k, s in enumerate(self.variables)}

    def trivial_range(self) -> tuple[float, float]:
        """Objective range implied by the box alone (the "trivial bounds")."""
        span = float(np.abs(self.objective).sum())
        return self.objective_const - span, self.objective_const + span

    def equality_residuals(self, x: np.ndarray) -> np.ndarray:
        if self.n_equalities == 0:
            return np.zeros(0)
        return np.asarray(self.eq_matrix @ x - self.eq_rhs)

    def block_min_eigenvalues(self, x: np.ndarray) -> list[float]:
        return [float(np.linalg.eigvalsh(b.evaluate(x))[0]) for b in self.blocks]

    def moment_vector(self, moments: dict[PauliString, float]) -> np.ndarray:
        return np.array([moments[s] for s in self.variables])

    def fingerprint(self) -> str:
        """Hash of the full problem data, stable across runs."""
        h = hashlib.sha256()
        h.update(f"n={self.n};box={self.box};const={self.objective_const!r}\n".encode())
        for k, s in enumerate(self.variables):
            h.update(f"v{k}={s.format()}\n".encode())
        h.update(np.ascontiguousarray(self.objective).tobytes())
        eq = self.eq_matrix.tocoo()
        for r, c, v in zip(eq.row, eq.col, eq.data):
            h.update(f"e{r},{c}={v!r}\n".encode())
        h.update(np.ascontiguousarray(self.eq_rhs).tobytes())
        for b in self.blocks:
            h.update(f"b{b.dim}\n".encode())
            order = np.lexsort((b.cols, b.rows, b.var_idx))
            for k in order:
                h.update(
                    f"{b.var_idx[k]},{b.rows[k]},{b.cols[k]}={b.vals[k]!r}\n".encode()
                )
        return h.hexdigest()


def embed_complex_block(
    block: cns.PsdBlock, index: dict[PauliString, int]
) -> RealBlock:
    """[[Re, -Im], [Im, Re]] embedding of a Hermitian form, PSD iff it is.

    ``index`` maps strings to variable positions; the identity maps to
    the constant slot (-1).
    """
    d = block.dim
    var_idx, rows, cols, vals = [], [], [], []

    def put(v: int, r: int, c: int, val: float) -> None:
        if val != 0.0:
            var_idx.append(v)
            rows.append(r)
            cols.append(c)
            vals.append(val)

    for string, positions in block.entries.items():
        v = -1 if string.is_identity() else index[string]
        for i, j, coeff in positions:
            if i == j and abs(coeff.imag) > 1e-12:
                raise ValueError("diagonal of a Hermitian form must be real")
            put(v, i, j, coeff.real)
            put(v, d + i, d + j, coeff.real)
            if i != j:
                put(v, i, d + j, -coeff.imag)
                put(v, j, d + i, coeff.imag)
    return RealBlock(
        dim=2 * d,
        var_idx=np.asarray(var_idx, dtype=np.int64),
        rows=np.asarray(rows, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        vals=np.asarray(vals, dtype=float),
        label=block.label,
    )


def _equalities_to_sparse(
    constraint_list, index: dict[PauliString, int], nvar: int
) -> tuple[sp.csr_matrix, np.ndarray]:
    rows, cols, vals = [], [], []
    rhs = np.zeros(len(constraint_list))
    for r, constraint in enumerate(constraint_list):
        for string, coeff in constraint.coeffs.items():
            if string.is_identity():
                rhs[r] -= coeff
            else:
                rows.append(r)
                cols.append(index[string])
                vals.append(coeff)
    matrix = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(constraint_list), nvar)
    )
    return matrix, rhs


def assemble(
    model: LindbladModel,
    observable: PauliPolynomial,
    options: AssemblyOptions,
) -> RelaxationProblem:
    """Build the full relaxation for one model + observable + budgets."""
    if observable.n != model.n:
        raise ValueError("observable site count differs from model's")
    obs_coeffs = observable.real_coefficients()  # raises if not Hermitian
    seeds = [s for s in obs_coeffs if not s.is_identity()]
    if not seeds:
        raise ValueError("observable has no non-identity strings: nothing to bound")

    report = cns.auto_generate(model, seeds, budget=options.linear_budget)
    harvested = set(report.strings)

    complex_blocks: list[cns.PsdBlock] = []
    if options.moment_level:
        basis = cns.level_basis(model.n, options.moment_level)
        complex_blocks.append(cns.moment_matrix(basis))
    elif options.moment_size:
        identity = PauliString.identity(model.n)
        pool = [s for s in report.strings if not s.is_identity()]
        basis = [identity] + pool[: max(options.moment_size - 1, 0)]
        complex_blocks.append(cns.moment_matrix(basis))
    if options.reduction_subsets:
        complex_blocks.extend(
            cns.reduced_density_blocks(model.n, list(options.reduction_subsets))
        )
    for block in complex_blocks:
        harvested.update(block.entries)

    sym_constraints: list[cns.LinearConstraint] = []
    if options.symmetry_generators:
        sym_constraints = cns.symmetry_constraints(
            model, list(options.symmetry_generators), harvested
        )

    variables = tuple(
        sorted((s for s in harvested if not s.is_identity()), key=PauliString.sort_key)
    )
    if not variables:
        raise ValueError("assembled problem has no variables")
    index = {s: k for k, s in enumerate(variables)}

    objective = np.zeros(len(variables))
    const = 0.0
    for string, coeff in obs_coeffs.items():
        if string.is_identity():
            const += coeff
        else:
            objective[index[string]] = coeff

    all_equalities = list(report.constraints) + sym_constraints
    eq_matrix, eq_rhs = _equalities_to_sparse(all_equalities, index, len(variables))
    blocks = tuple(embed_complex_block(b, index) for b in complex_blocks)

    info = {
        "auto_constraints": report.n_constraints,
        "cycle_closed": report.cycle_closed,
        "symmetry_constraints": len(sym_constraints),
        "psd_blocks": [(b.label, b.dim) for b in blocks],
        "reduction_blocks": len(options.reduction_subsets),
    }
    return RelaxationProblem(
        n=model.n,
        variables=variables,
        objective=objective,
        objective_const=const,
        eq_matrix=eq_matrix,
        eq_rhs=eq_rhs,
        blocks=blocks,
        box=options.safety_net,
        info=info,
    )


# -- sparse SDPA exchange ------------------------------------------------

SDPA_GRAMMAR = """\
Sparse SDPA (".dat-s") layout emitted by export_sdpa:

    line 1: m                      number of variables
    line 2: nblocks
    line 3: block sizes            negative size = diagonal block
    line 4: objective c_1 .. c_m
    rest:   k b i j v              entry (i, j) = v of matrix F_k in
                                   block b; k = 0 is F_0; 1-based; i <= j

semantics: minimize c.x subject to sum_k x_k F_k - F_0 >= 0 (blockwise).

Block order: [equalities as +/- inequality pairs, diagonal 2*m_eq]
[box bounds x_v + 1 >= 0, 1 - x_v >= 0, diagonal 2*m, when present]
[PSD blocks verbatim].  Floats are printed with repr() so parsing the
file reproduces each coefficient bit-exactly.

The sidecar file (path + ".vars") stores "# key value" headers
(sites, equalities, box, objective_constant) followed by one line per
variable: index<TAB>pauli-string (empty string = identity).
"""


def export_sdpa(problem: RelaxationProblem, path: str) -> str:
    """Write ``problem`` to ``path`` (.dat-s) plus a ``.vars`` sidecar.

    Returns the sidecar path.  See ``SDPA_GRAMMAR`` for the exact format.
    """
    m = problem.n_variables
    entries: list[tuple[int, int, int, int, float]] = []  # (k, block, i, j, v)
    sizes: list[int] = []

    block_no = 0
    if problem.n_equalities:
        block_no += 1
        sizes.append(-2 * problem.n_equalities)
        eq = problem.eq_matrix.tocoo()
        for r, c, v in zip(eq.row, eq.col, eq.data):
            entries.append((c + 1, block_no, 2 * r + 1, 2 * r + 1, v))
            entries.append((c + 1, block_no, 2 * r + 2, 2 * r + 2, -v))
        for r, v in enumerate(problem.eq_rhs):
            if v != 0.0:
                entries.append((0, block_no, 2 * r + 1, 2 * r + 1, v))
                entries.append((0, block_no, 2 * r + 2, 2 * r + 2, -v))
    if problem.box:
        block_no += 1
        sizes.append(-2 * m)
        for v in range(m):
            entries.append((v + 1, block_no, 2 * v + 1, 2 * v + 1, 1.0))
            entries.append((0, block_no, 2 * v + 1, 2 * v + 1, -1.0))
            entries.append((v + 1, block_no, 2 * v + 2, 2 * v + 2, -1.0))
            entries.append((0, block_no, 2 * v + 2, 2 * v + 2, -1.0))
    for block in problem.blocks:
        block_no += 1
        sizes.append(block.dim)
        for k in range(block.var_idx.size):
            var = int(block.var_idx[k])
            i, j, v = int(block.rows[k]), int(block.cols[k]), float(block.vals[k])
            # F_0 enters as sum x F - F0 >= 0, so constants flip sign
            entries.append((var + 1 if var >= 0 else 0, block_no, i + 1, j + 1, v if var >= 0 else -v))

    with open(path, "w") as fh:
        fh.write('"steadybounds moment-relaxation export\n')
        fh.write(f"{m}\n{block_no}\n")
        fh.write(" ".join(str(s) for s in sizes) + "\n")
        fh.write(" ".join(repr(float(c)) for c in problem.objective) + "\n")
        for k, b, i, j, v in entries:
            fh.write(f"{k} {b} {i} {j} {float(v)!r}\n")

    sidecar = path + ".vars"
    with open(sidecar, "w") as fh:
        fh.write(f"# sites {problem.n}\n")
        fh.write(f"# equalities {problem.n_equalities}\n")
        fh.write(f"# box {int(problem.box)}\n")
        fh.write(f"# objective_constant {problem.objective_const!r}\n")
        for k, s in enumerate(problem.variables):
            fh.write(f"{k}\t{s.format()}\n")
    return sidecar


def import_sdpa(path: str) -> RelaxationProblem:
    """Rebuild a RelaxationProblem from export_sdpa output (bit-exact)."""
    sidecar = path + ".vars"
    meta: dict[str, str] = {}
    var_lines: list[tuple[int, str]] = []
    with open(sidecar) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                _, key, value = line.split(" ", 2)
                meta[key] = value
            elif line:
                idx, _, text = line.partition("\t")
                var_lines.append((int(idx), text))
    n = int(meta["sites"])
    m_eq = int(meta["equalities"])
    box = bool(int(meta["box"]))
    const = float(meta["objective_constant"])
    var_lines.sort()
    variables = tuple(PauliString.parse(text, n) for _, text in var_lines)

    with open(path) as fh:
        lines = [
            ln for ln in (raw.strip() for raw in fh) if ln and ln[0] not in "\"*"
        ]
    m = int(lines[0])
    nblocks = int(lines[1])
    sizes = [int(tok) for tok in lines[2].split()]
    objective = np.array([float(tok) for tok in lines[3].split()])
    if m != len(variables):
        raise ValueError("sidecar variable count differs from the SDPA header")
    if len(sizes) != nblocks:
        raise ValueError("block-size line does not match the block count")

    eq_block = 1 if m_eq else 0
    box_block = (eq_block + 1) if box else 0
    first_psd = max(eq_block, box_block) + 1
    psd_dims = sizes[first_psd - 1 :]

    eq_rows: dict[tuple[int, int], float] = {}
    rhs = np.zeros(m_eq)
    psd_raw: list[dict] = [
        {"var": [], "row": [], "col": [], "val": []} for _ in psd_dims
    ]
    for line in lines[4:]:
        k_s, b_s, i_s, j_s, v_s = line.split()
        k, b, i, j = int(k_s), int(b_s), int(i_s), int(j_s)
        v = float(v_s)
        if b == eq_block:
            if i % 2 == 0:
                continue  # the "-" half of the pair mirrors the "+" half
            r = (i - 1) // 2
            if k == 0:
                rhs[r] = v
            else:
                eq_rows[(r, k - 1)] = v
        elif b == box_block:
            continue  # implied by the box flag
        else:
            slot = psd_raw[b - first_psd]
            slot["var"].append(k - 1)  # -1 becomes the constant slot
            slot["row"].append(i - 1)
            slot["col"].append(j - 1)
            slot["val"].append(v if k != 0 else -v)

    if eq_rows or m_eq:
        items = sorted(eq_rows.items())
        rows = [r for (r, _), _ in items]
        cols = [c for (_, c), _ in items]
        vals = [v for _, v in items]
        eq_matrix = sp.csr_matrix((vals, (rows, cols)), shape=(m_eq, m))
    else:
        eq_matrix = sp.csr_matrix((0, m))

    blocks = []
    for dim, slot in zip(psd_dims, psd_raw):
        blocks.append(
            RealBlock(
                dim=dim,
                var_idx=np.asarray(slot["var"], dtype=np.int64),
                rows=np.asarray(slot["row"], dtype=np.int64),
                cols=np.asarray(slot["col"], dtype=np.int64),
                vals=np.asarray(slot["val"], dtype=float),
            )
        )
    return RelaxationProblem(
        n=n,
        variables=variables,
        objective=objective,
        objective_const=const,
        eq_matrix=eq_matrix,
        eq_rhs=rhs,
        blocks=tuple(blocks),
        box=box,
        info={"imported_from": path},
    )
