"""Built-in benchmark families and their observables.

Spin conventions (fixed, and relied on by sign-sensitive tests):

* |0> is the +1 eigenstate of Z.
* sigma_+ = (X + iY)/2 = |0><1| and sigma_- = (X - iY)/2 = |1><0|, so
  sigma_+ sigma_- = (I + Z)/2 projects on |0>: |0> is the *excited*
  level of an on-site term eps * sigma_+ sigma_-, and the decay operator
  sigma_- drives a spin to the Z = -1 ground state |1>.  The pure-decay
  chain therefore has magnetization -1, which is what makes the
  twelve-site benchmark magnetization come out negative.
* Natural units: hbar = k_B = 1.

Thermal dissipators attach sigma_+ at rate gamma * n_B (absorption) and
sigma_- at rate gamma * (1 + n_B) (emission), with the Bose factor
n_B = 1 / (exp(eps / T) - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .lindblad import LindbladModel
from .pauli import PauliPolynomial, PauliString

__all__ = [
    "TwoQubitParams",
    "ChainParams",
    "LadderParams",
    "two_qubit_bath",
    "heat_current_observable",
    "chain_between_baths",
    "periodic_tfi_decay",
    "magnetization",
    "ladder_2xL",
    "ring_translation",
    "ring_reflection",
    "ring_windows",
    "path_windows",
    "ladder_windows",
    "ladder_reflection",
    "all_subsets",
]


def _bose(eps: float, temp: float) -> float:
    if temp <= 0:
        raise ValueError(f"temperature must be positive, got {temp}")
    if eps <= 0:
        raise ValueError(f"energy gap must be positive, got {eps}")
    return 1.0 / (math.exp(eps / temp) - 1.0)


def sigma_plus(n: int, site: int) -> PauliPolynomial:
    return PauliPolynomial(
        n,
        {
            PauliString.single(n, site, "X"): 0.5,
            PauliString.single(n, site, "Y"): 0.5j,
        },
    )


def sigma_minus(n: int, site: int) -> PauliPolynomial:
    return PauliPolynomial(
        n,
        {
            PauliString.single(n, site, "X"): 0.5,
            PauliString.single(n, site, "Y"): -0.5j,
        },
    )


def _thermal_dissipators(n: int, site: int, eps: float, gamma: float, temp: float):
    nb = _bose(eps, temp)
    return [
        (sigma_plus(n, site), gamma * nb),
        (sigma_minus(n, site), gamma * (1.0 + nb)),
    ]


def _hopping(n: int, i: int, j: int, g: float) -> dict[PauliString, float]:
    # g (s+_i s-_j + s-_i s+_j) = (g/2)(X_i X_j + Y_i Y_j)
    xx = PauliString.parse(f"X{i} X{j}", n)
    yy = PauliString.parse(f"Y{i} Y{j}", n)
    return {xx: g / 2.0, yy: g / 2.0}


def _number_term(n: int, site: int, eps: float) -> dict[PauliString, float]:
    # eps s+ s- = (eps/2)(I + Z)
    return {
        PauliString.identity(n): eps / 2.0,
        PauliString.single(n, site, "Z"): eps / 2.0,
    }


def _merge(target: dict, extra: dict) -> None:
    for key, val in extra.items():
        target[key] = target.get(key, 0.0) + val


# -- two-qubit heat machine and its chain extension ----------------------

@dataclass(frozen=True)
class TwoQubitParams:
    """Hot/cold qubit pair: gaps, coupling, bath rates and temperatures."""

    eps_h: float = 1.0
    eps_c: float = 1.0
    g: float = 0.1
    gamma_h: float = 0.1
    gamma_c: float = 0.1
    temp_h: float = 2.0
    temp_c: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma_h < 0 or self.gamma_c < 0:
            raise ValueError("bath couplings must be non-negative")
        _bose(self.eps_h, self.temp_h)
        _bose(self.eps_c, self.temp_c)

    def rates(self, side: str) -> tuple[float, float]:
        """(absorption, emission) rates for the hot or cold bath."""
        eps, gamma, temp = {
            "h": (self.eps_h, self.gamma_h, self.temp_h),
            "c": (self.eps_c, self.gamma_c, self.temp_c),
        }[side]
        nb = _bose(eps, temp)
        return gamma * nb, gamma * (1.0 + nb)


def chain_between_baths(n: int, params: TwoQubitParams) -> LindbladModel:
    """Hopping chain with a hot bath on site 1 and a cold bath on site n.

    Interior sites appear only in the hopping terms; for n = 2 this is
    exactly the two-qubit heat machine.
    """
    if n < 2:
        raise ValueError("chain needs at least two sites")
    h: dict[PauliString, float] = {}
    _merge(h, _number_term(n, 1, params.eps_h))
    _merge(h, _number_term(n, n, params.eps_c))
    for i in range(1, n):
        _merge(h, _hopping(n, i, i + 1, params.g))
    diss = _thermal_dissipators(n, 1, params.eps_h, params.gamma_h, params.temp_h)
    diss += _thermal_dissipators(n, n, params.eps_c, params.gamma_c, params.temp_c)
    return LindbladModel(n, PauliPolynomial(n, h), diss)


def two_qubit_bath(params: TwoQubitParams) -> LindbladModel:
    """The two-qubit hot/cold heat machine."""
    return chain_between_baths(2, params)


def heat_current_observable(params: TwoQubitParams, n: int = 2) -> PauliPolynomial:
    """Steady-state heat current J = Q_hot - Q_cold as a Pauli polynomial.

    Constant plus Z terms on the bath-coupled end sites:
    (eps_h/2)(g_h^+ - g_h^-) - (eps_c/2)(g_c^+ - g_c^-)
    - (eps_h/2)(g_h^+ + g_h^-) <Z_1> + (eps_c/2)(g_c^+ + g_c^-) <Z_n>.
    """
    gh_p, gh_m = params.rates("h")
    gc_p, gc_m = params.rates("c")
    const = 0.5 * params.eps_h * (gh_p - gh_m) - 0.5 * params.eps_c * (gc_p - gc_m)
    return PauliPolynomial(
        n,
        {
            PauliString.identity(n): const,
            PauliString.single(n, 1, "Z"): -0.5 * params.eps_h * (gh_p + gh_m),
            PauliString.single(n, n, "Z"): +0.5 * params.eps_c * (gc_p + gc_m),
        },
    )


# -- periodic transverse-Ising chain with uniform decay ------------------

@dataclass(frozen=True)
class ChainParams:
    """Periodic ZZ chain in a transverse field with per-site spin decay."""

    n: int
    coupling: float = 0.5       # J, the ZZ strength
    field: float = 0.5          # eta, the transverse X field
    decay: float = 1.0          # gamma

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError("a periodic ring needs at least three sites")
        if self.decay < 0:
            raise ValueError("decay rate must be non-negative")


def periodic_tfi_decay(params: ChainParams) -> LindbladModel:
    """H = J sum Z_i Z_(i+1) (periodic) + eta sum X_i, decay on every site.

    The jump on site k is sigma_-, i.e. (sqrt(gamma)/2)(X_k - i Y_k) at
    unit rate, stored here as the normalized sigma_- at rate gamma.
    """
    n = params.n
    h: dict[PauliString, float] = {}
    for i in range(1, n + 1):
        j = i % n + 1
        _merge(h, {PauliString.parse(f"Z{i} Z{j}", n): params.coupling})
        _merge(h, {PauliString.single(n, i, "X"): params.field})
    diss = [(sigma_minus(n, k), params.decay) for k in range(1, n + 1)]
    return LindbladModel(n, PauliPolynomial(n, h), diss)


def magnetization(n: int) -> PauliPolynomial:
    """Average magnetization (1/n) sum_i Z_i."""
    return PauliPolynomial(
        n, {PauliString.single(n, i, "Z"): 1.0 / n for i in range(1, n + 1)}
    )


# -- two-leg ladder between baths ----------------------------------------

@dataclass(frozen=True)
class LadderParams:
    """2 x L hopping ladder with thermal baths on the four corner sites.

    The paper leaves its numeric benchmark values unpublished; these
    defaults mirror the two-qubit parameter style and are recorded in
    run metadata by the CLI.  Sites are numbered leg-major: 1..L on the
    top leg, L+1..2L on the bottom leg; rung r joins r and L + r.
    """

    rungs: int
    eps: float = 1.0
    g: float = 0.1
    gamma_h: float = 0.1
    gamma_c: float = 0.1
    temp_h: float = 2.0
    temp_c: float = 1.0

    def __post_init__(self) -> None:
        if self.rungs < 2:
            raise ValueError("ladder needs at least two rungs")
        if self.gamma_h < 0 or self.gamma_c < 0:
            raise ValueError("bath couplings must be non-negative")
        _bose(self.eps, self.temp_h)
        _bose(self.eps, self.temp_c)

    @property
    def n(self) -> int:
        return 2 * self.rungs


def ladder_edges(rungs: int) -> list[tuple[int, int]]:
    """Rail and rung bonds of the 2 x L ladder (leg-major numbering)."""
    edges = []
    for r in range(1, rungs):
        edges.append((r, r + 1))                    # top rail
        edges.append((rungs + r, rungs + r + 1))    # bottom rail
    for r in range(1, rungs + 1):
        edges.append((r, rungs + r))                # rung
    return edges


def ladder_2xL(params: LadderParams) -> LindbladModel:
    """Two coupled chains; hot bath on the left ends, cold on the right.

    On-site terms eps * s+ s- on every site, hopping g on every rail and
    rung bond, thermal dissipators only on sites 1, L+1 (hot) and L, 2L
    (cold).
    """
    n = params.n
    rungs = params.rungs
    h: dict[PauliString, float] = {}
    for i in range(1, n + 1):
        _merge(h, _number_term(n, i, params.eps))
    for i, j in ladder_edges(rungs):
        _merge(h, _hopping(n, i, j, params.g))
    diss = []
    for site in (1, rungs + 1):
        diss += _thermal_dissipators(n, site, params.eps, params.gamma_h, params.temp_h)
    for site in (rungs, 2 * rungs):
        diss += _thermal_dissipators(n, site, params.eps, params.gamma_c, params.temp_c)
    return LindbladModel(n, PauliPolynomial(n, h), diss)


# -- geometry helpers ------------------------------------------------------

def ring_translation(n: int) -> tuple[int, ...]:
    """Site i -> i+1 (mod n)."""
    return tuple(i % n + 1 for i in range(1, n + 1))


def ring_reflection(n: int) -> tuple[int, ...]:
    """Site i -> n + 2 - i (mod n), fixing site 1."""
    return tuple(1 if i == 1 else n + 2 - i for i in range(1, n + 1))


def ring_windows(n: int, m: int) -> list[tuple[int, ...]]:
    """All n contiguous windows of m sites around the ring."""
    if not 1 <= m <= n:
        raise ValueError("window size out of range")
    return [tuple((start + k) % n + 1 for k in range(m)) for start in range(n)]


def path_windows(n: int, m: int) -> list[tuple[int, ...]]:
    """The n - m + 1 contiguous windows of m sites on an open chain."""
    if not 1 <= m <= n:
        raise ValueError("window size out of range")
    return [tuple(range(start, start + m)) for start in range(1, n - m + 2)]


def ladder_windows(rungs: int, window_rungs: int = 2) -> list[tuple[int, ...]]:
    """Windows of consecutive rungs (both legs), e.g. 2 rungs = 4 sites."""
    if not 1 <= window_rungs <= rungs:
        raise ValueError("window size out of range")
    out = []
    for start in range(1, rungs - window_rungs + 2):
        sites = []
        for r in range(start, start + window_rungs):
            sites += [r, rungs + r]
        out.append(tuple(sites))
    return out


def ladder_reflection(rungs: int) -> tuple[int, ...]:
    """Swap the two legs: i <-> L + i."""
    top = tuple(rungs + r for r in range(1, rungs + 1))
    bottom = tuple(range(1, rungs + 1))
    return top + bottom


def all_subsets(n: int, m: int) -> list[tuple[int, ...]]:
    """All C(n, m) site subsets of size m."""
    from itertools import combinations

    return [tuple(c) for c in combinations(range(1, n + 1), m)]
