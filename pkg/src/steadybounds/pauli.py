"""Exact symbolic algebra of Pauli strings and Pauli polynomials.

Strings are stored phase-free (the stored operator is always the plain
tensor product of I/X/Y/Z letters); every phase produced by the algebra is
returned separately or folded into polynomial coefficients.  Internally a
string on ``n`` sites is a pair of packed integers ``(x, z)`` with bit
``k`` describing site ``k+1``: (0,0)=I, (1,0)=X, (1,1)=Y, (0,1)=Z.  This
keeps products, commutation checks and hashing O(1) in the number of
machine words even for a few hundred sites.
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

__all__ = [
    "EPS_ZERO",
    "Phase",
    "PauliString",
    "PauliPolynomial",
    "multiply",
    "commutator",
    "ParseError",
]

# Coefficients below this magnitude are dropped by simplify(); well under
# solver precision, prevents term-count blowup in iterated products.
EPS_ZERO = 1e-12

_LETTERS = "IXYZ"
# site letter -> (x bit, z bit)
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
# (x, z) -> canonical sort code with I < X < Y < Z
_SORT_CODE = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}

_MAT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_TOKEN_RE = re.compile(r"([A-Za-z])(\d+)$")


class ParseError(ValueError):
    """Raised for malformed Pauli text (bad letter, bad/duplicate site index)."""


class Phase:
    """One of {+1, -1, +i, -i}: the cyclic group of order four.

    Stored as the exponent ``k`` of ``i**k``; multiplication adds
    exponents mod 4.
    """

    __slots__ = ("exponent",)

    _VALUES = (1 + 0j, 1j, -1 + 0j, -1j)

    def __init__(self, exponent: int) -> None:
        self.exponent = exponent & 3

    @classmethod
    def from_value(cls, value: complex) -> "Phase":
        for k, v in enumerate(cls._VALUES):
            if abs(value - v) < 1e-9:
                return cls(k)
        raise ValueError(f"{value!r} is not a fourth root of unity")

    @property
    def value(self) -> complex:
        return self._VALUES[self.exponent]

    def __mul__(self, other: "Phase") -> "Phase":
        return Phase(self.exponent + other.exponent)

    def __neg__(self) -> "Phase":
        return Phase(self.exponent + 2)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Phase):
            return self.exponent == other.exponent
        if isinstance(other, (int, float, complex)):
            return abs(self.value - other) < 1e-9
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Phase", self.exponent))

    def __repr__(self) -> str:
        return ("+1", "+i", "-1", "-i")[self.exponent]


Phase.ONE = Phase(0)
Phase.I = Phase(1)
Phase.MINUS_ONE = Phase(2)
Phase.MINUS_I = Phase(3)


class PauliString:
    """A phase-free tensor product of single-site Pauli letters.

    Immutable and hashable; usable as a dict key and as an SDP variable
    index.  Site indices are 1-based everywhere in the public API.
    """

    __slots__ = ("n", "x", "z", "_hash")

    def __init__(self, n: int, x: int = 0, z: int = 0) -> None:
        if n < 1:
            raise ValueError("site count must be positive")
        self.n = n
        self.x = x
        self.z = z
        self._hash = hash((n, x, z))

    # -- constructors -------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_letters(cls, letters: str | Iterable[str]) -> "PauliString":
        letters = list(letters)
        x = z = 0
        for k, letter in enumerate(letters):
            try:
                xb, zb = _BITS[letter]
            except KeyError:
                raise ParseError(f"unknown Pauli letter {letter!r}") from None
            x |= xb << k
            z |= zb << k
        return cls(len(letters), x, z)

    @classmethod
    def single(cls, n: int, site: int, letter: str) -> "PauliString":
        """The string with ``letter`` on ``site`` and identity elsewhere."""
        if not 1 <= site <= n:
            raise ParseError(f"site {site} out of range 1..{n}")
        try:
            xb, zb = _BITS[letter]
        except KeyError:
            raise ParseError(f"unknown Pauli letter {letter!r}") from None
        return cls(n, xb << (site - 1), zb << (site - 1))

    @classmethod
    def parse(cls, text: str, n: int) -> "PauliString":
        """Parse ``"Z1 X2"``-style text; empty text is the identity.

        Tokens are letter+site with letters in {X, Y, Z}, sites 1..n,
        each site at most once.
        """
        x = z = 0
        seen = set()
        for token in text.split():
            m = _TOKEN_RE.match(token)
            if not m or m.group(1) not in "XYZ":
                raise ParseError(f"bad Pauli token {token!r}")
            letter, site = m.group(1), int(m.group(2))
            if not 1 <= site <= n:
                raise ParseError(f"site {site} out of range 1..{n} in {token!r}")
            if site in seen:
                raise ParseError(f"duplicate site {site} in {text!r}")
            seen.add(site)
            xb, zb = _BITS[letter]
            x |= xb << (site - 1)
            z |= zb << (site - 1)
        return cls(n, x, z)

    # -- structure ----------------------------------------------------

    @property
    def order(self) -> int:
        """Number of non-identity letters."""
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def support(self) -> tuple[int, ...]:
        """1-based sites carrying a non-identity letter."""
        mask = self.x | self.z
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length())
            mask ^= low
        return tuple(out)

    def letter(self, site: int) -> str:
        xb = (self.x >> (site - 1)) & 1
        zb = (self.z >> (site - 1)) & 1
        return _LETTERS[_SORT_CODE[(xb, zb)]]

    def letters(self) -> str:
        return "".join(self.letter(k) for k in range(1, self.n + 1))

    def sort_key(self) -> tuple:
        """Canonical order: (order, per-site letter codes with I<X<Y<Z)."""
        codes = tuple(
            _SORT_CODE[((self.x >> k) & 1, (self.z >> k) & 1)] for k in range(self.n)
        )
        return (self.order, codes)

    def permute(self, perm: tuple[int, ...]) -> "PauliString":
        """Move the letter on site ``i`` to site ``perm[i-1]``."""
        x = z = 0
        mask = self.x | self.z
        while mask:
            low = mask & -mask
            k = low.bit_length() - 1
            t = perm[k] - 1
            x |= ((self.x >> k) & 1) << t
            z |= ((self.z >> k) & 1) << t
            mask ^= low
        return PauliString(self.n, x, z)

    def commutes_with(self, other: "PauliString") -> bool:
        """True iff the strings anticommute on an even number of sites."""
        if self.n != other.n:
            raise ValueError("mismatched site counts")
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    # -- matrices -----------------------------------------------------

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix, site 1 the leftmost tensor factor."""
        out = np.array([[1.0 + 0j]])
        for k in range(1, self.n + 1):
            out = np.kron(out, _MAT[self.letter(k)])
        return out

    def matrix_sparse(self) -> sp.csr_matrix:
        out = sp.identity(1, dtype=complex, format="csr")
        for k in range(1, self.n + 1):
            out = sp.kron(out, sp.csr_matrix(_MAT[self.letter(k)]), format="csr")
        return out

    # -- text ---------------------------------------------------------

    def format(self) -> str:
        """Canonical text form; the identity formats as the empty string."""
        return " ".join(f"{self.letter(k)}{k}" for k in self.support())

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        body = self.format() or "I"
        return f"PauliString({body!r}, n={self.n})"

    # -- dunder plumbing ----------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return self.n == other.n and self.x == other.x and self.z == other.z

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "PauliString") -> bool:
        return self.sort_key() < other.sort_key()

    def __matmul__(self, other: "PauliString") -> "PauliPolynomial":
        phase, string = multiply(self, other)
        return PauliPolynomial(self.n, {string: phase.value})


def _mul_raw(a: PauliString, b: PauliString) -> tuple[int, int, int]:
    """Product of bare strings: (phase exponent of i, x, z).

    Uses Y = i X Z per site: the phase is i^(y(a)+y(b)-y(ab)) times the
    (-1) reordering sign from moving Z letters of ``a`` past X letters
    of ``b``.
    """
    x = a.x ^ b.x
    z = a.z ^ b.z
    k = (
        (a.x & a.z).bit_count()
        + (b.x & b.z).bit_count()
        - (x & z).bit_count()
        + 2 * (a.z & b.x).bit_count()
    )
    return k & 3, x, z


def multiply(a: PauliString, b: PauliString) -> tuple[Phase, PauliString]:
    """Sitewise product ``a * b`` as (phase, phase-free string)."""
    if a.n != b.n:
        raise ValueError(f"mismatched site counts: {a.n} != {b.n}")
    k, x, z = _mul_raw(a, b)
    return Phase(k), PauliString(a.n, x, z)


def commutator(a: PauliString, b: PauliString) -> "PauliPolynomial":
    """``ab - ba`` as a polynomial (zero when the strings commute)."""
    if a.n != b.n:
        raise ValueError(f"mismatched site counts: {a.n} != {b.n}")
    if a.commutes_with(b):
        return PauliPolynomial(a.n)
    k, x, z = _mul_raw(a, b)
    return PauliPolynomial(a.n, {PauliString(a.n, x, z): 2 * Phase._VALUES[k]})


_NUMBER_RE = re.compile(r"^[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?$")


class PauliPolynomial:
    """A complex-weighted sum of Pauli strings on a shared site count.

    Represents Hamiltonians, jump operators, observables and the outputs
    of the adjoint Lindblad map.  Arithmetic (+, -, scalar *, @ for the
    operator product) simplifies as it goes: duplicate strings merge and
    coefficients below EPS_ZERO are dropped.
    """

    __slots__ = ("n", "terms")

    def __init__(
        self,
        n: int,
        terms: Mapping[PauliString, complex] | None = None,
        *,
        _trusted: bool = False,
    ) -> None:
        self.n = n
        if terms is None:
            self.terms = {}
        elif _trusted:
            self.terms = dict(terms)
        else:
            self.terms = {}
            for string, coeff in terms.items():
                if string.n != n:
                    raise ValueError("term site count differs from polynomial's")
                c = complex(coeff)
                if abs(c) >= EPS_ZERO:
                    self.terms[string] = self.terms.get(string, 0) + c

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "PauliPolynomial":
        return cls(n)

    @classmethod
    def identity(cls, n: int, coeff: complex = 1.0) -> "PauliPolynomial":
        return cls(n, {PauliString.identity(n): coeff})

    @classmethod
    def from_string(cls, text: str, n: int, coeff: complex = 1.0) -> "PauliPolynomial":
        return cls(n, {PauliString.parse(text, n): coeff})

    @classmethod
    def parse(cls, text: str, n: int) -> "PauliPolynomial":
        """Parse e.g. ``"0.5 Z1 + 0.5 Z2 - 0.25 X1 X2 + 1.5"``.

        Terms are separated by ``+``/``-`` surrounded by whitespace (a
        leading sign may be attached); each term is an optional real
        coefficient followed by Pauli tokens, a bare number being a
        multiple of the identity.
        """
        text = text.strip()
        if not text:
            raise ParseError("empty polynomial")
        pieces = re.split(r"\s+([+-])\s+", text)
        terms: dict[PauliString, complex] = {}
        sign = 1.0
        for piece in pieces:
            if piece == "+":
                sign = 1.0
                continue
            if piece == "-":
                sign = -1.0
                continue
            tokens = piece.replace("*", " ").split()
            if tokens and tokens[0].startswith(("+", "-")):
                if tokens[0] in ("+", "-"):
                    sign *= -1.0 if tokens[0] == "-" else 1.0
                    tokens = tokens[1:]
                else:
                    sign *= -1.0 if tokens[0][0] == "-" else 1.0
                    tokens[0] = tokens[0][1:]
            coeff = sign
            if tokens and _NUMBER_RE.match(tokens[0]):
                coeff = sign * float(tokens[0])
                tokens = tokens[1:]
            string = PauliString.parse(" ".join(tokens), n)
            terms[string] = terms.get(string, 0) + coeff
            sign = 1.0
        return cls(n, terms)

    # -- inspection ---------------------------------------------------

    def strings(self) -> list[PauliString]:
        """Term strings in canonical order."""
        return sorted(self.terms, key=PauliString.sort_key)

    def coefficient(self, string: PauliString) -> complex:
        return self.terms.get(string, 0j)

    def is_zero(self) -> bool:
        return not self.terms

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        """With phase-free strings, Hermitian iff every coefficient is real."""
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def norm(self) -> float:
        """Frobenius-orthonormal norm: sqrt(sum |coeff|^2)."""
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.terms.values())))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[PauliString, complex]]:
        return iter(self.terms.items())

    # -- algebra ------------------------------------------------------

    def __add__(self, other: "PauliPolynomial") -> "PauliPolynomial":
        if self.n != other.n:
            raise ValueError("mismatched site counts")
        terms = dict(self.terms)
        for string, coeff in other.terms.items():
            c = terms.get(string, 0) + coeff
            if abs(c) < EPS_ZERO:
                terms.pop(string, None)
            else:
                terms[string] = c
        return PauliPolynomial(self.n, terms, _trusted=True)

    def __sub__(self, other: "PauliPolynomial") -> "PauliPolynomial":
        return self + (-other)

    def __neg__(self) -> "PauliPolynomial":
        return PauliPolynomial(
            self.n, {s: -c for s, c in self.terms.items()}, _trusted=True
        )

    def __mul__(self, scalar: complex) -> "PauliPolynomial":
        scalar = complex(scalar)
        if abs(scalar) < EPS_ZERO:
            return PauliPolynomial(self.n)
        return PauliPolynomial(
            self.n, {s: c * scalar for s, c in self.terms.items()}, _trusted=True
        )

    __rmul__ = __mul__

    def __matmul__(self, other: "PauliPolynomial") -> "PauliPolynomial":
        """Operator product, expanded termwise through the Pauli rules."""
        if self.n != other.n:
            raise ValueError("mismatched site counts")
        out: dict[PauliString, complex] = {}
        for sa, ca in self.terms.items():
            for sb, cb in other.terms.items():
                k, x, z = _mul_raw(sa, sb)
                string = PauliString(self.n, x, z)
                c = out.get(string, 0) + ca * cb * Phase._VALUES[k]
                if abs(c) < EPS_ZERO:
                    out.pop(string, None)
                else:
                    out[string] = c
        return PauliPolynomial(self.n, out, _trusted=True)

    def adjoint(self) -> "PauliPolynomial":
        """Hermitian conjugate: strings are self-adjoint, coefficients conjugate."""
        return PauliPolynomial(
            self.n, {s: c.conjugate() for s, c in self.terms.items()}, _trusted=True
        )

    def simplify(self, eps: float = EPS_ZERO) -> "PauliPolynomial":
        """Drop coefficients with magnitude below ``eps``. Idempotent."""
        return PauliPolynomial(
            self.n,
            {s: c for s, c in self.terms.items() if abs(c) >= eps},
            _trusted=True,
        )

    def real_coefficients(self, tol: float = 1e-9) -> dict[PauliString, float]:
        """Coefficients as floats; raises if any imaginary part exceeds ``tol``."""
        bad = max((abs(c.imag) for c in self.terms.values()), default=0.0)
        if bad > tol:
            raise ValueError(f"polynomial is not Hermitian (max |Im| = {bad:.3e})")
        return {s: c.real for s, c in self.terms.items()}

    # -- matrices -----------------------------------------------------

    def matrix(self) -> np.ndarray:
        dim = 2**self.n
        out = np.zeros((dim, dim), dtype=complex)
        for string, coeff in self.terms.items():
            out += coeff * string.matrix()
        return out

    def matrix_sparse(self) -> sp.csr_matrix:
        dim = 2**self.n
        out = sp.csr_matrix((dim, dim), dtype=complex)
        for string, coeff in self.terms.items():
            out = out + coeff * string.matrix_sparse()
        return out.tocsr()

    # -- text ---------------------------------------------------------

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for string in self.strings():
            c = self.terms[string]
            body = string.format() or "I"
            if abs(c.imag) < EPS_ZERO:
                parts.append(f"({c.real:+g}) {body}")
            else:
                parts.append(f"({c:+g}) {body}".replace("j", "i"))
        return " ".join(parts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliPolynomial):
            return NotImplemented
        if self.n != other.n:
            return False
        return (self - other).is_zero()

    def __hash__(self) -> None:  # type: ignore[override]
        raise TypeError("PauliPolynomial is not hashable")
