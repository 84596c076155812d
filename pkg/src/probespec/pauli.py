"""Pauli strings, weighted Pauli sums and their dense realizations.

Basis convention: the leftmost letter of a string acts on the highest-index
qubit, and qubit 0 (the rightmost letter) is the least-significant bit of a
computational-basis index. ``"IX"`` therefore flips bit 0 and ``"XI"`` maps
index 0 to index 2.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ResourceLimitError, StructureError

LETTERS = "IXYZ"
HERMITIAN_TOL = 1e-12
DEFAULT_QUBIT_CAP = 12
CAP_ENV_VAR = "PROBESPEC_DENSE_CAP"

_NUMBER_RE = re.compile(
    r"""^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?          # real part
        ([+-](\d+\.?\d*|\.\d+)([eE][+-]?\d+)?[ij])?$    # optional imaginary part
    """,
    re.VERBOSE,
)
_PURE_IMAG_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?[ij]$")

# single-qubit products: (a, b) -> (phase, letter) with a.b = phase * letter
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def qubit_cap() -> int:
    """Largest register width (in qubits) that may be realized densely."""
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_QUBIT_CAP
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"{CAP_ENV_VAR} must be an integer, got {raw!r}") from None


def check_cap(width: int) -> None:
    cap = qubit_cap()
    if width > cap:
        raise ResourceLimitError(
            f"dense realization of {width} qubits exceeds the cap of {cap} "
            f"(set {CAP_ENV_VAR} to raise it)"
        )


@dataclass(frozen=True)
class PauliString:
    """``coefficient`` times the tensor product named by ``letters``."""

    coefficient: complex
    letters: str

    def __post_init__(self):
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        if not self.letters:
            raise ParseError("empty letter sequence")
        bad = set(self.letters) - set(LETTERS)
        if bad:
            raise ParseError(f"illegal Pauli letter(s) {''.join(sorted(bad))!r} in {self.letters!r}")

    @property
    def width(self) -> int:
        return len(self.letters)

    @property
    def masks(self) -> tuple[int, int, int]:
        """``(x_mask, z_mask, y_count)`` of the letter sequence."""
        x = z = ny = 0
        n = len(self.letters)
        for pos, letter in enumerate(self.letters):
            bit = 1 << (n - 1 - pos)
            if letter in "XY":
                x |= bit
            if letter in "ZY":
                z |= bit
            if letter == "Y":
                ny += 1
        return x, z, ny

    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def scaled(self, factor: complex) -> "PauliString":
        return PauliString(self.coefficient * factor, self.letters)

    def __matmul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        return f"{_format_coef(self.coefficient)} {self.letters}"


@dataclass(frozen=True)
class PauliSum:
    """A weighted sum of equal-width Pauli strings.

    Construction does not canonicalize; call :func:`canonicalize` (or
    :meth:`canonical`) when a unique representation is needed.
    """

    terms: tuple[PauliString, ...]
    width: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.width < 1:
            raise StructureError(f"width must be positive, got {self.width}")
        for term in self.terms:
            if term.width != self.width:
                raise StructureError(
                    f"term {term.letters!r} has width {term.width}, sum has width {self.width}"
                )

    @classmethod
    def from_terms(cls, terms: Iterable[PauliString], width: int | None = None) -> "PauliSum":
        terms = tuple(terms)
        if width is None:
            if not terms:
                raise StructureError("width is required for an empty sum")
            width = terms[0].width
        widths = {t.width for t in terms}
        if len(widths) > 1:
            raise StructureError(f"mixed term widths {sorted(widths)}")
        return cls(terms, width)

    @classmethod
    def parse(cls, lines: Iterable[str] | str, width: int | None = None) -> "PauliSum":
        if isinstance(lines, str):
            lines = [ln for ln in re.split(r"[\n;]", lines) if ln.strip()]
        return cls.from_terms((parse_pauli_term(ln) for ln in lines), width)

    @classmethod
    def from_json(cls, items: Sequence[dict], width: int | None = None) -> "PauliSum":
        terms = []
        for item in items:
            try:
                coef, letters = item["coef"], item["paulis"]
            except (KeyError, TypeError):
                raise ParseError(f"Pauli term entries need 'coef' and 'paulis' keys: {item!r}") from None
            if isinstance(coef, (list, tuple)):
                if len(coef) != 2:
                    raise ParseError(f"coef must be [re, im], got {coef!r}")
                coef = complex(float(coef[0]), float(coef[1]))
            elif isinstance(coef, (int, float)):
                coef = complex(coef)
            else:
                raise ParseError(f"unreadable coef {coef!r}")
            terms.append(PauliString(coef, str(letters)))
        return cls.from_terms(terms, width)

    def to_json(self) -> list[dict]:
        return [
            {"coef": [t.coefficient.real, t.coefficient.imag], "paulis": t.letters}
            for t in self.terms
        ]

    def canonical(self) -> "PauliSum":
        return canonicalize(self)

    def dense(self) -> np.ndarray:
        return to_dense(self)

    def is_hermitian(self) -> bool:
        return is_hermitian(self)

    def one_norm(self) -> float:
        """Sum of absolute coefficients, an upper bound on the operator norm."""
        return float(sum(abs(t.coefficient) for t in self.terms))

    def extend(self, letter: str) -> "PauliSum":
        """Tensor every term with ``letter`` on a new least-significant qubit."""
        return PauliSum(tuple(PauliString(t.coefficient, t.letters + letter) for t in self.terms),
                        self.width + 1)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.width != self.width:
            raise StructureError(f"cannot add sums of width {self.width} and {other.width}")
        return PauliSum(self.terms + other.terms, self.width)

    def __mul__(self, factor: complex) -> "PauliSum":
        return PauliSum(tuple(t.scaled(factor) for t in self.terms), self.width)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __str__(self) -> str:
        return "\n".join(str(t) for t in self.terms) or f"0 ({self.width} qubits)"


def _format_coef(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real)
    return f"{c.real!r}{c.imag:+}i"


def parse_pauli_term(text: str) -> PauliString:
    """Parse ``"<real>[+<imag>i] <letters>"``, e.g. ``"1.0 IIIIX"`` or ``"0.5-0.5i XY"``."""
    tokens = text.split()
    if len(tokens) != 2:
        raise ParseError(f"expected '<coef> <letters>', got {text!r}")
    num, letters = tokens
    if _NUMBER_RE.match(num):
        coef = complex(num.replace("i", "j"))
    elif _PURE_IMAG_RE.match(num):
        coef = complex(num.replace("i", "j"))
    else:
        raise ParseError(f"malformed coefficient {num!r}")
    bad = [ch for ch in letters if ch not in LETTERS]
    if bad:
        raise ParseError(f"illegal Pauli letter {bad[0]!r} in token {letters!r}")
    return PauliString(coef, letters)


def canonicalize(psum: PauliSum, atol: float = 0.0) -> PauliSum:
    """Merge identical strings, drop zero coefficients, sort by letters."""
    merged: dict[str, complex] = {}
    for term in psum.terms:
        if term.width != psum.width:
            raise StructureError(f"term {term.letters!r} does not match width {psum.width}")
        merged[term.letters] = merged.get(term.letters, 0j) + term.coefficient
    terms = tuple(
        PauliString(coef, letters)
        for letters, coef in sorted(merged.items())
        if abs(coef) > atol
    )
    return PauliSum(terms, psum.width)


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Operator product ``p @ q`` using the single-qubit multiplication table."""
    if p.width != q.width:
        raise StructureError(f"cannot multiply widths {p.width} and {q.width}")
    phase: complex = p.coefficient * q.coefficient
    out = []
    for a, b in zip(p.letters, q.letters):
        ph, letter = _PRODUCT[(a, b)]
        phase *= ph
        out.append(letter)
    return PauliString(phase, "".join(out))


def string_action(term: PauliString, width: int | None = None):
    """Index map and phases such that ``(P @ v)[i] = phase[i] * v[src[i]]``.

    The coefficient of ``term`` is *not* included in ``phase``.
    """
    n = term.width if width is None else width
    if n != term.width:
        raise StructureError(f"term width {term.width} does not match register width {n}")
    x, z, ny = term.masks
    idx = np.arange(1 << n, dtype=np.int64)
    src = idx ^ x
    parity = np.bitwise_count(src & z) & 1
    phase = (1j ** ny) * (1 - 2 * parity.astype(np.float64))
    return src, phase


def apply_string(term: PauliString, vec: np.ndarray) -> np.ndarray:
    """Return ``term @ vec`` (coefficient included) without forming a matrix."""
    n = int(np.log2(vec.shape[0]))
    src, phase = string_action(term, n)
    return term.coefficient * phase * vec[src]


def to_dense(psum: PauliSum | PauliString) -> np.ndarray:
    """Dense ``2**width`` square matrix of a Pauli sum or a single string."""
    if isinstance(psum, PauliString):
        psum = PauliSum((psum,), psum.width)
    check_cap(psum.width)
    dim = 1 << psum.width
    out = np.zeros((dim, dim), dtype=complex)
    rows = np.arange(dim)
    for term in psum.terms:
        src, phase = string_action(term)
        out[rows, src] += term.coefficient * phase
    return out


def is_hermitian(psum: PauliSum, tol: float = HERMITIAN_TOL) -> bool:
    return all(abs(t.coefficient.imag) <= tol for t in canonicalize(psum).terms)


def identity(width: int, coefficient: complex = 1.0) -> PauliSum:
    return PauliSum((PauliString(coefficient, "I" * width),), width)


def single(letter: str, qubit: int, width: int, coefficient: complex = 1.0) -> PauliString:
    """``letter`` acting on ``qubit`` (0 = least significant) of a ``width``-qubit register."""
    if not 0 <= qubit < width:
        raise StructureError(f"qubit {qubit} out of range for width {width}")
    letters = ["I"] * width
    letters[width - 1 - qubit] = letter
    return PauliString(coefficient, "".join(letters))
