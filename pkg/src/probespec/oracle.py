"""Classical ground truth: eigenpairs of H_S and the transitions a probe can see."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ParseError
from .model import CouplingOperator, SystemHamiltonian, embed_dense, pauli_system
from .pauli import PauliString, PauliSum, canonicalize, check_cap, to_dense

DEFAULT_GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EigenSystem:
    energies: np.ndarray
    vectors: np.ndarray
    padded: np.ndarray

    def __len__(self) -> int:
        return len(self.energies)

    def overlaps(self, psi: np.ndarray) -> np.ndarray:
        return np.abs(self.vectors.conj().T @ psi) ** 2

    def residuals(self, h: np.ndarray) -> np.ndarray:
        return np.linalg.norm(h @ self.vectors - self.vectors * self.energies, axis=0)


@lru_cache(maxsize=64)
def eigendecompose(h_s: SystemHamiltonian) -> EigenSystem:
    """Full Hermitian eigendecomposition with energies ascending.

    Dense-form systems are decomposed block-wise: the padded basis states are
    returned unchanged as eigenvectors (instead of an arbitrary rotation of
    the degenerate padding subspace) and flagged in ``padded``.
    """
    check_cap(h_s.n)
    if h_s.pauli is not None:
        energies, vectors = np.linalg.eigh(h_s.matrix)
        padded = np.zeros(len(energies), dtype=bool)
    else:
        d, dim = h_s.block_dim, h_s.dim
        w, v = np.linalg.eigh(h_s.block)
        energies = np.concatenate([w, np.full(dim - d, h_s.padding)])
        vectors = np.zeros((dim, dim), dtype=complex)
        vectors[:d, :d] = v
        vectors[range(d, dim), range(d, dim)] = 1.0
        padded = np.arange(dim) >= d
        order = np.argsort(energies, kind="stable")
        energies, vectors, padded = energies[order], vectors[:, order], padded[order]
    for arr in (energies, vectors, padded):
        arr.setflags(write=False)
    return EigenSystem(energies, vectors, padded)


@dataclass(frozen=True)
class TransitionRecord:
    """Transition from eigenstate ``i`` (initial) to ``j`` (final).

    ``delta_e`` is the probe frequency that drives it, ``|E_j - E_i|``;
    ``matrix_element`` is ``|<phi_j|A|phi_i>|`` and ``overlap`` is
    ``|<phi_i|psi_s>|^2``.
    """

    i: int
    j: int
    delta_e: float
    matrix_element: float
    overlap: float
    padded: bool = False

    @property
    def weight(self) -> float:
        """``M^2 * overlap``; peak heights grow with it at fixed ``c`` and ``tau``."""
        return self.matrix_element**2 * self.overlap

    @property
    def label(self) -> str:
        return f"{self.i}->{self.j}"

    def to_dict(self) -> dict:
        return {
            "i": self.i,
            "j": self.j,
            "delta_e": self.delta_e,
            "matrix_element": self.matrix_element,
            "overlap": self.overlap,
            "padded": self.padded,
            "weight": self.weight,
        }


@dataclass(frozen=True)
class TransitionTable:
    records: tuple[TransitionRecord, ...]
    window: tuple[float, float]
    mode: str = "absorption"

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, item):
        return self.records[item]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "window": list(self.window),
            "records": [r.to_dict() for r in self.records],
        }


def _operator_matrix(a) -> np.ndarray:
    if isinstance(a, CouplingOperator):
        return a.matrix
    if isinstance(a, (PauliSum, PauliString)):
        return to_dense(a)
    return np.asarray(a, dtype=complex)


def transition_table(
    eig: EigenSystem,
    a,
    psi_s: np.ndarray,
    window: tuple[float, float] = (-np.inf, np.inf),
    mode: str = "absorption",
) -> TransitionTable:
    """Every transition whose drive frequency lies in ``window`` (inclusive).

    Absorption lists upward transitions ``E_j > E_i``, emission downward ones.
    Zero-frequency pairs (degenerate levels) are never listed.
    """
    if mode not in ("absorption", "emission"):
        raise ParseError(f"mode must be 'absorption' or 'emission', got {mode!r}")
    lo, hi = window
    a_eig = eig.vectors.conj().T @ _operator_matrix(a) @ eig.vectors
    overlaps = eig.overlaps(np.asarray(psi_s, dtype=complex))
    energies = eig.energies
    records = []
    for i, j in itertools.permutations(range(len(energies)), 2):
        gap = energies[j] - energies[i]
        if mode == "emission":
            gap = -gap
        if gap <= 0 or not lo <= gap <= hi:
            continue
        records.append(
            TransitionRecord(
                i=i,
                j=j,
                delta_e=float(gap),
                matrix_element=float(abs(a_eig[j, i])),
                overlap=float(min(overlaps[i], 1.0)),
                padded=bool(eig.padded[i] or eig.padded[j]),
            )
        )
    records.sort(key=lambda r: (r.delta_e, r.i, r.j))
    return TransitionTable(tuple(records), (float(lo), float(hi)), mode)


@dataclass
class Assignment:
    peak: object
    record: TransitionRecord | None
    candidates: list[TransitionRecord] = field(default_factory=list)

    @property
    def ambiguous(self) -> bool:
        return len(self.candidates) > 1


@dataclass
class MatchReport:
    assignments: list[Assignment]
    spurious: list
    missing: list[TransitionRecord]

    @property
    def matched(self) -> list[Assignment]:
        return [a for a in self.assignments if a.record is not None]


def match_peaks(
    peaks: Sequence,
    records: Iterable[TransitionRecord],
    tolerance: float | Callable[[TransitionRecord], float],
    expected: Iterable[TransitionRecord] | None = None,
    score: Callable[[TransitionRecord, float], float] | None = None,
) -> MatchReport:
    """Assign each peak a record within tolerance.

    ``tolerance`` is a frequency or a per-record function. Peaks with no record
    in reach are spurious; ``expected`` records (all records by default) that
    are not within reach of any peak are missing. Without ``score`` the nearest
    candidate wins and equidistant ones are resolved toward the larger
    :attr:`TransitionRecord.weight`; with ``score(record, center)`` the
    highest-scoring candidate wins.
    """
    records = list(records)
    expected = records if expected is None else list(expected)
    tol = tolerance if callable(tolerance) else (lambda _r, t=float(tolerance): t)
    if not callable(tolerance) and tolerance <= 0:
        raise ParseError("tolerance must be positive")

    assignments, spurious = [], []
    reached: set[tuple[int, int]] = set()
    for peak in peaks:
        center = peak.center
        near = [r for r in records if abs(r.delta_e - center) <= tol(r)]
        if not near:
            spurious.append(peak)
            assignments.append(Assignment(peak, None, []))
            continue
        if score is None:
            near.sort(key=lambda r: (round(abs(r.delta_e - center), 12), -r.weight))
        else:
            near.sort(key=lambda r: -score(r, center))
        reached.update((r.i, r.j) for r in near)
        assignments.append(Assignment(peak, near[0], near))
    missing = [
        r for r in expected
        if (r.i, r.j) not in reached and not any(abs(r.delta_e - p.center) <= tol(r) for p in peaks)
    ]
    return MatchReport(assignments, spurious, missing)


def detect_degeneracy(eig: EigenSystem | Sequence[float], gap_tol: float = DEFAULT_GAP_TOL) -> list[list[int]]:
    """Group indices of ascending energies whose consecutive gaps are ``<= gap_tol``."""
    if gap_tol <= 0:
        raise ParseError("gap_tol must be positive")
    energies = np.asarray(eig.energies if isinstance(eig, EigenSystem) else eig, dtype=float)
    order = np.argsort(energies, kind="stable")
    groups: list[list[int]] = []
    for prev, idx in zip(itertools.chain([None], order), order):
        if prev is not None and energies[idx] - energies[prev] <= gap_tol:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return groups


def random_local_paulis(n: int, count: int, rng: np.random.Generator) -> list[str]:
    """``count`` distinct random non-identity strings of weight 1 or 2."""
    if n == 1:
        pool = ["X", "Y", "Z"]
    else:
        pool = []
        for q in range(n):
            for letter in "XYZ":
                pool.append(_place({q: letter}, n))
        for q1, q2 in itertools.combinations(range(n), 2):
            for l1, l2 in itertools.product("XYZ", repeat=2):
                pool.append(_place({q1: l1, q2: l2}, n))
    picks = rng.choice(len(pool), size=min(count, len(pool)), replace=False)
    return [pool[k] for k in picks]


def _place(letters: dict[int, str], n: int) -> str:
    out = ["I"] * n
    for q, letter in letters.items():
        out[n - 1 - q] = letter
    return "".join(out)


def lift_degeneracies(h_s: SystemHamiltonian, epsilon: float, seed: int = 0, terms: int = 4) -> SystemHamiltonian:
    """Add a seeded few-body Hermitian perturbation of operator norm ``<= epsilon``.

    The perturbation is ``terms`` random 1- and 2-qubit Pauli strings with
    real coefficients whose absolute values sum to ``epsilon``. For dense-form
    systems it is compressed onto the embedded block so the padding stays
    decoupled.
    """
    if epsilon < 0:
        raise ParseError("epsilon must be non-negative")
    if epsilon == 0:
        return h_s
    rng = np.random.default_rng(seed)
    letters = random_local_paulis(h_s.n, terms, rng)
    coefs = rng.normal(size=len(letters))
    coefs *= epsilon / np.abs(coefs).sum()
    pert = PauliSum.from_terms([PauliString(c, s) for c, s in zip(coefs, letters)])
    if h_s.pauli is not None:
        return pauli_system(canonicalize(h_s.pauli + pert))
    d = h_s.block_dim
    block = h_s.block + to_dense(pert)[:d, :d]
    return embed_dense(block, h_s.n, h_s.padding)
