"""System, probe and coupling pieces of the probe-spectroscopy Hamiltonian.

The joint register is ``n`` system qubits followed by one probe qubit in the
least-significant position, so joint index = ``2 * system_index + probe_bit``.
The probe term is ``(omega/2) * diag(-1, +1)`` over the probe bit: the probe's
excited state ``|1>`` carries energy ``+omega/2``. Energies are in Hartree and
times in inverse Hartree (hbar = 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import DimensionError, NotHermitianError, ParseError, StructureError
from .pauli import PauliString, PauliSum, canonicalize, check_cap, is_hermitian, to_dense

ProbeInit = Literal["excited", "ground"]
PADDING_OFFSET = 10.0
EMBED_HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SystemHamiltonian:
    """H_S on ``n`` qubits, given either as a Pauli sum or as a dense block.

    In dense form the ``d x d`` block occupies basis states ``0..d-1``; the
    remaining states are decoupled and sit at energy ``padding``.
    """

    n: int
    pauli: PauliSum | None = None
    block: np.ndarray | None = None
    padding: float = 0.0

    def __post_init__(self):
        if (self.pauli is None) == (self.block is None):
            raise StructureError("exactly one of pauli/block must be given")
        if self.pauli is not None:
            if self.pauli.width != self.n:
                raise StructureError(f"Pauli form has width {self.pauli.width}, expected {self.n}")
            if not is_hermitian(self.pauli):
                raise NotHermitianError("system Pauli sum has non-real coefficients")
        else:
            block = np.asarray(self.block, dtype=complex)
            if block.ndim != 2 or block.shape[0] != block.shape[1]:
                raise DimensionError(f"dense block must be square, got shape {block.shape}")
            if block.shape[0] > 1 << self.n:
                raise DimensionError(f"block dimension {block.shape[0]} exceeds 2**{self.n}")
            if not np.allclose(block, block.conj().T, atol=EMBED_HERMITIAN_TOL, rtol=0):
                raise NotHermitianError("dense system block is not Hermitian")
            block = 0.5 * (block + block.conj().T)
            block.setflags(write=False)
            object.__setattr__(self, "block", block)
            object.__setattr__(self, "padding", float(self.padding))

    @property
    def is_dense(self) -> bool:
        return self.block is not None

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def block_dim(self) -> int:
        return self.block.shape[0] if self.is_dense else self.dim

    @property
    def padded(self) -> np.ndarray:
        """Boolean mask over basis states marking the padding subspace."""
        mask = np.zeros(self.dim, dtype=bool)
        mask[self.block_dim:] = True
        return mask

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.pauli is not None:
            out = to_dense(self.pauli)
        else:
            check_cap(self.n)
            d = self.block_dim
            out = np.zeros((self.dim, self.dim), dtype=complex)
            out[:d, :d] = self.block
            out[range(d, self.dim), range(d, self.dim)] = self.padding
        out.setflags(write=False)
        return out


def embed_dense(h, n: int, padding_diagonal: float | None = None) -> SystemHamiltonian:
    """Place a Hermitian ``d x d`` matrix in the first ``d`` basis states of ``n`` qubits.

    ``padding_diagonal=None`` puts the unused states ``PADDING_OFFSET`` Hartree
    above the largest eigenvalue of ``h`` so they stay off-resonance.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    if h.shape[0] > 1 << n:
        raise DimensionError(f"dimension {h.shape[0]} does not fit in {n} qubits")
    if not np.allclose(h, h.conj().T, atol=EMBED_HERMITIAN_TOL, rtol=0):
        raise NotHermitianError("matrix is not Hermitian within 1e-10")
    if padding_diagonal is None:
        padding_diagonal = float(np.linalg.eigvalsh(h)[-1]) + PADDING_OFFSET
    return SystemHamiltonian(n=n, block=h, padding=padding_diagonal)


def pauli_system(psum: PauliSum) -> SystemHamiltonian:
    return SystemHamiltonian(n=psum.width, pauli=canonicalize(psum))


@dataclass(frozen=True)
class CouplingOperator:
    op: PauliSum
    label: str = ""

    def __post_init__(self):
        op = canonicalize(self.op)
        if not op.terms:
            raise NotHermitianError("coupling operator must be nonzero")
        if not is_hermitian(op):
            raise NotHermitianError(f"coupling operator {self.label!r} is not Hermitian")
        object.__setattr__(self, "op", op)

    @property
    def width(self) -> int:
        return self.op.width

    @cached_property
    def matrix(self) -> np.ndarray:
        return to_dense(self.op)


_EQ6 = ("IIIIX", "IIIXI", "IIXII", "IIIXX", "IIXXI")
_EQ7 = ("XXXXI", "XXXIX", "XXIXX", "XIXXX", "XXXII", "XIIXX", "XIXII", "XIIIX", "XXXXX")


def uniform_x(n: int) -> CouplingOperator:
    """``(sum_i X_i) / sqrt(n)``."""
    coef = 1.0 / math.sqrt(n)
    terms = [
        PauliString(coef, "".join("X" if p == q else "I" for p in range(n)))
        for q in range(n)
    ]
    return CouplingOperator(PauliSum.from_terms(terms), label=f"uniform_x({n})")


def preset_coupling(name: str, n: int = 5) -> CouplingOperator:
    """The probe coupling operators used in the water-molecule runs.

    ``eq5`` is one X on each of the five qubits over sqrt(5); ``eq6`` swaps the
    two highest single flips for two nearest-neighbour XX pairs; ``eq7`` is one
    third of nine multi-qubit X strings. ``uniform_x`` generalizes ``eq5`` to
    any ``n``.
    """
    key = name.lower().replace("-", "_")
    if key == "uniform_x":
        return uniform_x(n)
    if key not in ("eq5", "eq6", "eq7"):
        raise ParseError(f"unknown coupling preset {name!r}")
    if n != 5:
        raise StructureError(f"preset {name!r} is defined on 5 qubits, not {n}")
    if key == "eq5":
        op = uniform_x(5)
        return CouplingOperator(op.op, label="eq5")
    if key == "eq6":
        terms = [PauliString(1 / math.sqrt(5), s) for s in _EQ6]
        return CouplingOperator(PauliSum.from_terms(terms), label="eq6")
    terms = [PauliString(1 / 3, s) for s in _EQ7]
    return CouplingOperator(PauliSum.from_terms(terms), label="eq7")


@dataclass(frozen=True)
class ProbeConfig:
    omega: float = 0.0
    c: float = 0.005
    tau: float = 500.0
    probe_init: ProbeInit = "excited"

    def __post_init__(self):
        if not math.isfinite(self.omega):
            raise ParseError(f"omega must be finite, got {self.omega}")
        if not self.c >= 0:
            raise ParseError(f"coupling strength must be >= 0, got {self.c}")
        if not self.tau > 0:
            raise ParseError(f"evolution time must be > 0, got {self.tau}")
        if self.probe_init not in ("excited", "ground"):
            raise ParseError(f"probe_init must be 'excited' or 'ground', got {self.probe_init!r}")

    @property
    def init_bit(self) -> int:
        return 1 if self.probe_init == "excited" else 0

    def at(self, omega: float) -> "ProbeConfig":
        return replace(self, omega=float(omega))


def probe_energies(omega: float) -> np.ndarray:
    """Probe-term diagonal over the probe bit ``(0, 1)``."""
    return np.array([-0.5 * omega, 0.5 * omega])


@dataclass(frozen=True, eq=False)
class TotalHamiltonian:
    """``H_S (x) I + (omega/2) sigma_z + c A (x) sigma_x`` on ``n + 1`` qubits."""

    system: SystemHamiltonian
    probe: ProbeConfig
    coupling: CouplingOperator

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def width(self) -> int:
        return self.system.n + 1

    @property
    def dim(self) -> int:
        return 1 << self.width

    @cached_property
    def matrix(self) -> np.ndarray:
        check_cap(self.width)
        hs = self.system.matrix
        out = np.kron(hs, np.eye(2))
        out += np.kron(np.eye(hs.shape[0]), np.diag(probe_energies(self.probe.omega)))
        if self.probe.c:
            out += self.probe.c * np.kron(self.coupling.matrix, np.array([[0, 1], [1, 0]]))
        out.setflags(write=False)
        return out

    @property
    def coupling_terms(self) -> PauliSum:
        """``c A (x) X`` as a Pauli sum on the joint register."""
        return self.coupling.op.extend("X") * self.probe.c

    @property
    def probe_term(self) -> PauliSum:
        # diag(-w/2, +w/2) = -(w/2) Z under the standard Z = diag(1, -1)
        return PauliSum((PauliString(-0.5 * self.probe.omega, "I" * self.n + "Z"),), self.width)

    def pauli(self) -> PauliSum:
        """Full joint Hamiltonian as a canonical Pauli sum (Pauli-form systems only)."""
        if self.system.pauli is None:
            raise StructureError("dense-form systems have no Pauli representation")
        return canonicalize(self.system.pauli.extend("I") + self.probe_term + self.coupling_terms)


def assemble_total(system: SystemHamiltonian, probe: ProbeConfig, coupling: CouplingOperator) -> TotalHamiltonian:
    if coupling.width != system.n:
        raise StructureError(f"coupling width {coupling.width} does not match system width {system.n}")
    return TotalHamiltonian(system, probe, coupling)


def basis_state(bits: str | int, n: int) -> np.ndarray:
    """Computational basis vector; ``bits`` is a bitstring (leftmost = highest qubit) or an index."""
    if isinstance(bits, str):
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ParseError(f"expected a {n}-character bitstring, got {bits!r}")
        index = int(bits, 2)
    else:
        index = int(bits)
    if not 0 <= index < 1 << n:
        raise DimensionError(f"basis index {index} out of range for {n} qubits")
    vec = np.zeros(1 << n, dtype=complex)
    vec[index] = 1.0
    return vec


def normalized(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    norm = np.linalg.norm(vec)
    if not np.isfinite(norm) or norm == 0:
        raise ParseError("state vector has zero or non-finite norm")
    return vec / norm


@dataclass(frozen=True, eq=False)
class ProbeModel:
    """Everything needed to run a sweep: H_S, A, probe settings and |psi_s>."""

    system: SystemHamiltonian
    coupling: CouplingOperator
    probe: ProbeConfig
    initial_state: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.coupling.width != self.system.n:
            raise StructureError(
                f"coupling width {self.coupling.width} does not match system width {self.system.n}"
            )
        if self.initial_state is None:
            object.__setattr__(self, "initial_state", basis_state(0, self.system.n))
        psi = np.asarray(self.initial_state, dtype=complex)
        if psi.shape != (self.system.dim,):
            raise DimensionError(f"initial state has shape {psi.shape}, expected ({self.system.dim},)")
        if abs(np.linalg.norm(psi) - 1) > 1e-10:
            raise ParseError("initial state is not normalized")
        psi = psi.copy()
        psi.setflags(write=False)
        object.__setattr__(self, "initial_state", psi)

    @property
    def n(self) -> int:
        return self.system.n

    def with_(self, **changes) -> "ProbeModel":
        """Copy with fields replaced; ``c``, ``tau`` and ``probe_init`` go to the probe."""
        probe_keys = {k: changes.pop(k) for k in ("c", "tau", "probe_init", "omega") if k in changes}
        if probe_keys:
            changes["probe"] = replace(changes.get("probe", self.probe), **probe_keys)
        return replace(self, **changes)

    def total(self, omega: float) -> TotalHamiltonian:
        return assemble_total(self.system, self.probe.at(omega), self.coupling)


# ---------------------------------------------------------------- JSON files


def _pauli_from_spec(spec, n: int) -> PauliSum:
    if isinstance(spec, str):
        return PauliSum.parse(spec, width=n)
    if spec and isinstance(spec[0], str):
        return PauliSum.parse(spec, width=n)
    return PauliSum.from_json(spec, width=n)


def _state_from_spec(spec, system: SystemHamiltonian) -> np.ndarray:
    n = system.n
    if spec is None or spec == "ground":
        from .oracle import eigendecompose

        return eigendecompose(system).vectors[:, 0].copy()
    if isinstance(spec, str):
        return basis_state(spec, n)
    if isinstance(spec, int):
        return basis_state(spec, n)
    if isinstance(spec, dict) and "amplitudes" in spec:
        amps = [complex(*a) if isinstance(a, (list, tuple)) else complex(a) for a in spec["amplitudes"]]
        return normalized(amps)
    raise ParseError(f"unreadable initial state {spec!r}")


def model_from_dict(data: dict) -> ProbeModel:
    """Build a :class:`ProbeModel` from the model-file dictionary.

    Schema::

        {"n": 5,
         "system": {"pauli": [...]} | {"dense": [[...]], "padding": 10.0},
         "coupling": {"preset": "eq5"} | {"pauli": [...]},
         "probe": {"c": 0.005, "tau": 500, "init": "excited"},
         "initial_state": "00010" | "ground" | {"amplitudes": [[re, im], ...]}}

    Dense entries may be real numbers or ``[re, im]`` pairs.
    """
    try:
        n = int(data["n"])
        sys_spec = data["system"]
        coup_spec = data["coupling"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"model file is missing a required field: {exc}") from None

    if "pauli" in sys_spec:
        system = pauli_system(_pauli_from_spec(sys_spec["pauli"], n))
    elif "dense" in sys_spec:
        rows = sys_spec["dense"]
        try:
            h = np.array(
                [[complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in row] for row in rows]
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"unreadable dense matrix: {exc}") from None
        system = embed_dense(h, n, sys_spec.get("padding"))
    else:
        raise ParseError("system needs a 'pauli' or 'dense' entry")

    if "preset" in coup_spec:
        coupling = preset_coupling(coup_spec["preset"], n)
    elif "pauli" in coup_spec:
        coupling = CouplingOperator(_pauli_from_spec(coup_spec["pauli"], n), coup_spec.get("label", "custom"))
    else:
        raise ParseError("coupling needs a 'preset' or 'pauli' entry")

    p = data.get("probe", {})
    try:
        probe = ProbeConfig(
            omega=float(p.get("omega", 0.0)),
            c=float(p.get("c", 0.005)),
            tau=float(p.get("tau", 500.0)),
            probe_init=p.get("init", "excited"),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad probe settings: {exc}") from None
    psi = _state_from_spec(data.get("initial_state"), system)
    return ProbeModel(system, coupling, probe, psi)


def model_to_dict(model: ProbeModel, initial_state=None) -> dict:
    system = model.system
    if system.pauli is not None:
        sys_spec = {"pauli": system.pauli.to_json()}
    else:
        block = system.block
        if np.allclose(block.imag, 0):
            dense = block.real.tolist()
        else:
            dense = [[[v.real, v.imag] for v in row] for row in block]
        sys_spec = {"dense": dense, "padding": system.padding}
    label = model.coupling.label
    coup_spec = {"preset": label} if label in ("eq5", "eq6", "eq7") else {"pauli": model.coupling.op.to_json(), "label": label}
    if initial_state is None:
        initial_state = {"amplitudes": [[a.real, a.imag] for a in model.initial_state]}
    return {
        "n": model.n,
        "system": sys_spec,
        "coupling": coup_spec,
        "probe": {"c": model.probe.c, "tau": model.probe.tau, "init": model.probe.probe_init},
        "initial_state": initial_state,
    }


def load_model(path: str | Path) -> ProbeModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read model file {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return model_from_dict(data)
