"""Statevector evolution of the joint (system, probe) register.

States are plain complex numpy vectors over ``2**(n+1)`` amplitudes with the
probe as the least-significant qubit. Two propagators are provided: an exact
one via eigendecomposition of the dense Hamiltonian, and a first/second order
product formula whose Pauli-string factors are applied in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ProjectionError, PropagationError, StructureError
from .model import TotalHamiltonian, probe_energies
from .oracle import eigendecompose
from .pauli import PauliString, PauliSum, check_cap, string_action

NORM_TOL = 1e-10
DEFAULT_STEP_BOUND = 0.1


@dataclass(frozen=True)
class TrotterPlan:
    """Product-formula settings; ``steps=None`` picks ``r`` from a norm bound."""

    order: int = 2
    steps: int | None = None
    step_bound: float = DEFAULT_STEP_BOUND

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ParseError(f"unsupported Trotter order {self.order}; use 1 or 2")
        if self.steps is not None and self.steps < 1:
            raise ParseError(f"Trotter steps must be >= 1, got {self.steps}")
        if not self.step_bound > 0:
            raise ParseError("step_bound must be positive")


def joint_state(psi_s: np.ndarray, probe_bit: int) -> np.ndarray:
    """``|psi_s> (x) |probe_bit>``."""
    probe = np.zeros(2, dtype=complex)
    probe[probe_bit] = 1.0
    return np.kron(np.asarray(psi_s, dtype=complex), probe)


def _as_matrix(h) -> np.ndarray:
    if isinstance(h, TotalHamiltonian):
        return h.matrix
    if isinstance(h, PauliSum):
        from .pauli import to_dense

        return to_dense(h)
    return np.asarray(h, dtype=complex)


def _check_state(psi: np.ndarray, dim: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (dim,):
        raise StructureError(f"state has shape {psi.shape}, expected ({dim},)")
    if not np.all(np.isfinite(psi)):
        raise PropagationError("state has non-finite amplitudes")
    return psi


def exact_propagate(h, tau: float, psi: np.ndarray) -> np.ndarray:
    """``exp(-i H tau) psi`` from the eigendecomposition of the dense Hermitian ``H``.

    ``h`` may be a :class:`TotalHamiltonian`, a :class:`PauliSum` or a matrix.
    """
    if isinstance(h, TotalHamiltonian):
        check_cap(h.width)
    mat = _as_matrix(h)
    psi = _check_state(psi, mat.shape[0])
    if tau == 0:
        return psi.copy()
    w, v = np.linalg.eigh(mat)
    out = v @ (np.exp(-1j * w * tau) * (v.conj().T @ psi))
    if not np.all(np.isfinite(out)):
        raise PropagationError("propagation produced non-finite amplitudes")
    return out


def apply_pauli_exponential(psi: np.ndarray, term: PauliString, theta: float) -> np.ndarray:
    """``exp(-i theta P) psi = cos(theta) psi - i sin(theta) P psi``.

    The coefficient of ``term`` is ignored; fold it into ``theta``.
    """
    n = psi.shape[0].bit_length() - 1
    if term.width != n or psi.shape[0] != 1 << n:
        raise StructureError(f"term width {term.width} does not match a {psi.shape[0]}-amplitude state")
    src, phase = string_action(term)
    return math.cos(theta) * psi - 1j * math.sin(theta) * phase * psi[src]


class _Rotation:
    """Precomputed closed-form exponential of one Pauli term."""

    __slots__ = ("src", "phase", "coef")

    def __init__(self, term: PauliString):
        if abs(term.coefficient.imag) > 1e-12:
            raise StructureError(f"cannot exponentiate non-Hermitian term {term}")
        self.src, self.phase = string_action(term)
        self.coef = term.coefficient.real

    def apply(self, psi: np.ndarray, dt: float) -> np.ndarray:
        theta = self.coef * dt
        return math.cos(theta) * psi - 1j * math.sin(theta) * self.phase * psi[self.src]


def _commute(p: PauliString, q: PauliString) -> bool:
    xp, zp, _ = p.masks
    xq, zq, _ = q.masks
    return (bin(xp & zq).count("1") + bin(zp & xq).count("1")) % 2 == 0


def _all_commute(terms) -> bool:
    return all(_commute(p, q) for k, p in enumerate(terms) for q in terms[k + 1:])


def norm_bound(h: TotalHamiltonian) -> float:
    """Cheap upper bound on ``||H||`` used to pick the Trotter step count."""
    if h.system.pauli is not None:
        return h.pauli().one_norm()
    eig = eigendecompose(h.system)
    return float(np.max(np.abs(eig.energies))) + 0.5 * abs(h.probe.omega) + h.probe.c * h.coupling.op.one_norm()


def default_steps(h: TotalHamiltonian, tau: float, step_bound: float = DEFAULT_STEP_BOUND) -> int:
    return max(1, math.ceil(norm_bound(h) * tau / step_bound))


def _product(rotations, psi, dt, order, symmetric_ok):
    if order == 1 or symmetric_ok:
        for rot in rotations:
            psi = rot.apply(psi, dt)
        return psi
    for rot in rotations:
        psi = rot.apply(psi, 0.5 * dt)
    for rot in reversed(rotations):
        psi = rot.apply(psi, 0.5 * dt)
    return psi


def trotter_propagate(h: TotalHamiltonian, tau: float, plan: TrotterPlan, psi: np.ndarray) -> np.ndarray:
    """Product-formula approximation of ``exp(-i H tau) psi`` with ``plan.steps`` steps.

    Pauli-form systems are split into every term of the joint Pauli sum, in
    canonical order. Dense-form systems are split into the diagonalizable part
    ``H_S (x) I + probe`` (exponentiated exactly) and the coupling ``c A (x) X``
    (applied term by term).
    """
    check_cap(h.width)
    psi = _check_state(psi, h.dim).copy()
    if tau == 0:
        return psi
    steps = plan.steps or default_steps(h, tau, plan.step_bound)
    dt = tau / steps
    if h.system.pauli is not None:
        out = _trotter_pauli(h, dt, steps, plan.order, psi)
    else:
        out = _trotter_split(h, dt, steps, plan.order, psi)
    if not np.all(np.isfinite(out)):
        raise PropagationError("Trotter propagation produced non-finite amplitudes")
    return out


def _trotter_pauli(h, dt, steps, order, psi):
    terms = [t for t in h.pauli().terms]
    rotations = [_Rotation(t) for t in terms]
    if order == 1:
        for _ in range(steps):
            for rot in rotations:
                psi = rot.apply(psi, dt)
        return psi
    # symmetric step: half-steps forward then backward; the two middle
    # half-steps fuse, as do the outer half-steps of consecutive steps
    inner = rotations[1:-1]
    first, last = rotations[0], rotations[-1]
    if len(rotations) == 1:
        for _ in range(steps):
            psi = first.apply(psi, dt)
        return psi
    psi = first.apply(psi, 0.5 * dt)
    for step in range(steps):
        for rot in inner:
            psi = rot.apply(psi, 0.5 * dt)
        psi = last.apply(psi, dt)
        for rot in reversed(inner):
            psi = rot.apply(psi, 0.5 * dt)
        psi = first.apply(psi, dt if step < steps - 1 else 0.5 * dt)
    return psi


def _trotter_split(h, dt, steps, order, psi):
    eig = eigendecompose(h.system)
    vecs = eig.vectors
    probe_e = probe_energies(h.probe.omega)

    def diagonal_propagator(t):
        sys_u = (vecs * np.exp(-1j * eig.energies * t)) @ vecs.conj().T
        return sys_u, np.exp(-1j * probe_e * t)

    coupling = [t for t in h.coupling_terms.terms if t.coefficient != 0]
    rotations = [_Rotation(t) for t in coupling]
    commuting = _all_commute(coupling)
    mat = psi.reshape(-1, 2)
    if order == 1:
        u, ph = diagonal_propagator(dt)
        for _ in range(steps):
            mat = (u @ mat) * ph
            mat = _product(rotations, mat.ravel(), dt, 1, True).reshape(-1, 2)
        return mat.ravel()
    u_half, ph_half = diagonal_propagator(0.5 * dt)
    u_full, ph_full = diagonal_propagator(dt)
    mat = (u_half @ mat) * ph_half
    for step in range(steps):
        vec = _product(rotations, mat.ravel(), dt, 2, commuting)
        mat = vec.reshape(-1, 2)
        if step < steps - 1:
            mat = (u_full @ mat) * ph_full
        else:
            mat = (u_half @ mat) * ph_half
    return mat.ravel()


def probe_probability(psi: np.ndarray, outcome: int) -> float:
    """Probability that measuring the probe qubit gives ``outcome``."""
    if outcome not in (0, 1):
        raise ParseError(f"probe outcome must be 0 or 1, got {outcome!r}")
    p = float(np.sum(np.abs(psi[outcome::2]) ** 2))
    return min(max(p, 0.0), 1.0)


def partial_trace_probe(psi: np.ndarray) -> np.ndarray:
    """2x2 reduced density matrix of the probe, system traced out."""
    mat = np.asarray(psi, dtype=complex).reshape(-1, 2)
    return mat.T @ mat.conj()


def project_probe(psi: np.ndarray, outcome: int, min_probability: float = 1e-12) -> np.ndarray:
    """Renormalized joint state after the probe is found in ``outcome``."""
    p = probe_probability(psi, outcome)
    if p <= min_probability:
        raise ProjectionError(f"probe outcome {outcome} has probability {p:.3g}")
    out = np.zeros_like(psi)
    out[outcome::2] = psi[outcome::2]
    return out / math.sqrt(p)


def system_state(psi: np.ndarray, outcome: int) -> np.ndarray:
    """System-register state conditioned on the probe outcome (normalized)."""
    return project_probe(psi, outcome)[outcome::2]


def evolve(h: TotalHamiltonian, tau: float, psi: np.ndarray, method: str = "exact",
           plan: TrotterPlan | None = None) -> np.ndarray:
    if method == "exact":
        return exact_propagate(h, tau, psi)
    if method == "trotter":
        return trotter_propagate(h, tau, plan or TrotterPlan(), psi)
    raise ParseError(f"unknown propagation method {method!r}")
