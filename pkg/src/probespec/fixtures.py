"""Seeded model builders behind the shipped fixture files and the test suite.

The water molecule's configuration-interaction matrix is not available, so
``water_analog`` builds a stand-in with the same shape: 18 configurations in
a 5-qubit register, a reference configuration ``|00010>`` close to the ground
state, and excitation energies spread over the 0.4-2.0 Hartree sweep window.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .model import (
    ProbeConfig,
    ProbeModel,
    basis_state,
    embed_dense,
    load_model,
    model_to_dict,
    pauli_system,
    preset_coupling,
    uniform_x,
)
from .oracle import eigendecompose, transition_table
from .pauli import PauliString, PauliSum

WATER_SEED = 2012
WATER_DIM = 18
WATER_REFERENCE = 0b00010
# configurations one X flip away from the reference under the eq5/eq6 couplings
_SINGLE_FLIP_TARGETS = (0, 1, 3, 4, 6, 10)


def two_level(c: float = 0.005, tau: float | None = None) -> ProbeModel:
    """``H_S = Z/2`` (splitting 1 Hartree), ``A = X``, system in its ground state ``|1>``."""
    tau = math.pi / (2 * c) if tau is None else tau
    system = pauli_system(PauliSum.parse("0.5 Z"))
    coupling = uniform_x(1)
    return ProbeModel(system, coupling, ProbeConfig(c=c, tau=tau), basis_state("1", 1))


def water_analog_block(seed: int = WATER_SEED, mixing: float = 0.02) -> np.ndarray:
    """Seeded real-symmetric 18x18 configuration matrix (Hartree).

    The reference configuration sits at 0; the other 17 lie in
    [0.45, 2.5] with at least 0.05 between neighbours, the single-flip
    partners of the reference below 1.95 so their transitions fall in the
    sweep window. Off-diagonal couplings are sparse and ``O(mixing)``.
    """
    rng = np.random.default_rng(seed)
    others = [i for i in range(WATER_DIM) if i != WATER_REFERENCE]
    while True:
        levels = np.sort(rng.uniform(0.45, 2.5, size=len(others)))
        if np.min(np.diff(levels)) >= 0.05:
            break
    while True:
        perm = rng.permutation(others)
        energy = dict(zip(perm, levels))
        if all(energy[t] < 1.95 for t in _SINGLE_FLIP_TARGETS):
            break
    diag = np.zeros(WATER_DIM)
    for idx, e in energy.items():
        diag[idx] = e
    off = rng.normal(scale=mixing, size=(WATER_DIM, WATER_DIM))
    off *= rng.random((WATER_DIM, WATER_DIM)) < 0.4
    off = np.triu(off, 1)
    return np.diag(diag) + off + off.T


def water_analog(coupling: str = "eq5", c: float = 0.005, tau: float = 500.0,
                 initial: str = "00010", padding: float | None = None,
                 seed: int = WATER_SEED) -> ProbeModel:
    system = embed_dense(water_analog_block(seed), 5, padding)
    return ProbeModel(system, preset_coupling(coupling), ProbeConfig(c=c, tau=tau), basis_state(initial, 5))


def water_zero_overlap(seed: int = WATER_SEED) -> ProbeModel:
    """``|11111>`` start with the eq7 coupling, ``c = 0.002``, ``tau = 800``.

    ``|11111>`` is outside the 18 configurations, so it has no overlap with
    any of their eigenstates. Its (padding) energy is put 0.5 Hartree below
    the ground state so that its transitions into the low-lying eigenstates
    land inside the 0.4-2.0 window, at ``0.5 + (E_j - E_0)``.
    """
    block = water_analog_block(seed)
    padding = float(np.linalg.eigvalsh(block)[0]) - 0.5
    return water_analog("eq7", c=0.002, tau=800.0, initial="11111", padding=padding, seed=seed)


def random_pauli_sum(n: int, terms: int, rng: np.random.Generator, scale: float = 1.0) -> PauliSum:
    """Real-coefficient sum of ``terms`` random (possibly repeated) strings."""
    strings = ["".join(rng.choice(list("IXYZ"), size=n)) for _ in range(terms)]
    coefs = rng.normal(scale=scale, size=terms)
    return PauliSum.from_terms([PauliString(c, s) for c, s in zip(coefs, strings)])


def random_resolvable_model(
    n: int,
    seed: int,
    c: float = 0.005,
    tau: float = 500.0,
    window: tuple[float, float] = (0.3, 2.1),
    mixing: float = 0.03,
    separation: float = 0.05,
    min_gap: float = 0.03,
    max_tries: int = 200,
) -> ProbeModel:
    """Random dense ``n``-qubit model whose visible peaks can be told apart.

    ``H = diag(E) + mixing * G`` with ``G`` a seeded real Gaussian symmetric
    matrix, a random reference basis state at energy 0 and the rest uniform in
    ``window``; the probe couples through ``uniform_x(n)`` and the system starts
    in the reference state. Draws are rejected until the level spacing exceeds
    ``min_gap``, and every transition whose on-resonance Rabi height reaches
    2.5% of the largest one lies inside the window (away from its edges) and at
    least ``separation`` from every other such transition. A peak narrower than
    that separation cannot be resolved on any grid.
    """
    from .spectroscopy import on_peak_height

    rng = np.random.default_rng(np.random.SeedSequence([n, seed]))
    dim = 1 << n
    lo, hi = window
    for _ in range(max_tries):
        ref = int(rng.integers(dim))
        energies = rng.uniform(lo + 0.05, hi - 0.05, size=dim)
        energies[ref] = 0.0
        g = rng.normal(size=(dim, dim))
        h = np.diag(energies) + mixing * (g + g.T) / 2
        model = ProbeModel(embed_dense(h, n, None), uniform_x(n), ProbeConfig(c=c, tau=tau), basis_state(ref, n))
        eig = eigendecompose(model.system)
        if np.min(np.diff(eig.energies)) < min_gap:
            continue
        table = transition_table(eig, model.coupling, model.initial_state, (0.0, np.inf))
        heights = np.array([on_peak_height(r, c, tau) for r in table])
        if not len(heights) or heights.max() <= 0:
            continue
        strong = sorted(r.delta_e for r, hgt in zip(table, heights) if hgt >= 0.025 * heights.max())
        if any(not lo + 0.03 <= f <= hi - 0.03 for f in strong):
            continue
        if len(strong) > 1 and np.min(np.diff(strong)) < separation:
            continue
        return model
    raise RuntimeError(f"no resolvable {n}-qubit model found for seed {seed}")


# ------------------------------------------------------------- shipped files

FIXTURE_FILES = ("two_level.json", "water_analog.json", "water_analog_eq6.json", "water_zero_overlap.json")
COUPLING_FILES = ("coupling_eq5.json", "coupling_eq6.json", "coupling_eq7.json")


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("probespec") / "data" / name))


def load_fixture(name: str) -> ProbeModel:
    if not name.endswith(".json"):
        name += ".json"
    return load_model(fixture_path(name))


def build_fixture_dicts() -> dict[str, dict]:
    """Model-file dictionaries of every shipped fixture, regenerated from seeds."""
    two = two_level()
    water = water_analog()
    return {
        "two_level.json": model_to_dict(two, initial_state="1"),
        "water_analog.json": model_to_dict(water, initial_state="00010"),
        "water_analog_eq6.json": model_to_dict(water_analog("eq6"), initial_state="00010"),
        "water_zero_overlap.json": model_to_dict(water_zero_overlap(), initial_state="11111"),
        **{
            f"coupling_{name}.json": preset_coupling(name).op.to_json()
            for name in ("eq5", "eq6", "eq7")
        },
    }


def write_fixtures(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, data in build_fixture_dicts().items():
        path = directory / name
        path.write_text(json.dumps(data, indent=1) + "\n")
        written.append(path)
    return written
