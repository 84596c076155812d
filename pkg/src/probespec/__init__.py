"""Probe-qubit spectroscopy simulator for energy-spectrum estimation."""

from .errors import ProbeSpecError
from .evolve import (
    TrotterPlan,
    apply_pauli_exponential,
    exact_propagate,
    joint_state,
    partial_trace_probe,
    probe_probability,
    project_probe,
    trotter_propagate,
)
from .model import (
    CouplingOperator,
    ProbeConfig,
    ProbeModel,
    SystemHamiltonian,
    TotalHamiltonian,
    assemble_total,
    basis_state,
    embed_dense,
    load_model,
    pauli_system,
    preset_coupling,
)
from .oracle import (
    EigenSystem,
    TransitionRecord,
    TransitionTable,
    detect_degeneracy,
    eigendecompose,
    lift_degeneracies,
    match_peaks,
    transition_table,
)
from .pauli import PauliString, PauliSum, canonicalize, is_hermitian, parse_pauli_term, to_dense
from .spectroscopy import (
    Peak,
    Spectrum,
    SpectrumPoint,
    SweepPlan,
    ThresholdPolicy,
    detect_peaks,
    frequency_grid,
    prepare_eigenstate_chain,
    rabi_predict,
    required_shots,
    run_point,
    run_sweep,
    weak_coupling_estimate,
)

__version__ = "0.1.0"
