import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from probespec.errors import ChainAbortedError, ParseError, SweepError
from probespec.fixtures import two_level, water_analog
from probespec.model import CouplingOperator
from probespec.oracle import TransitionRecord, eigendecompose, transition_table
from probespec.pauli import PauliSum
from probespec.spectroscopy import (
    ResolutionWarning,
    Spectrum,
    SweepPlan,
    ThresholdPolicy,
    WeakCouplingWarning,
    classify_transitions,
    detect_peaks,
    frequency_grid,
    on_peak_height,
    predict_spectrum,
    prepare_eigenstate_chain,
    rabi_predict,
    required_shots,
    run_point,
    run_sweep,
    validate_spectrum,
    weak_coupling_estimate,
)


def test_frequency_grid_midpoints():
    grid = frequency_grid(SweepPlan(0.4, 2.0, 200))
    assert len(grid) == 200
    assert grid[0] == (0, pytest.approx(0.404))
    assert grid[-1][1] == pytest.approx(1.996)


def test_resolution_warning():
    with pytest.warns(ResolutionWarning):
        frequency_grid(SweepPlan(0.4, 2.0, 200), min_width=1 / 500)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        frequency_grid(SweepPlan(0.4, 2.0, 2000), min_width=1 / 500)


@pytest.mark.parametrize("kwargs", [
    dict(omega_min=1, omega_max=1, j=3),
    dict(omega_min=0, omega_max=1, j=0),
    dict(omega_min=0, omega_max=1, j=3, mode="both"),
    dict(omega_min=0, omega_max=1, j=3, method="fast"),
    dict(omega_min=0, omega_max=1, j=3, shots=0),
])
def test_plan_validation(kwargs):
    with pytest.raises(ParseError):
        SweepPlan(**kwargs)


def test_run_point_on_resonance_pi_pulse():
    model = two_level(c=0.01)
    point = run_point(model.system, model.coupling, model.probe, 1.0, model.initial_state, SweepPlan(0.5, 1.5, 1))
    assert point.probability == pytest.approx(1.0, abs=1e-6)


def test_run_point_zero_coupling():
    model = two_level().with_(c=0.0)
    point = run_point(model.system, model.coupling, model.probe, 1.0, model.initial_state, SweepPlan(0.5, 1.5, 1))
    assert point.probability == 0.0


def test_emission_mode_from_excited_system():
    from probespec.model import basis_state

    model = two_level(c=0.01).with_(initial_state=basis_state("0", 1))
    plan = SweepPlan(0.5, 1.5, 1, mode="emission")
    point = run_point(model.system, model.coupling, model.probe, 1.0, model.initial_state, plan)
    assert point.probability == pytest.approx(1.0, abs=1e-6)


def test_sweep_is_deterministic_and_parallel_safe():
    model = two_level(c=0.005, tau=300)
    plan = SweepPlan(0.9, 1.1, 40, shots=200, seed=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        a = run_sweep(model, plan)
        b = run_sweep(model, plan, workers=4)
    assert a.points == b.points
    assert all(p.counts[1] == 200 for p in a.points)


@pytest.mark.filterwarnings("ignore::probespec.spectroscopy.ResolutionWarning")
def test_sweep_collects_failures(monkeypatch):
    monkeypatch.setenv("PROBESPEC_DENSE_CAP", "1")
    with pytest.raises(SweepError) as info:
        run_sweep(two_level(), SweepPlan(0.9, 1.1, 3))
    assert list(info.value.failures) == [0, 1, 2]
    assert info.value.code == "resource"


def test_sweep_matches_prediction_for_isolated_lines(water):
    plan = SweepPlan(0.4, 2.0, 200)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        sim = run_sweep(water, plan)
    table = transition_table(eigendecompose(water.system), water.coupling, water.initial_state, (0.3, 2.1))
    pred = predict_spectrum(table, plan, water.probe.c, water.probe.tau)
    assert np.max(np.abs(sim.probabilities - pred.probabilities)) < 0.05


@given(st.floats(-0.5, 0.5), st.floats(0, 2), st.floats(1, 1000))
def test_rabi_bounds(detuning, m, tau):
    rec = TransitionRecord(0, 1, 1.0, m, 0.7)
    p = rabi_predict(rec, 0.005, tau, 1.0 + detuning)
    assert 0.0 <= p <= 0.7 + 1e-15


def test_weak_coupling_warning():
    rec = TransitionRecord(0, 1, 1.0, 1.0, 1.0)
    with pytest.warns(WeakCouplingWarning):
        weak_coupling_estimate(rec, 0.005, 500)
    assert weak_coupling_estimate(rec, 0.001, 10) == pytest.approx(1e-4)


def test_detect_single_peak_and_fwhm():
    rec = TransitionRecord(0, 1, 1.0, 1.0, 1.0)
    c, tau = 0.001, 1000.0
    plan = SweepPlan(0.95, 1.05, 2001)
    spec = predict_spectrum([rec], plan, c, tau)
    (peak,) = detect_peaks(spec)
    assert peak.center == pytest.approx(1.0, abs=plan.spacing)
    # sinc^2 half-maximum full width, 2 * 2.7831 / tau
    assert peak.fwhm == pytest.approx(5.566 / tau, rel=0.05)


def test_detect_merges_side_lobes():
    rec = TransitionRecord(0, 1, 1.0, 1.0, 1.0)
    # pi pulse: the first side lobes reach about 12% of the peak
    spec = predict_spectrum([rec], SweepPlan(0.9, 1.1, 400), 0.005, math.pi / 0.01)
    assert len(detect_peaks(spec)) == 1
    assert len(detect_peaks(spec, ThresholdPolicy(merge_gap=1e-9, envelope_margin=None))) == 3


def test_detect_merges_far_lobes_of_overdriven_line():
    # Q tau = 4: the lobes at about 5 pi / tau lie beyond the distance rule
    rec = TransitionRecord(0, 1, 1.0, 0.8, 1.0)
    spec = predict_spectrum([rec], SweepPlan(0.9, 1.1, 200), 0.005, 500.0)
    assert len(detect_peaks(spec)) == 1
    assert len(detect_peaks(spec, ThresholdPolicy(envelope_margin=None))) == 3


def test_detect_two_separated_lines_and_threshold():
    recs = [TransitionRecord(0, 1, 1.0, 1.0, 1.0), TransitionRecord(0, 2, 1.5, 1.0, 0.5)]
    spec = predict_spectrum(recs, SweepPlan(0.8, 1.7, 900), 0.005, 314.0)
    peaks = detect_peaks(spec)
    assert [round(p.center, 2) for p in peaks] == [1.0, 1.5]
    (strong,) = detect_peaks(spec, ThresholdPolicy(relative=0.9))
    assert (strong.center, strong.height) == (peaks[0].center, peaks[0].height)
    assert detect_peaks((spec.omegas, np.zeros(len(spec)))) == []


def test_required_shots():
    assert required_shots(0.01) == 299
    assert required_shots(1.0) == 1
    assert required_shots(0.5, 0.75) == 2
    with pytest.raises(ParseError):
        required_shots(0.0)
    with pytest.raises(ParseError):
        required_shots(0.1, 1.0)


@given(st.floats(1e-4, 0.99), st.floats(0.5, 0.999))
def test_required_shots_is_minimal(p, conf):
    n = required_shots(p, conf)
    assert 1 - (1 - p) ** n >= conf - 1e-12
    if n > 1:
        assert 1 - (1 - p) ** (n - 1) < conf + 1e-12


def test_classify_transitions():
    recs = [
        TransitionRecord(0, 1, 1.0, 1.0, 1.0),
        TransitionRecord(0, 2, 1.2, 0.0, 1.0),
        TransitionRecord(0, 3, 1.4, 0.01, 0.01),
    ]
    expected, forbidden, visible = classify_transitions(recs, 0.005, 314.0, 0.05, 1e-4)
    assert expected == recs[:1]
    assert forbidden == recs[1:2]
    assert visible == [recs[0]]


def test_validate_water(water):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        spectrum = run_sweep(water, SweepPlan(0.4, 2.0, 200))
    report = validate_spectrum(water, spectrum)
    assert report.ok and not report.spurious
    assert all(p.assignment for p in report.peaks)


def test_validate_reports_selection_rule():
    model = two_level(c=0.01).with_(coupling=CouplingOperator(PauliSum.parse("1 Z")))
    spectrum = Spectrum(predict_spectrum([], SweepPlan(0.5, 1.5, 10), 0.01, 157).points,
                        SweepPlan(0.5, 1.5, 10), 0.01, 157)
    report = validate_spectrum(model, spectrum)
    assert len(report.selection_rule) == 1 and report.ok


def test_chain_two_level():
    model = two_level(c=0.01)
    result = prepare_eigenstate_chain(model, [1])
    assert result.fidelity == pytest.approx(1.0, abs=1e-6)
    back = prepare_eigenstate_chain(model, [1, 0])
    assert back.steps[1].mode == "emission"
    assert back.fidelity == pytest.approx(1.0, abs=1e-6)


def test_chain_errors():
    model = two_level(c=0.01)
    with pytest.raises(ParseError):
        prepare_eigenstate_chain(model, [(0, 0)])
    z_model = model.with_(coupling=CouplingOperator(PauliSum.parse("1 Z")))
    with pytest.raises(ChainAbortedError):
        prepare_eigenstate_chain(z_model, [1])
    # the excited state has no population to move from the ground state
    with pytest.raises(ChainAbortedError):
        prepare_eigenstate_chain(model, [(1, 0)], abort_below=0.5)


def test_chain_trotter_agrees_with_exact():
    model = water_analog(c=0.05, tau=50)
    eig = eigendecompose(model.system)
    table = transition_table(eig, model.coupling, model.initial_state, (0.4, 2.0))
    best = max(table, key=lambda r: r.weight)
    exact = prepare_eigenstate_chain(model, [best.j])
    trot = prepare_eigenstate_chain(model, [best.j], method="trotter")
    assert exact.fidelity > 0.9
    assert trot.fidelity == pytest.approx(exact.fidelity, abs=1e-4)


def test_on_peak_height_pi_pulse():
    rec = TransitionRecord(0, 1, 1.0, 0.5, 0.8)
    assert on_peak_height(rec, 0.01, math.pi / (2 * 0.01 * 0.5)) == pytest.approx(0.8)
