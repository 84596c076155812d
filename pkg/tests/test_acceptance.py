"""Acceptance criteria 1-9, each at its stated tolerance and runtime budget.

Every test prints one ``criterion N: PASS|FAIL`` line, also collected in the
"acceptance criteria" section of the pytest summary.
"""

import math
import time

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import binomtest

from probespec.cli import main as cli_main
from probespec.evolve import (
    TrotterPlan,
    evolve,
    exact_propagate,
    joint_state,
    probe_probability,
    project_probe,
    trotter_propagate,
)
from probespec.fixtures import (
    FIXTURE_FILES,
    fixture_path,
    load_fixture,
    random_pauli_sum,
    random_resolvable_model,
    two_level,
    water_analog,
    water_zero_overlap,
)
from probespec.model import ProbeConfig, assemble_total, basis_state, pauli_system, uniform_x
from probespec.oracle import TransitionRecord, detect_degeneracy, eigendecompose, transition_table
from probespec.spectroscopy import (
    SweepPlan,
    ThresholdPolicy,
    detect_peaks,
    match_tolerance,
    on_peak_height,
    prepare_eigenstate_chain,
    rabi_predict,
    required_shots,
    run_point,
    run_sweep,
    validate_spectrum,
    weak_coupling_estimate,
)

pytestmark = pytest.mark.filterwarnings("ignore::probespec.spectroscopy.ResolutionWarning")


def test_criterion_1_rabi_formula_exact(report_criterion):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        detuning = rng.uniform(-0.2, 0.2)
        q = rng.uniform(1e-4, 0.05)
        tau = rng.uniform(1.0, 3000.0)
        c, omega = 0.005, 1.0
        rec = TransitionRecord(0, 1, omega + detuning, q / (2 * c), 1.0)
        # rotating-frame block on {|i, excited>, |j, ground>}
        block = np.array([[0.0, q / 2], [q / 2, detuning]])
        exact = abs(expm(-1j * block * tau)[1, 0]) ** 2
        worst = max(worst, abs(rabi_predict(rec, c, tau, omega) - exact))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    report_criterion(1, ok, f"max |rabi - 2x2 block| = {worst:.2e} over 1000 triples, {elapsed:.2f} s")
    assert ok


def test_criterion_2_full_model_agreement(report_criterion):
    start = time.perf_counter()
    errors = {}
    for c in (0.005, 0.001):
        model = two_level(c=c)  # tau = pi / (2c)
        assert model.probe.c * model.probe.tau <= math.pi / 2 + 1e-12
        (rec,) = transition_table(eigendecompose(model.system), model.coupling, model.initial_state).records
        assert rec.delta_e == pytest.approx(1.0)
        plan = SweepPlan(0.5, 1.5, 1)
        worst = 0.0
        # on resonance and at detunings that scale with c
        for x in (0.0, -1.0, 1.0, -3.0, 3.0):
            omega = 1.0 + x * c
            point = run_point(model.system, model.coupling, model.probe, omega, model.initial_state, plan)
            worst = max(worst, abs(point.probability - rabi_predict(rec, c, model.probe.tau, omega)))
        errors[c] = worst
    elapsed = time.perf_counter() - start
    within = all(e <= 0.02 for e in errors.values())
    # 1e-12 allows for rounding once both deviations are at machine precision
    shrinking = errors[0.001] <= errors[0.005] + 1e-12
    ok = within and shrinking and elapsed < 1.0
    report_criterion(2, ok, f"|exact - rabi| = {errors[0.005]:.1e} (c=0.005), {errors[0.001]:.1e} (c=0.001), "
                            f"{elapsed:.2f} s")
    assert ok


def test_criterion_3_weak_coupling_estimate(report_criterion):
    start = time.perf_counter()
    checked, worst = 0, 0.0
    c, tau = 0.001, 100.0
    for seed in range(20):
        rng = np.random.default_rng(np.random.SeedSequence([3, seed]))
        system = pauli_system(random_pauli_sum(3, 6, rng, scale=0.5))
        psi = basis_state(int(rng.integers(8)), 3)
        table = transition_table(eigendecompose(system), uniform_x(3), psi)
        for rec in table:
            x = c * rec.matrix_element * tau  # Q tau / 2
            if 2 * x > 0.2 or rec.weight < 1e-12:
                continue
            exact = on_peak_height(rec, c, tau)
            estimate = weak_coupling_estimate(rec, c, tau)
            assert exact >= estimate * (1 - x**2 / 3) - 1e-15  # small-angle bound
            worst = max(worst, abs(estimate - exact) / exact)
            checked += 1
    elapsed = time.perf_counter() - start
    ok = checked > 0 and worst <= 0.02 and elapsed < 5.0
    report_criterion(3, ok, f"max relative gap {worst:.2e} over {checked} records with Q*tau <= 0.2, {elapsed:.2f} s")
    assert ok


def _resolvable_models():
    return [random_resolvable_model(n, seed) for n in (3, 4) for seed in range(10)]


def test_criterion_4_soundness_and_completeness(report_criterion):
    start = time.perf_counter()
    policy = ThresholdPolicy()
    c, tau = 0.005, 500.0
    failures = []
    n_expected = n_peaks = 0
    for idx, model in enumerate(_resolvable_models()):
        plan = SweepPlan(0.3, 2.1, 900)
        spectrum = run_sweep(model, plan)
        peaks = detect_peaks(spectrum, policy)
        threshold = policy.threshold(spectrum.probabilities)
        table = transition_table(eigendecompose(model.system), model.coupling, model.initial_state, (0.3, 2.1))
        tol = match_tolerance(c, tau, plan.spacing)
        heights = {rec: on_peak_height(rec, c, tau) for rec in table}
        expected = [r for r, h in heights.items() if h >= 2 * threshold]
        visible = [r for r, h in heights.items() if h >= policy.floor]
        n_expected += len(expected)
        n_peaks += len(peaks)
        for rec in expected:
            if not any(abs(p.center - rec.delta_e) <= tol(rec) for p in peaks):
                failures.append(f"model {idx}: no peak near {rec.label} at {rec.delta_e:.4f}")
        for p in peaks:
            if not any(abs(p.center - r.delta_e) <= tol(r) for r in visible):
                failures.append(f"model {idx}: spurious peak at {p.center:.4f}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 120.0
    detail = f"20 models, {n_expected} expected transitions, {n_peaks} peaks, {len(failures)} failures, {elapsed:.1f} s"
    if failures:
        detail += "; " + "; ".join(failures[:5])
    report_criterion(4, ok, detail)
    assert ok


def test_criterion_5_water_analog_scenario(tmp_path, capsys, report_criterion):
    start = time.perf_counter()
    model_file = fixture_path("water_analog.json")
    code = cli_main(["validate", "--model", str(model_file), "--omega-min", "0.4", "--omega-max", "2.0",
                     "--points", "200", "--c", "0.005", "--tau", "500", "--coupling-preset", "eq5",
                     "--initial-state", "00010", "--out-csv", str(tmp_path / "s.csv")])
    summary = capsys.readouterr().out.strip().splitlines()[-1]

    widths = {}
    for c, tau in ((0.005, 500.0), (0.001, 2500.0)):
        model = water_analog("eq5", c=c, tau=tau)
        spectrum = run_sweep(model, SweepPlan(0.4, 2.0, 200))
        widths[(c, tau)] = float(np.mean([p.fwhm for p in detect_peaks(spectrum)]))
    # the same comparison on a grid that resolves the narrow peaks
    fine = {}
    for c, tau in ((0.005, 500.0), (0.001, 2500.0)):
        model = water_analog("eq5", c=c, tau=tau)
        spectrum = run_sweep(model, SweepPlan(0.4, 2.0, 4000), workers=4)
        fine[(c, tau)] = float(np.mean([p.fwhm for p in detect_peaks(spectrum)]))
    elapsed = time.perf_counter() - start
    narrower = widths[(0.001, 2500.0)] < widths[(0.005, 500.0)]
    narrower_fine = fine[(0.001, 2500.0)] < fine[(0.005, 500.0)]
    ok = code == 0 and narrower and narrower_fine and elapsed < 300.0
    report_criterion(5, ok, f"validate exit {code} ({summary}); mean FWHM {widths[(0.005, 500.0)]:.4f} -> "
                            f"{widths[(0.001, 2500.0)]:.4f} (j=200), {fine[(0.005, 500.0)]:.4f} -> "
                            f"{fine[(0.001, 2500.0)]:.4f} (j=4000), {elapsed:.1f} s")
    assert ok


def test_criterion_6_zero_overlap_scenario(report_criterion):
    start = time.perf_counter()
    model = water_zero_overlap()
    eig = eigendecompose(model.system)
    assert eig.overlaps(model.initial_state)[~eig.padded].max() == 0.0
    spectrum = run_sweep(model, SweepPlan(0.4, 2.0, 200))
    report = validate_spectrum(model, spectrum)
    target = max(report.matched, key=lambda a: a.peak.height).record.j if report.matched else None
    fidelity = 0.0
    if target is not None:
        group = next(g for g in detect_degeneracy(eig) if target in g)
        assert group == [target]  # eigenspace fidelity is eigenvector fidelity
        result = prepare_eigenstate_chain(model, [target])
        vector = eig.vectors[:, target]
        fidelity = float(abs(np.vdot(vector, result.state)) ** 2)
    elapsed = time.perf_counter() - start
    ok = len(report.peaks) >= 1 and fidelity >= 0.95 and elapsed < 300.0
    report_criterion(6, ok, f"{len(report.peaks)} peaks from zero block overlap; one-step chain to eigenstate "
                            f"{target}: fidelity {fidelity:.4f}, {elapsed:.1f} s")
    assert ok


def test_criterion_7_trotter_convergence(report_criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    system = pauli_system(random_pauli_sum(3, 8, rng, scale=0.5))
    tau = 4.0
    h = assemble_total(system, ProbeConfig(omega=1.0, c=0.2, tau=tau), uniform_x(3))
    psi = joint_state(basis_state(0, 3), 1)
    exact = exact_propagate(h, tau, psi)
    steps = np.array([16, 32, 64, 128, 256, 512])
    errors = [np.linalg.norm(trotter_propagate(h, tau, TrotterPlan(2, int(r)), psi) - exact) for r in steps]
    slope = -np.polyfit(np.log(steps), np.log(errors), 1)[0]
    elapsed = time.perf_counter() - start
    ok = abs(slope - 2.0) <= 0.2 and elapsed < 60.0
    report_criterion(7, ok, f"order-2 log-log slope {slope:.3f} over r=16..512, {elapsed:.2f} s")
    assert ok


def test_criterion_8_shot_statistics(report_criterion):
    start = time.perf_counter()
    c = 0.001
    tau = math.asin(0.1) / c  # sin^2(c tau) = 0.01 on resonance
    model = two_level(c=c, tau=tau)
    exact = run_point(model.system, model.coupling, model.probe, 1.0, model.initial_state, SweepPlan(0.5, 1.5, 1))
    p = exact.probability
    shots = required_shots(p, 0.95)
    # 11 points spaced 2 pi / tau, centred on the line: neighbours sit on Rabi nodes
    spacing = 2 * math.pi / tau
    lo = 1.0 - 5.5 * spacing
    tol = match_tolerance(c, tau, spacing)(TransitionRecord(0, 1, 1.0, 1.0, 1.0))
    hits = 0
    for seed in range(200):
        spectrum = run_sweep(model, SweepPlan(lo, lo + 11 * spacing, 11, shots=shots, seed=seed))
        hits += any(abs(pk.center - 1.0) <= tol for pk in detect_peaks(spectrum))
    test = binomtest(hits, 200, 0.95, alternative="less")
    elapsed = time.perf_counter() - start
    ok = abs(p - 0.01) < 1e-3 and test.pvalue > 0.01 and elapsed < 120.0
    report_criterion(8, ok, f"p={p:.4f}, N={shots}: detected in {hits}/200 runs, one-sided binomial "
                            f"p-value {test.pvalue:.3f} vs 0.95, {elapsed:.1f} s")
    assert ok


def _all_fixture_models():
    models = {name: load_fixture(name) for name in FIXTURE_FILES}
    models["water_zero_overlap()"] = water_zero_overlap()
    models["random_resolvable_model(3, 0)"] = random_resolvable_model(3, 0)
    models["random_resolvable_model(4, 0)"] = random_resolvable_model(4, 0)
    return models


def test_criterion_9_unitarity_and_normalization(report_criterion):
    start = time.perf_counter()
    worst_norm = worst_herm = 0.0
    prob_ok = True
    paths = 0
    for name, model in _all_fixture_models().items():
        table = transition_table(eigendecompose(model.system), model.coupling, model.initial_state, (0.4, 2.0))
        omegas = [1.0] + [r.delta_e for r in list(table)[:2]]
        for omega in omegas:
            for init in ("excited", "ground"):
                probe = ProbeConfig(omega=omega, c=model.probe.c, tau=model.probe.tau, probe_init=init)
                h = assemble_total(model.system, probe, model.coupling)
                worst_herm = max(worst_herm, float(np.max(np.abs(h.matrix - h.matrix.conj().T))))
                psi0 = joint_state(model.initial_state, probe.init_bit)
                outs = [evolve(h, probe.tau, psi0, "exact")]
                if omega == omegas[0]:
                    outs += [evolve(h, probe.tau, psi0, "trotter", TrotterPlan(order, 4000)) for order in (1, 2)]
                for out in outs:
                    paths += 1
                    worst_norm = max(worst_norm, abs(np.linalg.norm(out) - 1))
                    for bit in (0, 1):
                        pr = probe_probability(out, bit)
                        prob_ok &= 0.0 <= pr <= 1.0
                        if pr > 1e-9:
                            worst_norm = max(worst_norm, abs(np.linalg.norm(project_probe(out, bit)) - 1))
        spectrum = run_sweep(model, SweepPlan(0.4, 2.0, 40, shots=100))
        prob_ok &= bool(np.all((spectrum.probabilities >= 0) & (spectrum.probabilities <= 1)))
        exact_spectrum = run_sweep(model, SweepPlan(0.4, 2.0, 40))
        prob_ok &= bool(np.all((exact_spectrum.probabilities >= 0) & (exact_spectrum.probabilities <= 1)))
    elapsed = time.perf_counter() - start
    ok = worst_norm <= 1e-10 and worst_herm <= 1e-12 and prob_ok
    report_criterion(9, ok, f"{paths} evolutions: max norm drift {worst_norm:.1e}, max Hermiticity defect "
                            f"{worst_herm:.1e}, probabilities in [0, 1]: {prob_ok}, {elapsed:.1f} s")
    assert ok
