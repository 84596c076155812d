"""Probe-qubit spectroscopy: sweep the probe frequency, read the probe, find peaks.

For each grid frequency the joint register starts in ``|psi_s> (x) |1>``
(absorption) or ``|psi_s> (x) |0>`` (emission), evolves for ``tau`` under
``H_S + (omega/2) sigma_z + c A (x) sigma_x`` and the probability that the
probe flipped is recorded. Peaks in that curve sit at transition frequencies
``|E_j - E_i|`` of the system.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ChainAbortedError, ParseError, SweepError
from .evolve import TrotterPlan, evolve, joint_state, probe_probability, project_probe
from .model import CouplingOperator, ProbeConfig, ProbeModel, SystemHamiltonian, assemble_total
from .oracle import TransitionRecord, detect_degeneracy, eigendecompose, transition_table

DEFAULT_FLOOR = 1e-4
DEFAULT_RELATIVE = 0.05
MODES = ("absorption", "emission")


class ResolutionWarning(UserWarning):
    """Grid spacing is coarser than the narrowest expected peak."""


class WeakCouplingWarning(UserWarning):
    """The small-angle decay estimate is used outside ``Q * tau << 1``."""


@dataclass(frozen=True)
class SweepPlan:
    omega_min: float
    omega_max: float
    j: int
    mode: str = "absorption"
    method: str = "exact"
    trotter: TrotterPlan | None = None
    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.omega_max > self.omega_min:
            raise ParseError(f"omega_max ({self.omega_max}) must exceed omega_min ({self.omega_min})")
        if self.j < 1:
            raise ParseError(f"interval count must be >= 1, got {self.j}")
        if self.mode not in MODES:
            raise ParseError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.method not in ("exact", "trotter"):
            raise ParseError(f"method must be 'exact' or 'trotter', got {self.method!r}")
        if self.shots is not None and self.shots < 1:
            raise ParseError(f"shots must be positive, got {self.shots}")

    @property
    def spacing(self) -> float:
        return (self.omega_max - self.omega_min) / self.j

    @property
    def probe_init(self) -> str:
        return "excited" if self.mode == "absorption" else "ground"


@dataclass(frozen=True)
class SpectrumPoint:
    k: int
    omega: float
    probability: float
    counts: tuple[int, int] | None = None


@dataclass(frozen=True)
class Spectrum:
    points: tuple[SpectrumPoint, ...]
    plan: SweepPlan | None = None
    c: float | None = None
    tau: float | None = None

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p.probability for p in self.points])

    @property
    def spacing(self) -> float:
        if self.plan is not None:
            return self.plan.spacing
        om = self.omegas
        return float(np.min(np.diff(om))) if len(om) > 1 else 0.0

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Peak:
    center: float
    height: float
    fwhm: float
    grid_span: tuple[int, int]
    assignment: str | None = None

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "height": self.height,
            "fwhm": self.fwhm,
            "grid_span": list(self.grid_span),
            "assignment": self.assignment,
        }


@dataclass(frozen=True)
class ThresholdPolicy:
    """Peak-detection thresholds.

    A point counts when it exceeds both ``floor`` and ``relative`` times the
    spectrum maximum. Runs of such points whose maxima lie within ``merge_gap``
    (frequency units) of a stronger run are one peak. ``None`` means
    ``4*pi/tau`` plus the grid spacing, which absorbs the first Rabi side lobe
    (at about ``3*pi/tau`` from the centre) of every transition.

    Strongly driven lines (``Q tau`` of a few) also have farther lobes above
    threshold. With ``envelope_margin`` set and ``tau`` known, a Rabi line is
    fitted to each accepted run and a weaker run whose maximum stays below
    ``envelope_margin`` times the fitted envelope ``ov * Q^2 / (Q^2 + d^2)`` is
    folded in as well.
    """

    floor: float = DEFAULT_FLOOR
    relative: float = DEFAULT_RELATIVE
    merge_gap: float | None = None
    envelope_margin: float | None = 1.5

    def threshold(self, probabilities: np.ndarray) -> float:
        top = float(np.max(probabilities)) if len(probabilities) else 0.0
        return max(self.floor, self.relative * top)


def peak_width(c: float, matrix_element: float, tau: float) -> float:
    """Resolution of a peak, ``max(c * M, 1/tau)``."""
    return max(c * matrix_element, 1.0 / tau)


def match_tolerance(c: float, tau: float, spacing: float):
    """Per-record matching tolerance ``max(2 c M, 2/tau) + spacing``."""

    def tol(rec: TransitionRecord) -> float:
        return max(2 * c * rec.matrix_element, 2.0 / tau) + spacing

    return tol


def frequency_grid(plan: SweepPlan, min_width: float | None = None) -> list[tuple[int, float]]:
    """Interval centres ``omega_min + (k + 1/2) * d_omega`` for ``k = 0..j-1``.

    Warns with :class:`ResolutionWarning` when ``d_omega`` exceeds ``min_width``.
    """
    if plan.j < 1:
        raise ParseError("interval count must be >= 1")
    d = plan.spacing
    if min_width is not None and d > min_width:
        warnings.warn(
            f"grid spacing {d:.3g} exceeds the expected peak width {min_width:.3g}; peaks may be missed",
            ResolutionWarning,
            stacklevel=2,
        )
    return [(k, plan.omega_min + (k + 0.5) * d) for k in range(plan.j)]


def _rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, k]))


def run_point(
    h_s: SystemHamiltonian,
    a: CouplingOperator,
    probe: ProbeConfig,
    omega_k: float,
    psi_s: np.ndarray,
    plan: SweepPlan,
    k: int = 0,
) -> SpectrumPoint:
    """Evolve ``|psi_s> (x) probe`` at frequency ``omega_k`` and read the probe flip probability."""
    probe = replace(probe, omega=float(omega_k), probe_init=plan.probe_init)
    start = probe.init_bit
    if probe.c == 0:
        p = 0.0
    else:
        h = assemble_total(h_s, probe, a)
        psi = evolve(h, probe.tau, joint_state(psi_s, start), plan.method, plan.trotter)
        p = probe_probability(psi, 1 - start)
    counts = None
    if plan.shots is not None:
        flips = int(_rng(plan.seed, k).binomial(plan.shots, p))
        counts = (flips, plan.shots)
        p = flips / plan.shots
    return SpectrumPoint(k=k, omega=float(omega_k), probability=p, counts=counts)


def run_sweep(model: ProbeModel, plan: SweepPlan, workers: int = 1) -> Spectrum:
    """One :class:`SpectrumPoint` per grid frequency, ordered by ``k``.

    Points are independent; ``workers > 1`` evaluates them on a thread pool
    without changing the result. Failures are collected and raised together
    as :class:`SweepError`.
    """
    grid = frequency_grid(plan, min_width=1.0 / model.probe.tau)

    def task(item):
        k, omega = item
        try:
            return run_point(model.system, model.coupling, model.probe, omega, model.initial_state, plan, k)
        except Exception as exc:  # noqa: BLE001 - reported per point below
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, grid))
    else:
        results = [task(item) for item in grid]
    failures = {k: r for (k, _), r in zip(grid, results) if isinstance(r, Exception)}
    if failures:
        raise SweepError(failures)
    return Spectrum(tuple(results), plan=plan, c=model.probe.c, tau=model.probe.tau)


def rabi_predict(rec: TransitionRecord, c: float, tau: float, omega_k: float) -> float:
    """Single-transition Rabi formula for the flip probability.

    ``sin^2(W tau / 2) * Q^2 / W^2 * overlap`` with ``Q = 2 c M``,
    ``W = sqrt(Q^2 + D^2)`` and detuning ``D = delta_e - omega_k``.
    """
    q = 2.0 * c * rec.matrix_element
    detuning = rec.delta_e - omega_k
    rabi = math.hypot(q, detuning)
    if rabi == 0.0:
        return 0.0
    return math.sin(0.5 * rabi * tau) ** 2 * (q / rabi) ** 2 * rec.overlap


def weak_coupling_estimate(rec: TransitionRecord, c: float, tau: float) -> float:
    """On-resonance height for ``Q tau << 1``: ``c^2 tau^2 M^2 overlap``."""
    q_tau = 2.0 * c * rec.matrix_element * tau
    if q_tau > 0.5:
        warnings.warn(f"Q*tau = {q_tau:.3g} is outside the weak-coupling regime", WeakCouplingWarning, stacklevel=2)
    return (c * tau * rec.matrix_element) ** 2 * rec.overlap


def on_peak_height(rec: TransitionRecord, c: float, tau: float) -> float:
    return rabi_predict(rec, c, tau, rec.delta_e)


def predict_spectrum(records: Iterable[TransitionRecord], plan: SweepPlan, c: float, tau: float) -> Spectrum:
    """Rabi-formula spectrum summed over ``records``, on the sweep grid."""
    records = list(records)
    points = []
    for k, omega in frequency_grid(plan):
        p = sum(rabi_predict(r, c, tau, omega) for r in records)
        points.append(SpectrumPoint(k, omega, min(p, 1.0)))
    return Spectrum(tuple(points), plan=plan, c=c, tau=tau)


def _crossing(om: np.ndarray, p: np.ndarray, inside: int, outside: int, half: float) -> float:
    """Frequency where p drops to ``half`` between two adjacent grid points."""
    pi, po = p[inside], p[outside]
    if pi == po:
        return om[outside]
    t = (pi - half) / (pi - po)
    return om[inside] + t * (om[outside] - om[inside])


def _fit_envelope(om, p, start, end, top, tau, spacing):
    """Least-squares Rabi line through one run; returns its side-lobe envelope.

    The centre is scanned over a few sub-grid offsets and ``Q`` over a
    geometric grid; for each pair the overlap is the linear least-squares
    amplitude, clipped to ``[0, 1]``.
    """
    lo, hi = max(start - 2, 0), min(end + 2, len(p) - 1)
    x, y = om[lo:hi + 1], p[lo:hi + 1]
    q = np.geomspace(0.05 / tau, 50.0 / tau, 300)[:, None]
    best = (np.inf, 0.0, float(q[0, 0]))
    for shift in np.linspace(-0.5, 0.5, 5) * spacing:
        d = x[None, :] - (om[top] + shift)
        rabi = np.sqrt(q**2 + d**2)
        shape = (q / rabi) ** 2 * np.sin(0.5 * rabi * tau) ** 2
        norm = np.sum(shape**2, axis=1)
        amp = np.clip(np.divide(shape @ y, norm, out=np.zeros_like(norm), where=norm > 0), 0.0, 1.0)
        resid = np.sum((y[None, :] - amp[:, None] * shape) ** 2, axis=1)
        k = int(np.argmin(resid))
        if resid[k] < best[0]:
            best = (float(resid[k]), float(amp[k]), float(q[k, 0]))
    _, amp, qbest = best
    return lambda distance: amp * qbest**2 / (qbest**2 + distance**2)


def detect_peaks(spectrum: Spectrum | tuple, policy: ThresholdPolicy | None = None, tau: float | None = None) -> list[Peak]:
    """Local maxima above threshold, with FWHM from linear interpolation.

    ``spectrum`` is a :class:`Spectrum` or an ``(omegas, probabilities)`` pair.
    """
    policy = policy or ThresholdPolicy()
    if isinstance(spectrum, Spectrum):
        om, p = spectrum.omegas, spectrum.probabilities
        tau = spectrum.tau if tau is None else tau
    else:
        om, p = (np.asarray(x, dtype=float) for x in spectrum)
    if len(p) == 0:
        return []
    thr = policy.threshold(p)
    merge_gap = policy.merge_gap

    spacing = float(np.min(np.diff(om))) if len(om) > 1 else 0.0
    if merge_gap is None:
        merge_gap = 4 * math.pi / tau + spacing if tau else 0.0

    above = p > thr
    runs = []
    k = 0
    while k < len(p):
        if above[k]:
            start = k
            while k + 1 < len(p) and above[k + 1]:
                k += 1
            runs.append((start, k, start + int(np.argmax(p[start:k + 1]))))
        k += 1
    # strongest runs first; a weaker run whose maximum lies within merge_gap
    # of an accepted one, or under its fitted side-lobe envelope, is folded in
    use_envelope = bool(tau) and policy.envelope_margin is not None
    accepted: list[list] = []
    for start, end, top in sorted(runs, key=lambda r: -p[r[2]]):
        for acc in accepted:
            distance = abs(om[top] - om[acc[2]])
            lobe = use_envelope and p[top] <= policy.envelope_margin * acc[3](distance)
            if distance <= merge_gap or lobe:
                acc[0], acc[1] = min(acc[0], start), max(acc[1], end)
                break
        else:
            envelope = _fit_envelope(om, p, start, end, top, tau, spacing) if use_envelope else None
            accepted.append([start, end, top, envelope])

    peaks = []
    for start, end, top, _ in sorted(accepted, key=lambda r: r[2]):
        height = float(p[top])
        half = 0.5 * height
        left = top
        while left > 0 and p[left - 1] >= half:
            left -= 1
        right = top
        while right < len(p) - 1 and p[right + 1] >= half:
            right += 1
        lo = _crossing(om, p, left, left - 1, half) if left > 0 else om[left]
        hi = _crossing(om, p, right, right + 1, half) if right < len(p) - 1 else om[right]
        fwhm = float(hi - lo)
        if fwhm <= 0:
            fwhm = spacing or 1e-12
        peaks.append(Peak(center=float(om[top]), height=height, fwhm=fwhm, grid_span=(int(start), int(end))))
    return peaks


def required_shots(p: float, confidence: float = 0.95) -> int:
    """Fewest repetitions that show at least one flip with probability ``confidence``."""
    if not p > 0:
        raise ParseError(f"flip probability must be positive, got {p}")
    if not 0 < confidence < 1:
        raise ParseError(f"confidence must be in (0, 1), got {confidence}")
    if p >= 1:
        return 1
    return max(1, math.ceil(math.log(1 - confidence) / math.log1p(-p) - 1e-12))


# ------------------------------------------------------- eigenstate preparation


@dataclass(frozen=True)
class ChainStep:
    initial: int
    target: int
    omega: float
    tau: float
    mode: str
    probability: float
    fidelity: float


@dataclass(frozen=True)
class ChainResult:
    state: np.ndarray
    steps: tuple[ChainStep, ...]
    fidelity: float
    target: int | None


def _eigenspace_fidelity(eig, index: int, psi: np.ndarray, gap_tol: float) -> float:
    group = next(g for g in detect_degeneracy(eig, gap_tol) if index in g)
    return float(min(np.sum(eig.overlaps(psi)[group]), 1.0))


def prepare_eigenstate_chain(
    model: ProbeModel,
    path: Sequence[int | tuple[int, int]],
    abort_below: float = 0.05,
    method: str = "exact",
    trotter: TrotterPlan | None = None,
    gap_tol: float = 1e-8,
) -> ChainResult:
    """Walk the system through eigenstates by successive probe-flip transitions.

    Each path entry is a target eigenstate index ``j`` (the current state is
    taken to be the eigenstate it overlaps most) or an explicit ``(i, j)``
    pair. The probe is tuned to ``|E_j - E_i|``, started excited for upward
    steps and in the ground state for downward ones, evolved for the Rabi
    pi-time ``pi / (2 c s)`` and the flip outcome is post-selected. ``s`` is
    ``|<phi_j|A|phi_i>|`` for non-degenerate levels and in general the largest
    singular value of ``A`` between the two degenerate eigenspaces, which is
    the Rabi coupling of the bright state. Fidelities are measured against
    the eigenspace of the target energy.
    """
    eig = eigendecompose(model.system)
    a_eig = eig.vectors.conj().T @ model.coupling.matrix @ eig.vectors
    groups = detect_degeneracy(eig, gap_tol)
    group_of = {idx: g for g in groups for idx in g}
    psi = np.asarray(model.initial_state, dtype=complex)
    c = model.probe.c
    steps = []
    target = None
    for number, entry in enumerate(path):
        if isinstance(entry, (tuple, list)):
            initial, target = (int(x) for x in entry)
        else:
            initial, target = int(np.argmax(eig.overlaps(psi))), int(entry)
        if group_of[initial] is group_of[target]:
            raise ParseError(f"step {number}: eigenstates {initial} and {target} are degenerate")
        coupling = float(np.linalg.norm(a_eig[np.ix_(group_of[target], group_of[initial])], 2))
        if coupling == 0 or c == 0:
            raise ChainAbortedError(number, 0.0, f"step {number}: transition {initial}->{target} has zero coupling")
        gap = float(eig.energies[target] - eig.energies[initial])
        mode = "absorption" if gap > 0 else "emission"
        tau = math.pi / (2 * c * coupling)
        probe = ProbeConfig(omega=abs(gap), c=c, tau=tau, probe_init="excited" if gap > 0 else "ground")
        h = assemble_total(model.system, probe, model.coupling)
        start = probe.init_bit
        out = evolve(h, tau, joint_state(psi, start), method, trotter)
        flip = probe_probability(out, 1 - start)
        if flip < abort_below:
            raise ChainAbortedError(number, flip)
        psi = project_probe(out, 1 - start)[1 - start::2]
        steps.append(ChainStep(initial, target, abs(gap), tau, mode, flip,
                               _eigenspace_fidelity(eig, target, psi, gap_tol)))
    fidelity = steps[-1].fidelity if steps else float(np.max(eig.overlaps(psi)))
    return ChainResult(psi, tuple(steps), fidelity, target)


# ----------------------------------------------------------- validation helper


@dataclass
class ValidationReport:
    peaks: list[Peak]
    threshold: float
    matched: list = field(default_factory=list)
    missing: list[TransitionRecord] = field(default_factory=list)
    selection_rule: list[TransitionRecord] = field(default_factory=list)
    spurious: list[Peak] = field(default_factory=list)
    expected: list[TransitionRecord] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.missing


def classify_transitions(records, c, tau, threshold, floor=DEFAULT_FLOOR, selection_tol=1e-9):
    """Split records into (expected, selection-rule, visible) lists.

    ``expected``: predicted on-peak height at least twice the detection
    threshold. ``selection_rule``: matrix element below ``selection_tol`` yet
    with initial-state population, so the peak would otherwise have been
    expected. ``visible``: predicted height above the absolute ``floor``, the
    set detected peaks may legitimately be attributed to.
    """
    expected, forbidden, visible = [], [], []
    for r in records:
        h = on_peak_height(r, c, tau)
        if r.matrix_element < selection_tol:
            # a full Rabi flip would have reached this height
            if r.overlap >= 2 * threshold:
                forbidden.append(r)
            continue
        if h >= floor:
            visible.append(r)
        if h >= 2 * threshold:
            expected.append(r)
    return expected, forbidden, visible


def validate_spectrum(model: ProbeModel, spectrum: Spectrum, policy: ThresholdPolicy | None = None) -> ValidationReport:
    """Compare detected peaks with the oracle transition table."""
    from .oracle import match_peaks

    policy = policy or ThresholdPolicy()
    plan = spectrum.plan
    c = spectrum.c if spectrum.c is not None else model.probe.c
    tau = spectrum.tau if spectrum.tau is not None else model.probe.tau
    mode = plan.mode if plan is not None else "absorption"
    om = spectrum.omegas
    spacing = spectrum.spacing
    window = (float(om[0]) - spacing / 2, float(om[-1]) + spacing / 2)
    table = transition_table(eigendecompose(model.system), model.coupling, model.initial_state, window, mode)
    peaks = detect_peaks(spectrum, policy)
    thr = policy.threshold(spectrum.probabilities)
    expected, forbidden, visible = classify_transitions(table, c, tau, thr, policy.floor)
    # the candidate whose Rabi line best explains the observed height wins
    report = match_peaks(peaks, visible, match_tolerance(c, tau, spacing), expected=expected,
                         score=lambda r, center: rabi_predict(r, c, tau, center))
    labelled = []
    for a in report.assignments:
        label = a.record.label if a.record is not None else None
        labelled.append(replace(a.peak, assignment=label))
    matched = [a for a in report.assignments if a.record is not None]
    return ValidationReport(
        peaks=labelled,
        threshold=thr,
        matched=matched,
        missing=report.missing,
        selection_rule=forbidden,
        spurious=report.spurious,
        expected=expected,
    )
