"""Command-line entry point: ``probespec {sweep,predict,validate,prepare}``.

Every failure prints a single line ``probespec: error[<kind>]: <message>`` to
stderr and exits with the code listed in :data:`EXIT_CODES`.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChainAbortedError, ProbeSpecError
from .evolve import TrotterPlan
from .files import plot_data, read_spectrum, spectrum_to_csv, spectrum_to_dict
from .model import ProbeModel, basis_state, load_model, preset_coupling
from .oracle import eigendecompose, transition_table
from .spectroscopy import (
    ResolutionWarning,
    Spectrum,
    SweepPlan,
    ThresholdPolicy,
    detect_peaks,
    predict_spectrum,
    prepare_eigenstate_chain,
    run_sweep,
    validate_spectrum,
)

EXIT_OK = 0
EXIT_NO_PEAKS = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INPUT = 4
EXIT_RESOURCE = 5
EXIT_PROPAGATION = 6
EXIT_MISSING = 7
EXIT_CHAIN = 8

EXIT_CODES = {
    "io": EXIT_IO,
    "parse": EXIT_INPUT,
    "structure": EXIT_INPUT,
    "dimension": EXIT_INPUT,
    "validation": EXIT_INPUT,
    "projection": EXIT_PROPAGATION,
    "resource": EXIT_RESOURCE,
    "propagation": EXIT_PROPAGATION,
    "chain-aborted": EXIT_CHAIN,
}


@dataclass
class RunConfig:
    model: Path
    omega_min: float = 0.4
    omega_max: float = 2.0
    points: int = 200
    mode: str | None = None
    method: str = "exact"
    trotter_steps: int | None = None
    trotter_order: int = 2
    shots: int | None = None
    seed: int = 0
    c: float | None = None
    tau: float | None = None
    coupling_preset: str | None = None
    initial_state: str | None = None
    out_csv: Path | None = None
    out_json: Path | None = None
    out_plot: Path | None = None
    threshold: float = 0.05
    floor: float = 1e-4
    merge_gap: float | None = None
    envelope_margin: float = 1.5
    workers: int = 1
    spectrum: Path | None = None
    path: list = field(default_factory=list)

    def load(self) -> ProbeModel:
        if not self.model.exists():
            raise FileNotFoundError(f"model file not found: {self.model}")
        model = load_model(self.model)
        changes = {}
        if self.c is not None:
            changes["c"] = self.c
        if self.tau is not None:
            changes["tau"] = self.tau
        if self.coupling_preset:
            changes["coupling"] = preset_coupling(self.coupling_preset, model.n)
        if self.initial_state:
            changes["initial_state"] = basis_state(self.initial_state, model.n)
        return model.with_(**changes) if changes else model

    def plan(self, model: ProbeModel) -> SweepPlan:
        mode = self.mode or ("absorption" if model.probe.probe_init == "excited" else "emission")
        trotter = TrotterPlan(self.trotter_order, self.trotter_steps) if self.method == "trotter" else None
        return SweepPlan(self.omega_min, self.omega_max, self.points, mode, self.method, trotter, self.shots, self.seed)

    def policy(self) -> ThresholdPolicy:
        margin = self.envelope_margin if self.envelope_margin > 0 else None
        return ThresholdPolicy(floor=self.floor, relative=self.threshold, merge_gap=self.merge_gap,
                               envelope_margin=margin)

    def outputs(self, default_stem: str) -> tuple[Path, Path, Path]:
        csv_path = self.out_csv or Path(f"{default_stem}.csv")
        json_path = self.out_json or csv_path.with_suffix(".json")
        plot_path = self.out_plot or csv_path.with_suffix(".dat")
        return csv_path, json_path, plot_path


def _parse_path(text: str) -> list:
    steps = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        if ":" in item:
            i, j = item.split(":")
            steps.append((int(i), int(j)))
        else:
            steps.append(int(item))
    return steps


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="probespec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", type=Path, required=True, help="model JSON file")
    common.add_argument("--omega-min", type=float, default=0.4)
    common.add_argument("--omega-max", type=float, default=2.0)
    common.add_argument("--points", type=int, default=200, help="number of frequency intervals j")
    common.add_argument("--c", type=float, help="override coupling strength")
    common.add_argument("--tau", type=float, help="override evolution time")
    common.add_argument("--mode", choices=["absorption", "emission"])
    common.add_argument("--method", choices=["exact", "trotter"], default="exact")
    common.add_argument("--trotter-steps", type=int)
    common.add_argument("--trotter-order", type=int, choices=[1, 2], default=2)
    common.add_argument("--shots", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--coupling-preset", choices=["eq5", "eq6", "eq7", "uniform-x"])
    common.add_argument("--initial-state", help="system bitstring, leftmost = highest qubit")
    common.add_argument("--out-csv", type=Path)
    common.add_argument("--out-json", type=Path)
    common.add_argument("--out-plot", type=Path)
    common.add_argument("--threshold", type=float, default=0.05, help="relative peak threshold")
    common.add_argument("--floor", type=float, default=1e-4, help="absolute peak floor")
    common.add_argument("--merge-gap", type=float, help="side-lobe merge distance (default 4 pi/tau + spacing)")
    common.add_argument("--envelope-margin", type=float, default=1.5,
                        help="fold runs under this multiple of a stronger line's lobe envelope; 0 disables")
    common.add_argument("--workers", type=int, default=1)

    sub.add_parser("sweep", parents=[common], help="simulate the probe sweep")
    sub.add_parser("predict", parents=[common], help="closed-form Rabi spectrum from the oracle")
    val = sub.add_parser("validate", parents=[common], help="compare detected peaks with the oracle")
    val.add_argument("--spectrum", type=Path, help="validate this spectrum file instead of sweeping")
    prep = sub.add_parser("prepare", parents=[common], help="prepare an eigenstate by chained transitions")
    prep.add_argument("--path", default="", help="comma-separated target indices or i:j pairs")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        model=args.model,
        omega_min=args.omega_min,
        omega_max=args.omega_max,
        points=args.points,
        mode=args.mode,
        method=args.method,
        trotter_steps=args.trotter_steps,
        trotter_order=args.trotter_order,
        shots=args.shots,
        seed=args.seed,
        c=args.c,
        tau=args.tau,
        coupling_preset=args.coupling_preset,
        initial_state=args.initial_state,
        out_csv=args.out_csv,
        out_json=args.out_json,
        out_plot=args.out_plot,
        threshold=args.threshold,
        floor=args.floor,
        merge_gap=args.merge_gap,
        envelope_margin=args.envelope_margin,
        workers=args.workers,
        spectrum=getattr(args, "spectrum", None),
        path=_parse_path(getattr(args, "path", "") or ""),
    )


def _peak_table(peaks, out) -> None:
    print(f"{'center':>10} {'height':>10} {'fwhm':>10}  assignment", file=out)
    for p in peaks:
        print(f"{p.center:10.5f} {p.height:10.5f} {p.fwhm:10.5f}  {p.assignment or '-'}", file=out)
    if not peaks:
        print("(no peaks)", file=out)


def _write_spectrum(config: RunConfig, spectrum: Spectrum, peaks, stem: str, extra=None) -> None:
    csv_path, json_path, plot_path = config.outputs(stem)
    payload = {
        csv_path: spectrum_to_csv(spectrum),
        json_path: json.dumps(spectrum_to_dict(spectrum, peaks, extra), indent=1) + "\n",
        plot_path: plot_data(spectrum),
    }
    for path, text in payload.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def cmd_sweep(config: RunConfig) -> int:
    out = sys.stdout
    model = config.load()
    spectrum = run_sweep(model, config.plan(model), workers=config.workers)
    peaks = detect_peaks(spectrum, config.policy())
    _write_spectrum(config, spectrum, peaks, "spectrum")
    _peak_table(peaks, out)
    return EXIT_OK if peaks else EXIT_NO_PEAKS


def cmd_predict(config: RunConfig) -> int:
    out = sys.stdout
    model = config.load()
    plan = config.plan(model)
    table = transition_table(
        eigendecompose(model.system), model.coupling, model.initial_state,
        (plan.omega_min, plan.omega_max), plan.mode,
    )
    spectrum = predict_spectrum(table, plan, model.probe.c, model.probe.tau)
    peaks = detect_peaks(spectrum, config.policy())
    _write_spectrum(config, spectrum, peaks, "predicted", {"transitions": table.to_dict()})
    _peak_table(peaks, out)
    return EXIT_OK if peaks else EXIT_NO_PEAKS


def cmd_validate(config: RunConfig) -> int:
    out = sys.stdout
    model = config.load()
    if config.spectrum is not None:
        spectrum = read_spectrum(config.spectrum, c=model.probe.c, tau=model.probe.tau)
    else:
        spectrum = run_sweep(model, config.plan(model), workers=config.workers)
    report = validate_spectrum(model, spectrum, config.policy())
    _peak_table(report.peaks, out)
    for r in report.missing:
        print(f"MISSING {r.label} at {r.delta_e:.5f}", file=out)
    for r in report.selection_rule:
        print(f"NOTE {r.label} at {r.delta_e:.5f}: expected-missing by selection rule (zero matrix element)", file=out)
    for p in report.spurious:
        print(f"SPURIOUS peak at {p.center:.5f}", file=out)
    print(f"matched {len(report.matched)}, missing {len(report.missing)}, "
          f"selection-rule {len(report.selection_rule)}, spurious {len(report.spurious)}", file=out)
    if config.out_json is not None:
        data = {
            "threshold": report.threshold,
            "peaks": [p.to_dict() for p in report.peaks],
            "expected": [r.to_dict() for r in report.expected],
            "missing": [r.to_dict() for r in report.missing],
            "selection_rule": [r.to_dict() for r in report.selection_rule],
            "spurious": [p.to_dict() for p in report.spurious],
        }
        config.out_json.write_text(json.dumps(data, indent=1) + "\n")
    return EXIT_OK if report.ok else EXIT_MISSING


def cmd_prepare(config: RunConfig) -> int:
    out = sys.stdout
    model = config.load()
    result = prepare_eigenstate_chain(model, config.path)
    for n, step in enumerate(result.steps):
        print(f"step {n}: {step.initial}->{step.target} omega={step.omega:.5f} tau={step.tau:.1f} "
              f"{step.mode} p_flip={step.probability:.4f} fidelity={step.fidelity:.6f}", file=out)
    print(f"final fidelity {result.fidelity:.6f}", file=out)
    if config.out_json is not None:
        data = {
            "fidelity": result.fidelity,
            "target": result.target,
            "steps": [vars(s) | {"tau": float(s.tau)} for s in result.steps],
            "amplitudes": [[a.real, a.imag] for a in np.asarray(result.state)],
        }
        config.out_json.write_text(json.dumps(data, indent=1) + "\n")
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "predict": cmd_predict, "validate": cmd_validate, "prepare": cmd_prepare}


def _fail(kind: str, message: str) -> None:
    print(f"probespec: error[{kind}]: {' '.join(str(message).split())}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config(args)
    except ValueError as exc:
        _fail("parse", exc)
        return EXIT_INPUT
    warnings.simplefilter("ignore", ResolutionWarning)
    try:
        return COMMANDS[args.command](config)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        _fail("io", exc)
        return EXIT_IO
    except ChainAbortedError as exc:
        _fail(exc.code, exc)
        return EXIT_CHAIN
    except ProbeSpecError as exc:
        _fail(exc.code, exc)
        return EXIT_CODES.get(exc.code, EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
