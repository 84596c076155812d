"""Spectrum and report files: CSV, JSON and two-column plot data."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path

from .errors import ParseError
from .evolve import TrotterPlan
from .spectroscopy import Peak, Spectrum, SpectrumPoint, SweepPlan

CSV_HEADER = ["k", "omega", "probability"]
CSV_SHOT_HEADER = CSV_HEADER + ["flips", "shots"]


def spectrum_to_csv(spectrum: Spectrum) -> str:
    with_counts = any(p.counts is not None for p in spectrum.points)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_SHOT_HEADER if with_counts else CSV_HEADER)
    for p in spectrum.points:
        row = [p.k, repr(p.omega), repr(p.probability)]
        if with_counts:
            row += list(p.counts) if p.counts else ["", ""]
        writer.writerow(row)
    return buf.getvalue()


def spectrum_from_csv(text: str, c: float | None = None, tau: float | None = None) -> Spectrum:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("spectrum CSV is empty") from None
    if header not in (CSV_HEADER, CSV_SHOT_HEADER):
        raise ParseError(f"unexpected spectrum CSV header {','.join(header)!r}")
    points = []
    for line, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ParseError(f"spectrum CSV line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            counts = (int(row[3]), int(row[4])) if len(row) == 5 and row[3] != "" else None
            points.append(SpectrumPoint(int(row[0]), float(row[1]), float(row[2]), counts))
        except ValueError as exc:
            raise ParseError(f"spectrum CSV line {line}: {exc}") from None
    if not points:
        raise ParseError("spectrum CSV has no data rows")
    return Spectrum(tuple(points), c=c, tau=tau)


def _plan_to_dict(plan: SweepPlan | None) -> dict | None:
    return None if plan is None else asdict(plan)


def _plan_from_dict(data: dict | None) -> SweepPlan | None:
    if data is None:
        return None
    data = dict(data)
    if data.get("trotter") is not None:
        data["trotter"] = TrotterPlan(**data["trotter"])
    return SweepPlan(**data)


def spectrum_to_dict(spectrum: Spectrum, peaks: list[Peak] | None = None, extra: dict | None = None) -> dict:
    out = {
        "plan": _plan_to_dict(spectrum.plan),
        "c": spectrum.c,
        "tau": spectrum.tau,
        "points": [
            {"k": p.k, "omega": p.omega, "probability": p.probability,
             **({"flips": p.counts[0], "shots": p.counts[1]} if p.counts else {})}
            for p in spectrum.points
        ],
    }
    if peaks is not None:
        out["peaks"] = [p.to_dict() for p in peaks]
    if extra:
        out.update(extra)
    return out


def spectrum_from_dict(data: dict) -> Spectrum:
    try:
        points = tuple(
            SpectrumPoint(
                int(p["k"]), float(p["omega"]), float(p["probability"]),
                (int(p["flips"]), int(p["shots"])) if "flips" in p else None,
            )
            for p in data["points"]
        )
        plan = _plan_from_dict(data.get("plan"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed spectrum JSON: {exc}") from None
    if not points:
        raise ParseError("spectrum JSON has no points")
    return Spectrum(points, plan=plan, c=data.get("c"), tau=data.get("tau"))


def plot_data(spectrum: Spectrum) -> str:
    lines = ["# omega probability"]
    lines += [f"{p.omega!r} {p.probability!r}" for p in spectrum.points]
    return "\n".join(lines) + "\n"


def read_spectrum(path: str | Path, c: float | None = None, tau: float | None = None) -> Spectrum:
    """Load a spectrum from ``.json`` or CSV; ``c``/``tau`` fill in missing metadata."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read spectrum file {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not a text file") from None
    if path.suffix == ".json":
        try:
            spec = spectrum_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc.msg})") from None
        if spec.c is None or spec.tau is None:
            spec = Spectrum(spec.points, spec.plan, spec.c if spec.c is not None else c,
                            spec.tau if spec.tau is not None else tau)
        return spec
    return spectrum_from_csv(text, c=c, tau=tau)
