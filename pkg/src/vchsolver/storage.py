"""On-disk formats: field snapshots, diagnostic CSVs and sweep report directories.

Snapshot layout (little-endian)::

    b"VCHF"  magic
    u16      format version (1)
    u8       spatial dimension n
    u32 * n  n_modes per axis
    f64      time
    f64 * 2m (real, imag) pairs of the half spectrum

The ``m`` coefficients are in lexicographic order of the mode index
``(k_0, ..., k_{n-1})`` with ``-N/2 <= k_a < N/2`` for the leading axes and
``0 <= k_{n-1} <= N/2`` for the last one.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsRecord
from .spectral import BasisSpec, SpectralField, hermitian_defect

MAGIC = b"VCHF"
SNAPSHOT_VERSION = 1
REPORT_VERSION = 1
_HEAD = struct.Struct("<4sHB")
_TIME = struct.Struct("<d")


class SnapshotError(ValueError):
    pass


class SnapshotFormatError(SnapshotError):
    pass


class SnapshotPayloadError(SnapshotError):
    pass


class SnapshotSymmetryError(SnapshotError):
    pass


def _to_lex(coeffs: np.ndarray, n: int) -> np.ndarray:
    return np.fft.fftshift(coeffs, axes=tuple(range(n - 1))) if n > 1 else coeffs


def _from_lex(coeffs: np.ndarray, n: int) -> np.ndarray:
    return np.fft.ifftshift(coeffs, axes=tuple(range(n - 1))) if n > 1 else coeffs


def snapshot_bytes(f: SpectralField, t: float) -> bytes:
    b = f.basis
    head = _HEAD.pack(MAGIC, SNAPSHOT_VERSION, b.n) + struct.pack(f"<{b.n}I", *([b.n_modes] * b.n))
    lex = np.ascontiguousarray(_to_lex(f.coeffs, b.n))
    payload = np.empty(lex.size * 2, dtype="<f8")
    payload[0::2] = lex.real.ravel()
    payload[1::2] = lex.imag.ravel()
    return head + _TIME.pack(float(t)) + payload.tobytes()


def write_snapshot(f: SpectralField, t: float, path) -> None:
    Path(path).write_bytes(snapshot_bytes(f, t))


def parse_snapshot(data: bytes, padding: float = 1.5, symmetry_tol: float = 1e-12) -> tuple[SpectralField, float]:
    if len(data) < _HEAD.size or data[:4] != MAGIC:
        raise SnapshotFormatError("not a field snapshot (bad magic bytes)")
    _, version, n = _HEAD.unpack_from(data)
    if version != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version} (expected {SNAPSHOT_VERSION})")
    if n not in (1, 2):
        raise SnapshotFormatError(f"unsupported dimension n={n}")
    pos = _HEAD.size
    if len(data) < pos + 4 * n + _TIME.size:
        raise SnapshotPayloadError("truncated header")
    modes = struct.unpack_from(f"<{n}I", data, pos)
    pos += 4 * n
    if len(set(modes)) != 1:
        raise SnapshotFormatError(f"only equal mode counts per axis are supported, got {modes}")
    (t,) = _TIME.unpack_from(data, pos)
    pos += _TIME.size
    try:
        basis = BasisSpec.create(n, modes[0], padding)
    except ValueError as exc:
        raise SnapshotFormatError(str(exc)) from None
    count = math.prod(basis.spectral_shape)
    expected = pos + 16 * count
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "oversized"
        raise SnapshotPayloadError(f"{kind} payload: {len(data) - pos} bytes, expected {16 * count}")
    raw = np.frombuffer(data, dtype="<f8", offset=pos, count=2 * count)
    lex = (raw[0::2] + 1j * raw[1::2]).reshape(basis.spectral_shape)
    coeffs = _from_lex(lex, n)
    scale = max(float(np.abs(coeffs).max(initial=0.0)), 1.0)
    defect = hermitian_defect(coeffs, basis)
    if defect > symmetry_tol * scale:
        raise SnapshotSymmetryError(f"coefficients are not Hermitian-symmetric (defect {defect:.3e})")
    return SpectralField(basis, coeffs.copy()), t


def read_snapshot(path, padding: float = 1.5) -> tuple[SpectralField, float]:
    return parse_snapshot(Path(path).read_bytes(), padding)


# -- CSV --------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_records(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DiagnosticsRecord.columns())
        for rec in records:
            w.writerow(_fmt(x) for x in rec.as_row())


def read_records(path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != DiagnosticsRecord.columns():
        raise ValueError(f"{path}: unexpected CSV header {rows[0] if rows else None}")
    return [DiagnosticsRecord(*(float(x) for x in row)) for row in rows[1:]]


# -- sweep report directories -----------------------------------------------


def _slug(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in ".-" else "_" for ch in label)


SUMMARY_COLUMNS = (
    "label",
    "theta",
    "n_modes",
    "complete",
    "max_negativity",
    "negativity_ratio",
    "min_u",
    "final_l2",
    "final_energy",
    "gap_to_next",
)


def write_report(report, directory, verdict_text: str) -> Path:
    """Write one CSV per run, final snapshots, a summary CSV, ``report.json`` and ``verdict.txt``."""
    from .experiments import final_l2, negativity_scale

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    gap_after = {a: g for a, _, g in report.gaps}
    meta_runs = []
    summary = []
    for run in report.runs:
        slug = _slug(run.label)
        csv_name, snap_name = f"run_{slug}.csv", f"run_{slug}_final.vchf"
        write_records(out / csv_name, run.trajectory.records)
        write_snapshot(run.trajectory.final.c, run.trajectory.final.t, out / snap_name)
        meta_runs.append(
            {
                "label": run.label,
                "theta": run.theta,
                "n_modes": run.n_modes,
                "complete": run.complete,
                "error": run.trajectory.error,
                "csv": csv_name,
                "final_snapshot": snap_name,
            }
        )
        neg = run.max_negativity()
        summary.append(
            (
                run.label,
                "" if run.theta is None else _fmt(run.theta),
                str(run.n_modes),
                str(run.complete).lower(),
                _fmt(neg),
                "" if run.theta is None else _fmt(neg / negativity_scale(run.theta)),
                _fmt(run.min_u()),
                _fmt(final_l2(run)),
                _fmt(run.trajectory.records[-1].energy),
                _fmt(gap_after[run.label]) if run.label in gap_after else "",
            )
        )
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        w.writerows(summary)
    meta = {
        "format": "vch-report",
        "version": REPORT_VERSION,
        "kind": report.kind,
        "runs": meta_runs,
        "gaps": [list(g) for g in report.gaps],
        "u0_l2": report.u0_l2,
        "u0_min": report.u0_min,
        "u0_entropy": report.u0_entropy,
        "eps_neg": report.eps_neg,
        "degenerate_gap": report.degenerate_gap,
    }
    (out / "report.json").write_text(json.dumps(meta, indent=2) + "\n")
    (out / "verdict.txt").write_text(verdict_text + "\n")
    return out


def load_report(directory):
    """Rebuild a :class:`~vchsolver.experiments.SweepReport` from a report directory.

    Trajectories carry the CSV records and only the final state.
    """
    from .experiments import RunResult, SweepReport
    from .galerkin import SolverState, Trajectory

    root = Path(directory)
    try:
        meta = json.loads((root / "report.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"{root}: not a report directory ({exc})") from None
    if meta.get("format") != "vch-report" or meta.get("version") != REPORT_VERSION:
        raise ValueError(f"{root}: unsupported report format {meta.get('format')!r} v{meta.get('version')}")
    runs = []
    for m in meta["runs"]:
        records = read_records(root / m["csv"])
        c, t = read_snapshot(root / m["final_snapshot"])
        traj = Trajectory(None, [SolverState(t, c)], records, complete=m["complete"], error=m["error"])
        runs.append(RunResult(m["label"], m["theta"], m["n_modes"], traj))
    return SweepReport(
        kind=meta["kind"],
        runs=runs,
        gaps=[tuple(g) for g in meta["gaps"]],
        u0_l2=meta["u0_l2"],
        u0_min=meta["u0_min"],
        u0_entropy=meta["u0_entropy"],
        eps_neg=meta["eps_neg"],
        degenerate_gap=meta["degenerate_gap"],
    )
