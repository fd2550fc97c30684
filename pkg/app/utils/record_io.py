# app/utils/record_io.py
"""Lossless CSV/JSON persistence of RunRecords.

Floats are written with repr() so that reading a file back yields the exact
values; missing quantities are written as empty fields.
"""
import csv
import json
import logging
from datetime import datetime
from pathlib import Path

import numpy as np

from app.services.point_vortex import SeparationReport
from app.services.runner import Frame, RunRecord

logger = logging.getLogger(__name__)

FRAMES_FILE = "frames.csv"
MANIFEST_FILE = "manifest.json"
BASE_HEADER = ["t", "i", "Yx", "Yy", "Xx", "Xy", "dXx", "dXy", "dYx", "dYy", "W2", "W1i", "F", "W1", "H",
               "c5_pair", "c5_boundary", "c12_pair", "c12_boundary"]


def frames_header(n_holes: int):
    return BASE_HEADER + [f"c_{m}" for m in range(1, n_holes + 1)]


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _parse(text: str):
    return None if text == "" else float(text)


def _row(frame: Frame, i: int):
    def pick(array, *index):
        return None if array is None else array[(i,) + index]

    c5 = frame.c5
    return [
        _fmt(frame.t), str(i),
        _fmt(frame.Y[i, 0]), _fmt(frame.Y[i, 1]),
        _fmt(pick(frame.X, 0)), _fmt(pick(frame.X, 1)),
        _fmt(pick(frame.dX, 0)), _fmt(pick(frame.dX, 1)),
        _fmt(frame.dY[i, 0]), _fmt(frame.dY[i, 1]),
        _fmt(pick(frame.W2)), _fmt(pick(frame.W1i)), _fmt(pick(frame.F)),
        _fmt(frame.W1), _fmt(frame.H),
        _fmt(c5.min_pair if c5 else None), _fmt(c5.min_boundary if c5 else None),
        _fmt(frame.c12.min_pair), _fmt(frame.c12.min_boundary),
    ] + [_fmt(c) for c in frame.hole_coefficients]


def write_frames_csv(record: RunRecord, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(frames_header(record.n_holes))
        for frame in record.frames:
            for i in range(len(frame.Y)):
                writer.writerow(_row(frame, i))
    return path


def manifest(record: RunRecord) -> dict:
    return {
        "name": record.name,
        "config_hash": record.config_hash,
        "stopping_reason": record.stopping_reason,
        "stop_time": record.stop_time,
        "wall_time": record.wall_time,
        "dt": record.dt,
        "n_steps": record.n_steps,
        "frames_every": record.frames_every,
        "delta": record.delta,
        "strengths": record.strengths,
        "n_holes": record.n_holes,
        "n_frames": len(record.frames),
        "detail": record.detail,
        "extras": record.extras,
        "frames_header": frames_header(record.n_holes),
    }


def write_manifest(record: RunRecord, path):
    path = Path(path)
    path.write_text(json.dumps(manifest(record), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _stack(rows, columns):
    values = [[_parse(r[c]) for c in columns] for r in rows]
    if all(v is None for row in values for v in row):
        return None
    array = np.array(values, dtype=np.float64)
    return array[:, 0] if len(columns) == 1 else array


def _report(rows, pair, boundary, delta, kind):
    first = rows[0]
    if first[pair] == "" and first[boundary] == "":
        return None
    return SeparationReport(_parse(first[pair]), _parse(first[boundary]), delta, kind)


def read_frames_csv(path, delta: float, n_holes: int):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    frames, current = [], []
    for row in rows:
        if current and row["t"] != current[0]["t"]:
            frames.append(current)
            current = []
        current.append(row)
    if current:
        frames.append(current)

    out = []
    for group in frames:
        first = group[0]
        out.append(Frame(
            t=float(first["t"]),
            Y=_stack(group, ["Yx", "Yy"]),
            dY=_stack(group, ["dYx", "dYy"]),
            c12=_report(group, "c12_pair", "c12_boundary", delta, "C12"),
            hole_coefficients=np.array([float(first[f"c_{m}"]) for m in range(1, n_holes + 1)]),
            X=_stack(group, ["Xx", "Xy"]),
            dX=_stack(group, ["dXx", "dXy"]),
            W2=_stack(group, ["W2"]),
            W1i=_stack(group, ["W1i"]),
            F=_stack(group, ["F"]),
            W1=_parse(first["W1"]),
            H=_parse(first["H"]),
            c5=_report(group, "c5_pair", "c5_boundary", delta, "C5"),
        ))
    return out


def write_run(record: RunRecord, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_frames_csv(record, directory / FRAMES_FILE)
    write_manifest(record, directory / MANIFEST_FILE)
    logger.info(f"Wrote {len(record.frames)} frames of '{record.name}' to {directory}.")
    return directory


def read_run(directory) -> RunRecord:
    directory = Path(directory)
    meta = json.loads((directory / MANIFEST_FILE).read_text(encoding="utf-8"))
    record = RunRecord(
        name=meta["name"],
        config_hash=meta["config_hash"],
        delta=meta["delta"],
        dt=meta["dt"],
        n_steps=meta["n_steps"],
        frames_every=meta["frames_every"],
        strengths=meta["strengths"],
        n_holes=meta["n_holes"],
        stopping_reason=meta["stopping_reason"],
        stop_time=meta["stop_time"],
        wall_time=meta["wall_time"],
        detail=meta["detail"],
        extras=meta["extras"],
    )
    record.frames = read_frames_csv(directory / FRAMES_FILE, record.delta, record.n_holes)
    return record


def run_directory(root, name: str, now: datetime = None) -> Path:
    """Timestamped artifact directory under the output root."""
    stamp = (now or datetime.now()).strftime("%Y%m%d-%H%M%S")
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in name)
    return Path(root) / f"{safe}-{stamp}"
