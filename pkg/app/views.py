# app/views.py

from flask import Blueprint, request, jsonify
import logging
from pathlib import Path

from app.decorators.guards import run_required
from app.services.database_service import list_runs
from app.utils.record_io import FRAMES_FILE, MANIFEST_FILE, manifest, read_run

runs_blueprint = Blueprint('runs', __name__)
logger = logging.getLogger(__name__)

# --- Read-only browser over the run registry ---
@runs_blueprint.route('/runs', methods=['GET'])
def runs_index():
    kind = request.args.get("kind")
    limit = request.args.get("limit", 100, type=int)
    entries = list_runs(kind=kind, limit=limit)
    return jsonify({"runs": [e.to_dict() for e in entries]}), 200


@runs_blueprint.route('/runs/<int:run_id>', methods=['GET'])
@run_required
def run_detail(entry):
    payload = entry.to_dict()
    manifest_path = Path(entry.out_dir) / MANIFEST_FILE
    if entry.kind == 'run' and manifest_path.exists():
        payload["manifest"] = manifest(read_run(entry.out_dir))
    return jsonify(payload), 200


@runs_blueprint.route('/runs/<int:run_id>/frames', methods=['GET'])
@run_required
def run_frames(entry):
    if not (Path(entry.out_dir) / FRAMES_FILE).exists():
        logger.warning(f"Frames of run {entry.id} missing under {entry.out_dir}.")
        return jsonify({"status": "error", "message": "frames not found"}), 404
    try:
        record = read_run(entry.out_dir)
    except (OSError, ValueError, KeyError) as e:
        logger.exception(f"Error reading frames of run {entry.id}: {e}")
        return jsonify({"status": "error", "message": "unreadable run artifacts"}), 500

    def as_list(value):
        return None if value is None else value.tolist()

    frames = [
        {
            "t": f.t,
            "Y": as_list(f.Y),
            "X": as_list(f.X),
            "dY": as_list(f.dY),
            "dX": as_list(f.dX),
            "W2": as_list(f.W2),
            "W1": f.W1,
            "H": f.H,
            "c5": f.c5.to_dict() if f.c5 else None,
            "c12": f.c12.to_dict(),
            "hole_coefficients": as_list(f.hole_coefficients),
        }
        for f in record.frames
    ]
    return jsonify({"id": entry.id, "name": record.name, "frames": frames}), 200
