# app/services/database_service.py
import logging
from sqlalchemy.exc import SQLAlchemyError
from app.models import db, RunEntry

logger = logging.getLogger(__name__)

def _commit_session():
    """Commits the current database session with error handling."""
    try:
        db.session.commit()
        return True
    except SQLAlchemyError as e:
        db.session.rollback()
        logger.error(f"Database commit failed: {e}", exc_info=True)
        return False

def _add_and_commit(instance):
    """Adds a new instance to the database and commits it."""
    db.session.add(instance)
    if not _commit_session():
        logger.error(f"Failed to create {instance.__class__.__name__}.")
        return None
    return instance

def record_run(record, out_dir: str, passed: bool = None):
    """Registers a finished RunRecord. Returns the entry, or None if the commit failed."""
    entry = _add_and_commit(RunEntry(
        kind='run',
        name=record.name,
        config_hash=record.config_hash,
        stopping_reason=record.stopping_reason,
        stop_time=record.stop_time,
        wall_time=record.wall_time,
        n_frames=len(record.frames),
        passed=passed,
        out_dir=str(out_dir),
    ))
    if entry:
        logger.info(f"Registered run {entry.id} '{record.name}' ({record.stopping_reason}).")
    return entry

def record_report(kind: str, name: str, config_hash: str, passed: bool, out_dir: str):
    """Registers a convergence or validation report."""
    entry = _add_and_commit(RunEntry(kind=kind, name=name, config_hash=config_hash,
                                     passed=passed, out_dir=str(out_dir)))
    if entry:
        logger.info(f"Registered {kind} report {entry.id} '{name}' (passed={passed}).")
    return entry

def list_runs(kind: str = None, limit: int = 100):
    """Most recent registry entries first."""
    query = RunEntry.query
    if kind:
        query = query.filter_by(kind=kind)
    return query.order_by(RunEntry.created_at.desc(), RunEntry.id.desc()).limit(limit).all()

def get_run(run_id: int):
    return db.session.get(RunEntry, run_id)

def find_by_hash(config_hash: str):
    """All registered runs of one resolved scenario, oldest first."""
    return RunEntry.query.filter_by(config_hash=config_hash).order_by(RunEntry.id.asc()).all()
