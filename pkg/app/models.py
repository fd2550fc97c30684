# app/models.py
from datetime import datetime

from flask_sqlalchemy import SQLAlchemy

db = SQLAlchemy()


class RunEntry(db.Model):
    """One finished run (or convergence study / validation) and where its artifacts live."""
    __tablename__ = 'simulation_runs'

    id = db.Column(db.Integer, primary_key=True)
    kind = db.Column(db.String(20), nullable=False, default='run')
    name = db.Column(db.String(200), nullable=False)
    config_hash = db.Column(db.String(64), nullable=False, index=True)
    stopping_reason = db.Column(db.String(20))
    stop_time = db.Column(db.Float)
    wall_time = db.Column(db.Float)
    n_frames = db.Column(db.Integer, default=0)
    passed = db.Column(db.Boolean)
    out_dir = db.Column(db.String(500), nullable=False)
    created_at = db.Column(db.DateTime, default=datetime.utcnow)

    def to_dict(self):
        return {
            'id': self.id,
            'kind': self.kind,
            'name': self.name,
            'config_hash': self.config_hash,
            'stopping_reason': self.stopping_reason,
            'stop_time': self.stop_time,
            'wall_time': self.wall_time,
            'n_frames': self.n_frames,
            'passed': self.passed,
            'out_dir': self.out_dir,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }

    def __repr__(self):
        return f'<RunEntry {self.id} {self.name} ({self.stopping_reason})>'
