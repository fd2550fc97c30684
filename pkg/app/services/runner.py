# app/services/runner.py
"""Side-by-side integration of a particle vorticity field and its point-vortex limit.

The two systems share dt but never feed back into each other: the vortices
start at the patch centers and evolve under the Kirchhoff-Routh law alone.
"""
import hashlib
import json
import logging
import math
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from app.exceptions import (
    ClearanceError,
    ConfigError,
    DomainError,
    PartialStepError,
    SeparationViolation,
    SolverError,
)
from app.services.euler_sim import advect, make_field, peak_vorticity, support_monitor
from app.services.geometry import Domain
from app.services.metrics import (
    DiscreteMeasure,
    center_of_vorticity,
    w1_signed,
    w1_to_dirac,
    w2_to_dirac,
)
from app.services.point_vortex import (
    PointVortexState,
    SeparationReport,
    hamiltonian,
    kr_rhs,
    separation_monitor,
    step,
    suggest_dt,
    vortex_hole_coefficients,
)
from app.services.velocity import FlowState, patch_velocity, self_induced_motion, velocity_at

logger = logging.getLogger(__name__)

STOPPING_REASONS = ("t_end", "C5-pair", "C5-boundary", "C12-pair", "C12-boundary", "solver-error")


@dataclass(eq=False)
class Frame:
    """Diagnostics at one recorded time. Particle quantities are None for point-vortex-only runs."""
    t: float
    Y: np.ndarray
    dY: np.ndarray
    c12: SeparationReport
    hole_coefficients: np.ndarray
    X: Optional[np.ndarray] = None
    dX: Optional[np.ndarray] = None
    W2: Optional[np.ndarray] = None
    W1i: Optional[np.ndarray] = None
    F: Optional[np.ndarray] = None
    W1: Optional[float] = None
    H: Optional[float] = None
    c5: Optional[SeparationReport] = None


@dataclass(eq=False)
class RunRecord:
    name: str
    config_hash: str
    delta: float
    dt: float
    n_steps: int
    frames_every: int
    strengths: List[float]
    n_holes: int
    frames: List[Frame] = field(default_factory=list)
    stopping_reason: str = "t_end"
    stop_time: float = 0.0
    wall_time: float = 0.0
    detail: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def n_patches(self) -> int:
        return len(self.strengths)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames])


def _time_grid(t_end: float, dt: float):
    """Round dt down so that an integer number of steps lands on t_end."""
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    return t_end / n_steps, n_steps


def _vortex_frame(t, vortices: PointVortexState, domain: Domain, delta: float) -> Frame:
    return Frame(
        t=t,
        Y=vortices.positions.copy(),
        dY=kr_rhs(vortices, domain),
        c12=separation_monitor(vortices, domain, delta),
        hole_coefficients=vortex_hole_coefficients(vortices, domain),
        H=hamiltonian(vortices, domain) if domain.n_holes == 0 else None,
    )


def _frame(t, state: FlowState, vortices: PointVortexState, blob_size: float, delta: float) -> Frame:
    frame = _vortex_frame(t, vortices, state.domain, delta)
    flow = state.field
    n = flow.n_patches
    X, dX = np.zeros((n, 2)), np.zeros((n, 2))
    W2, W1i, F = np.zeros(n), np.zeros(n), np.zeros(n)
    u = velocity_at(state, flow.positions, blob_size)
    for i in range(n):
        mask = flow.patch_mask(i)
        x, w = flow.positions[mask], flow.weights[mask]
        Y = frame.Y[i]
        X[i] = center_of_vorticity(flow, i, uniform_fallback=True)
        far = u[mask] - patch_velocity(state, x, i, blob_size)
        a = math.fsum(w)
        dX[i] = (w @ far) / a if a != 0.0 else far.mean(axis=0)
        W2[i] = w2_to_dirac(flow, i, Y, uniform_fallback=True)
        W1i[i] = w1_to_dirac(flow, i, Y, uniform_fallback=True)
        F[i] = float(np.max(np.hypot(far[:, 0], far[:, 1])))
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug(f"t={t:.6g} patch {i}: self-induced drift {np.linalg.norm(self_induced_motion(state, i, blob_size)):.3e}")
    frame.X, frame.dX, frame.W2, frame.W1i, frame.F = X, dX, W2, W1i, F
    frame.W1 = w1_signed(DiscreteMeasure.from_field(flow), DiscreteMeasure(vortices.positions, vortices.strengths))
    frame.c5 = support_monitor(flow, state.domain, delta)
    frame.hole_coefficients = state.coefficients.copy()
    return frame


def _append_if_computable(record: RunRecord, build, *args):
    """Record the frame at a monitor violation unless its diagnostics are undefined there."""
    try:
        record.frames.append(build(*args))
    except (ClearanceError, DomainError) as e:
        logger.warning(f"No frame at the violation time of '{record.name}': {e}")
        return False
    return True


def _stage_reason(error: PartialStepError, kind: str) -> str:
    cause = error.cause
    if isinstance(cause, SeparationViolation):
        return cause.condition
    return f"{kind}-boundary"


def run(scenario, frames_every: int = None, threads: int = 1) -> RunRecord:
    """Advance particles and point vortices together until t_end or the first monitor violation."""
    started = time.perf_counter()
    k = int(frames_every or scenario.numerics.frames_every or 10)
    domain = scenario.domain
    delta, blob_size = scenario.delta, scenario.blob_size
    circulations = tuple(scenario.circulations)

    particles = make_field(scenario.patch_specs(), domain)
    vortices = PointVortexState([pc.center for pc in scenario.patches],
                                [pc.strength for pc in scenario.patches], circulations)
    dt0 = scenario.numerics.dt or suggest_dt(vortices, delta, peak_vorticity(particles))
    dt, n_steps = _time_grid(scenario.numerics.t_end, dt0)
    record = RunRecord(scenario.name, scenario.config_hash, delta, dt, n_steps, k,
                       [float(a) for a in vortices.strengths], domain.n_holes)
    logger.info(f"Run '{scenario.name}': {particles.size} particles, {vortices.n} vortices, "
                f"dt={dt:.3e}, {n_steps} steps.")

    state = FlowState(domain, particles, circulations, 0.0, threads)
    final_frame_tried = False
    try:
        record.frames.append(_frame(0.0, state, vortices, blob_size, delta))
        for n in range(1, n_steps + 1):
            t = n * dt
            try:
                moved = advect(state, dt, blob_size)
            except PartialStepError as e:
                record.stopping_reason, record.detail = _stage_reason(e, "C5"), str(e.cause)
                break
            try:
                stepped = step(vortices, domain, dt)
            except PartialStepError as e:
                record.stopping_reason, record.detail = _stage_reason(e, "C12"), str(e.cause)
                break
            vortices = stepped.moved(stepped.positions, t)
            state = FlowState(domain, moved, circulations, t, threads)
            record.stop_time = t
            c5 = support_monitor(moved, domain, delta)
            c12 = separation_monitor(vortices, domain, delta)
            if not (c5.ok and c12.ok):
                record.stopping_reason = c5.violation or c12.violation
                record.detail = f"C5: {c5.to_dict()}, C12: {c12.to_dict()}"
                _append_if_computable(record, _frame, t, state, vortices, blob_size, delta)
                final_frame_tried = True
                break
            if n % k == 0 or n == n_steps:
                record.frames.append(_frame(t, state, vortices, blob_size, delta))
                logger.debug(f"t={t:.4f}: W2={record.frames[-1].W2}, W1={record.frames[-1].W1:.3e}")
    except (SolverError, ClearanceError) as e:
        logger.error(f"Run '{scenario.name}' aborted at t={state.t}: {e}", exc_info=True)
        record.stopping_reason, record.detail = "solver-error", str(e)

    if (record.frames and not final_frame_tried and record.frames[-1].t != state.t
            and record.stopping_reason != "solver-error"):
        _append_if_computable(record, _frame, state.t, state, vortices, blob_size, delta)
    record.stop_time = state.t
    record.wall_time = time.perf_counter() - started
    logger.info(f"Run '{scenario.name}' stopped ({record.stopping_reason}) at t={record.stop_time:.4f} "
                f"after {record.wall_time:.1f}s with {len(record.frames)} frames.")
    return record


# --- point-vortex-only runs ---------------------------------------------------------

@dataclass(frozen=True)
class LeapfrogParams:
    """Two like-signed vortices close to each other near the wall of a disk."""
    positions: tuple = ((0.8, 0.0), (0.9, 0.0))
    strengths: tuple = (1.0, 1.0)
    delta: float = 0.05
    t_end: float = 2.0
    dt: Optional[float] = None
    frames_every: int = 10
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    n_quad: int = 256
    backend: str = "analytic-disk"

    @classmethod
    def from_file(cls, path):
        try:
            with Path(path).open("rb") as fh:
                block = tomllib.load(fh).get("leapfrog", {})
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"Cannot read leapfrog parameters from {path}: {e}") from e
        return cls.from_dict(block)

    @classmethod
    def from_dict(cls, block: dict):
        known = {k: v for k, v in block.items() if k in cls.__dataclass_fields__}
        unknown = set(block) - set(known)
        if unknown:
            raise ConfigError(f"Unknown leapfrog parameters: {sorted(unknown)}")
        for key in ("positions", "center", "strengths"):
            if key in known:
                value = known[key]
                known[key] = tuple(tuple(float(c) for c in v) for v in value) if key == "positions" \
                    else tuple(float(c) for c in value)
        return cls(**known)

    @property
    def name(self) -> str:
        return "leapfrog"

    @property
    def config_hash(self) -> str:
        canonical = json.dumps({k: getattr(self, k) for k in self.__dataclass_fields__},
                               sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _check_leapfrog(params: LeapfrogParams, domain: Domain):
    Y = np.asarray(params.positions, dtype=np.float64)
    a = np.asarray(params.strengths, dtype=np.float64)
    if Y.shape != (2, 2) or a.shape != (2,):
        raise ConfigError("Leapfrogging needs exactly two vortices.")
    if a[0] * a[1] <= 0.0:
        raise ConfigError("Leapfrogging needs two like-signed vortices.")
    d = float(np.hypot(*(Y[0] - Y[1])))
    reach = float(np.min(np.hypot(*(Y - np.asarray(params.center)).T)))
    if d >= 0.5 * reach:
        raise ConfigError(f"Vortex spacing {d:.3g} is not small against their distance {reach:.3g} to the center.")


def run_point_vortices(domain: Domain, vortices: PointVortexState, delta: float, t_end: float,
                       dt: float = None, frames_every: int = 10, name: str = "point-vortices",
                       config_hash: str = "") -> RunRecord:
    """Kirchhoff-Routh run without particles; counts exchanges of the radial order of vortices 0 and 1."""
    started = time.perf_counter()
    dt, n_steps = _time_grid(t_end, dt or suggest_dt(vortices, delta))
    record = RunRecord(name, config_hash, delta, dt, n_steps, frames_every,
                       [float(a) for a in vortices.strengths], domain.n_holes)
    center = domain.outer.as_circle()[0] if domain.outer.as_circle() else vortices.positions.mean(axis=0)

    def order(state):
        r = np.hypot(*(state.positions[:2] - center).T)
        return np.sign(r[0] - r[1]) if state.n > 1 else 0.0

    exchanges, last_order = 0, order(vortices)
    final_frame_tried = False
    try:
        record.frames.append(_vortex_frame(0.0, vortices, domain, delta))
        for n in range(1, n_steps + 1):
            t = n * dt
            try:
                stepped = step(vortices, domain, dt)
            except PartialStepError as e:
                record.stopping_reason, record.detail = _stage_reason(e, "C12"), str(e.cause)
                break
            vortices = stepped.moved(stepped.positions, t)
            record.stop_time = t
            current = order(vortices)
            if current != 0.0:
                if last_order != 0.0 and current != last_order:
                    exchanges += 1
                last_order = current
            report = separation_monitor(vortices, domain, delta)
            if not report.ok:
                record.stopping_reason, record.detail = report.violation, str(report.to_dict())
                _append_if_computable(record, _vortex_frame, t, vortices, domain, delta)
                final_frame_tried = True
                break
            if n % frames_every == 0 or n == n_steps:
                record.frames.append(_vortex_frame(t, vortices, domain, delta))
    except SolverError as e:
        logger.error(f"Point-vortex run '{name}' aborted: {e}", exc_info=True)
        record.stopping_reason, record.detail = "solver-error", str(e)

    if (record.frames and not final_frame_tried and record.frames[-1].t != vortices.t
            and record.stopping_reason != "solver-error"):
        _append_if_computable(record, _vortex_frame, vortices.t, vortices, domain, delta)
    record.stop_time = vortices.t
    energies = [f.H for f in record.frames if f.H is not None]
    if energies and energies[0] != 0.0:
        record.extras["hamiltonian_drift"] = max(abs(H - energies[0]) for H in energies) / abs(energies[0])
    record.extras["radial_exchanges"] = exchanges
    record.wall_time = time.perf_counter() - started
    return record


def demo_leapfrog(params: LeapfrogParams = None) -> RunRecord:
    params = params or LeapfrogParams()
    try:
        domain = Domain.disk(params.center, params.radius, params.n_quad, params.backend)
    except DomainError as e:
        raise ConfigError(f"Invalid leapfrog domain: {e}") from e
    _check_leapfrog(params, domain)
    vortices = PointVortexState(params.positions, params.strengths)
    record = run_point_vortices(domain, vortices, params.delta, params.t_end, params.dt,
                                params.frames_every, params.name, params.config_hash)
    logger.info(f"Leapfrog demo: {record.extras['radial_exchanges']} radial-order exchanges, "
                f"Hamiltonian drift {record.extras.get('hamiltonian_drift', float('nan')):.2e}.")
    return record
