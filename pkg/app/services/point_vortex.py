# app/services/point_vortex.py
"""Kirchhoff-Routh point vortex dynamics in a bounded domain."""
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from app.exceptions import ClearanceError, DomainError, PartialStepError, SeparationViolation
from app.services.geometry import Domain, boundary_distance, contains
from app.services.harmonic import harmonic_measure, hole_field, source_extension, theta_evaluator
from app.services.kernels import newtonian_potential, perp, point_vortex_sum

logger = logging.getLogger(__name__)

DT_SAFETY = 0.1
MAX_ROTATION_PER_STEP = 0.1


@dataclass(frozen=True)
class SeparationReport:
    """Minimum pair and boundary distances against the threshold delta/2.

    `min_pair` is None when there is no pair to compare (a single vortex or patch);
    `min_boundary` is 0.0 when some point has left the domain.
    """
    min_pair: Optional[float]
    min_boundary: Optional[float]
    delta: float
    kind: str = "C12"

    @property
    def threshold(self) -> float:
        return 0.5 * self.delta

    @property
    def pair_ok(self) -> bool:
        return self.min_pair is None or self.min_pair >= self.threshold

    @property
    def boundary_ok(self) -> bool:
        return self.min_boundary is None or self.min_boundary >= self.threshold

    @property
    def ok(self) -> bool:
        return self.pair_ok and self.boundary_ok

    @property
    def violation(self) -> Optional[str]:
        """Name of the violated condition, the closer one when both fail."""
        if self.ok:
            return None
        if not self.pair_ok and (self.boundary_ok or self.min_pair <= self.min_boundary):
            return f"{self.kind}-pair"
        return f"{self.kind}-boundary"

    def to_dict(self):
        return {"min_pair": self.min_pair, "min_boundary": self.min_boundary,
                "delta": self.delta, "ok": self.ok, "violation": self.violation}


def min_boundary_distance(domain: Domain, points) -> Optional[float]:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(points) == 0:
        return None
    if not np.all(contains(domain, points)):
        return 0.0
    return float(np.min(boundary_distance(domain, points)))


@dataclass(frozen=True, eq=False)
class PointVortexState:
    positions: np.ndarray
    strengths: np.ndarray
    circulations: tuple = ()
    t: float = 0.0

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 2)
        strengths = np.asarray(self.strengths, dtype=np.float64).reshape(-1)
        if len(positions) == 0:
            raise DomainError("A point vortex system needs at least one vortex.")
        if len(positions) != len(strengths):
            raise DomainError(f"Got {len(positions)} positions but {len(strengths)} strengths.")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "strengths", strengths)
        object.__setattr__(self, "circulations", tuple(float(g) for g in self.circulations))

    @property
    def n(self) -> int:
        return len(self.strengths)

    def moved(self, positions, t):
        return replace(self, positions=positions, t=t)


def separation_monitor(state: PointVortexState, domain: Domain, delta: float) -> SeparationReport:
    Y = state.positions
    min_pair = None
    if state.n > 1:
        d = np.hypot(Y[:, None, 0] - Y[None, :, 0], Y[:, None, 1] - Y[None, :, 1])
        min_pair = float(np.min(d[np.triu_indices(state.n, k=1)]))
    return SeparationReport(min_pair, min_boundary_distance(domain, Y), float(delta), "C12")


def vortex_hole_coefficients(state: PointVortexState, domain: Domain) -> np.ndarray:
    """Sum_j a_j w_m(Y_j) + gamma_m for every hole."""
    return np.array([
        float(harmonic_measure(domain, m).value(state.positions) @ state.strengths) + gamma
        for m, gamma in zip(range(1, domain.n_holes + 1), state.circulations)
    ])


def kr_rhs(state: PointVortexState, domain: Domain, delta: float = None) -> np.ndarray:
    """dY_i/dt for every vortex; raises SeparationViolation when delta is given and the monitor fails."""
    if delta is not None:
        report = separation_monitor(state, domain, delta)
        if not report.ok:
            raise SeparationViolation(report.violation, report)
    if len(state.circulations) != domain.n_holes:
        raise DomainError(f"Expected {domain.n_holes} circulations, got {len(state.circulations)}.")
    Y = state.positions
    rhs = point_vortex_sum(Y, Y, state.strengths)
    rhs = rhs + perp(theta_evaluator(domain, state.strengths, Y).gradient(Y))
    for m, c in enumerate(vortex_hole_coefficients(state, domain), start=1):
        rhs = rhs + c * hole_field(domain, m).velocity(Y)
    return rhs


def step(state: PointVortexState, domain: Domain, dt: float, delta: float = None) -> PointVortexState:
    """One classical RK4 step."""
    Y0 = state.positions
    try:
        k1 = kr_rhs(state, domain, delta)
        k2 = kr_rhs(state.moved(Y0 + 0.5 * dt * k1, state.t + 0.5 * dt), domain, delta)
        k3 = kr_rhs(state.moved(Y0 + 0.5 * dt * k2, state.t + 0.5 * dt), domain, delta)
        k4 = kr_rhs(state.moved(Y0 + dt * k3, state.t + dt), domain, delta)
    except (SeparationViolation, ClearanceError, DomainError) as e:
        raise PartialStepError(state, e) from e
    Y1 = Y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(contains(domain, Y1)):
        raise PartialStepError(state, DomainError(f"A vortex left the domain during the step from t={state.t}."))
    return state.moved(Y1, state.t + dt)


def green_regular_part(domain: Domain, x, y):
    """H(x, y): harmonic in x with H(., y) = G(. - y) on the boundary."""
    return source_extension(domain, np.asarray(y).reshape(1, 2), [1.0]).value(x)


def hamiltonian(state: PointVortexState, domain: Domain) -> float:
    """H = sum_{i<j} a_i a_j G_D(Y_i, Y_j) - 1/2 sum_i a_i^2 H(Y_i, Y_i), G_D = G - H.

    The self term carries the sign of -H on the diagonal: a single vortex in the
    unit disk has H = +(a^2/4pi) log(1 - |Y|^2) <= 0. Only simply-connected
    domains are supported.
    """
    if domain.n_holes > 0:
        raise DomainError("The Hamiltonian is only available for simply-connected domains.")
    Y, a = state.positions, state.strengths
    regular = np.array([np.atleast_1d(green_regular_part(domain, Y, Y[j])) for j in range(state.n)])
    energy = -0.5 * float(np.sum(a * a * np.diag(regular)))
    for i in range(state.n):
        for j in range(i + 1, state.n):
            energy += a[i] * a[j] * (float(newtonian_potential(Y[i] - Y[j])) - regular[j, i])
    return float(energy)


def suggest_dt(state: PointVortexState, delta: float, max_vorticity: float = None) -> float:
    """min(delta^2, 0.1 min_pair^2 / max|a|) * 0.1, capped so a patch of peak
    vorticity `max_vorticity` turns at most 0.1 rad per step."""
    bound = delta * delta
    max_a = float(np.max(np.abs(state.strengths)))
    if state.n > 1 and max_a > 0.0:
        Y = state.positions
        d = np.hypot(Y[:, None, 0] - Y[None, :, 0], Y[:, None, 1] - Y[None, :, 1])
        min_pair = float(np.min(d[np.triu_indices(state.n, k=1)]))
        bound = min(bound, 0.1 * min_pair * min_pair / max_a)
    dt = bound * DT_SAFETY
    if max_vorticity:
        dt = min(dt, 2.0 * MAX_ROTATION_PER_STEP / max_vorticity)
    return dt
