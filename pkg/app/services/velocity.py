# app/services/velocity.py
"""Biot-Savart velocity of a particle vorticity field in a bounded domain.

    u = K_blob * omega + grad^perp eta + sum_m c_m xi_m,
    c_m = sum_p weight_p w_m(x_p) + gamma_m
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from app.exceptions import DomainError
from app.services.geometry import Domain
from app.services.harmonic import eta_evaluator, harmonic_measure, hole_field
from app.services.kernels import blob_sum, perp

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FlowState:
    """Immutable snapshot of (domain, particles, circulations) with lazily built evaluators.

    A new FlowState is created whenever particles move, so the cached evaluators
    always match the field they were built from.
    """
    domain: Domain
    field: object
    circulations: tuple = ()
    t: float = 0.0
    threads: int = 1

    def __post_init__(self):
        if len(self.circulations) != self.domain.n_holes:
            raise DomainError(
                f"Expected {self.domain.n_holes} circulations, got {len(self.circulations)}."
            )

    @cached_property
    def eta(self):
        return eta_evaluator(self.domain, self.field)

    @cached_property
    def measures(self):
        return tuple(harmonic_measure(self.domain, m) for m in range(1, self.domain.n_holes + 1))

    @cached_property
    def hole_fields(self):
        return tuple(hole_field(self.domain, m) for m in range(1, self.domain.n_holes + 1))

    @cached_property
    def coefficients(self) -> np.ndarray:
        positions, weights = self.field.positions, self.field.weights
        out = []
        for w, gamma in zip(self.measures, self.circulations):
            mass = float(w.value(positions) @ weights) if len(weights) else 0.0
            out.append(mass + float(gamma))
        return np.array(out)


def _partitioned(fn, pts, threads: int):
    """Evaluate fn on chunks of the target points; every target's reduction is unchanged by chunking."""
    if threads <= 1 or len(pts) < 2 * threads:
        return fn(pts)
    chunks = np.array_split(pts, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(fn, chunks)))


def _as_targets(x):
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(-1, 2), x.ndim == 1


def _harmonic_part(state: FlowState, pts):
    u = perp(state.eta.gradient(pts)) if len(state.field.weights) else np.zeros_like(pts)
    for c, xi in zip(state.coefficients, state.hole_fields):
        u = u + c * xi.velocity(pts)
    return u


def boundary_velocity(state: FlowState, x):
    """u^b = grad^perp eta + sum_m c_m xi_m, the part of u not produced by free-space blobs."""
    pts, single = _as_targets(x)
    u = _harmonic_part(state, pts)
    return u[0] if single else u


def velocity_at(state: FlowState, x, blob_size: float):
    pts, single = _as_targets(x)
    field = state.field

    def evaluate(chunk):
        return blob_sum(chunk, field.positions, field.weights, blob_size) + _harmonic_part(state, chunk)

    u = _partitioned(evaluate, pts, state.threads)
    return u[0] if single else u


def patch_velocity(state: FlowState, x, i: int, blob_size: float):
    """u_i = K_blob * omega_i, the free-space velocity induced by patch i alone."""
    mask = state.field.patch_mask(i)
    pts, single = _as_targets(x)
    u = blob_sum(pts, state.field.positions[mask], state.field.weights[mask], blob_size)
    return u[0] if single else u


def far_field_at(state: FlowState, x, i: int, blob_size: float):
    """F_i = u - u_i."""
    return velocity_at(state, x, blob_size) - patch_velocity(state, x, i, blob_size)


def hole_coefficients(state: FlowState) -> list:
    return [float(c) for c in state.coefficients]


def self_induced_motion(state: FlowState, i: int, blob_size: float) -> np.ndarray:
    """sum_p w_p u_i(x_p) over the particles of patch i; zero for an odd kernel."""
    mask = state.field.patch_mask(i)
    x, w = state.field.positions[mask], state.field.weights[mask]
    if not len(w):
        return np.zeros(2)
    return w @ patch_velocity(state, x, i, blob_size)
