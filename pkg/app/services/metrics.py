# app/services/metrics.py
"""Concentration and transport diagnostics comparing particle patches with point vortices."""
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import ot

from app.exceptions import DomainError, TransportContractError
from app.services.velocity import FlowState, far_field_at

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely many atoms; masses may carry a sign for signed transport."""
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        masses = np.asarray(self.masses, dtype=np.float64).reshape(-1)
        if len(points) != len(masses):
            raise DomainError(f"Got {len(points)} atoms but {len(masses)} masses.")
        if not np.all(np.isfinite(masses)):
            raise DomainError("Atom masses must be finite.")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_field(cls, field):
        return cls(field.positions, field.weights)

    @property
    def total(self) -> float:
        return math.fsum(self.masses)

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.masses > 0.0))


@dataclass(frozen=True)
class TransportPlan:
    flows: List[Tuple[int, int, float]]
    cost: float


def intensity(field, i: int) -> float:
    return math.fsum(field.weights[field.patch_mask(i)])


def _patch(field, i, uniform_fallback):
    mask = field.patch_mask(i)
    x, w = field.positions[mask], field.weights[mask]
    a = math.fsum(w)
    if a == 0.0:
        if not uniform_fallback or len(w) == 0:
            raise DomainError(f"Patch {i} has zero intensity; its center of vorticity is undefined.")
        return x, w, np.full(len(w), 1.0 / len(w)), 0.0
    return x, w, np.abs(w) / abs(a), a


def center_of_vorticity(field, i: int, uniform_fallback: bool = False):
    """X_i = (1/a_i) sum_p w_p x_p; with uniform_fallback a zero-intensity patch uses its geometric center."""
    x, w, probs, a = _patch(field, i, uniform_fallback)
    if a == 0.0:
        return probs @ x
    return (w @ x) / a


def w2_to_dirac(field, i: int, point, uniform_fallback: bool = False) -> float:
    """(sum_p |w_p|/|a_i| |x_p - point|^2)^(1/2)."""
    x, _, probs, _ = _patch(field, i, uniform_fallback)
    d2 = np.sum((x - np.asarray(point, dtype=np.float64)) ** 2, axis=1)
    return math.sqrt(math.fsum(probs * d2))


def w1_to_dirac(field, i: int, point, uniform_fallback: bool = False) -> float:
    """sum_p |w_p|/|a_i| |x_p - point|, the first-moment analogue of w2_to_dirac."""
    x, _, probs, _ = _patch(field, i, uniform_fallback)
    d = np.hypot(*(x - np.asarray(point, dtype=np.float64)).T)
    return math.fsum(probs * d)


def _signed_difference(f: DiscreteMeasure, g: DiscreteMeasure):
    """f - g on the union support, co-located atoms merged."""
    points = np.concatenate([f.points, g.points])
    masses = np.concatenate([f.masses, -g.masses])
    if len(points) == 0:
        return points, masses
    support, inverse = np.unique(points, axis=0, return_inverse=True)
    merged = np.zeros(len(support))
    np.add.at(merged, inverse.ravel(), masses)
    return support, merged


def transport_plan(f: DiscreteMeasure, g: DiscreteMeasure) -> TransportPlan:
    """Exact optimal plan between the positive and negative parts of f - g (network simplex)."""
    total_f, total_g = f.total, g.total
    if abs(total_f - total_g) > MASS_TOLERANCE:
        raise TransportContractError(total_f, total_g)
    support, diff = _signed_difference(f, g)
    sources, sinks = np.flatnonzero(diff > 0.0), np.flatnonzero(diff < 0.0)
    if len(sources) == 0 or len(sinks) == 0:
        return TransportPlan([], 0.0)
    supply, demand = diff[sources], -diff[sinks]
    mass_p, mass_n = math.fsum(supply), math.fsum(demand)
    # both parts are normalized to probability vectors; the residual mismatch is at most the tolerance
    scale = 0.5 * (mass_p + mass_n)
    cost_matrix = ot.dist(support[sources], support[sinks], metric="euclidean")
    plan = ot.emd(supply / mass_p, demand / mass_n, cost_matrix) * scale
    flows = [(int(sources[s]), int(sinks[k]), float(plan[s, k])) for s, k in zip(*np.nonzero(plan > 0.0))]
    cost = math.fsum((plan * cost_matrix).ravel())
    return TransportPlan(flows, float(cost))


def w1_signed(f: DiscreteMeasure, g: DiscreteMeasure) -> float:
    return transport_plan(f, g).cost


def center_velocity(state: FlowState, i: int, blob_size: float, uniform_fallback: bool = False):
    """dX_i/dt = (1/a_i) sum_{p in patch i} w_p F_i(x_p)."""
    field = state.field
    x, w, probs, a = _patch(field, i, uniform_fallback)
    F = far_field_at(state, x, i, blob_size)
    if a == 0.0:
        return probs @ F
    return (w @ F) / a


def rate_fit(pairs) -> float:
    """Least-squares slope of log(err) against log(eps)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise DomainError(f"A rate fit needs at least 3 (eps, err) pairs, got {len(pairs)}.")
    eps, err = np.array(pairs, dtype=np.float64).T
    if np.any(eps <= 0.0) or np.any(err <= 0.0):
        raise DomainError("Rate fit inputs must be positive.")
    slope, _ = np.polyfit(np.log(eps), np.log(err), 1)
    return float(slope)
