# app/services/euler_sim.py
"""Vortex-blob discretization of the Euler vorticity equation.

Particles carry immutable signed weights; only positions evolve. Each patch is
split into a p-part (singular profile) and an infinity-part (bounded profile),
carried as a per-particle tag.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from app.exceptions import ClearanceError, ConfigError, DomainError, PartialStepError
from app.services.geometry import Domain, boundary_distance, contains
from app.services.point_vortex import SeparationReport, min_boundary_distance
from app.services.velocity import FlowState, velocity_at

logger = logging.getLogger(__name__)

PROFILES = ("uniform-disc", "singular-perturbed")


@dataclass(frozen=True)
class PatchSpec:
    center: tuple
    strength: float
    eps: float
    h: float
    profile: str = "uniform-disc"
    beta: float = 0.5
    p: float = 3.0
    # explicit weight of the singular part; defaults to eps**(2/p)
    lam: float = None
    delta: float = 0.0

    @property
    def singular_weight(self) -> float:
        if self.profile != "singular-perturbed":
            return 0.0
        return self.eps ** (2.0 / self.p) if self.lam is None else float(self.lam)


@dataclass(frozen=True, eq=False)
class ParticleField:
    positions: np.ndarray
    weights: np.ndarray
    patch: np.ndarray
    # True for particles carrying the singular (p-integrable) part
    p_part: np.ndarray
    n_patches: int
    eps: float
    delta: float
    p: float
    h: float

    @classmethod
    def empty(cls, eps=0.0, delta=0.0, p=3.0, h=0.0):
        return cls(np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=int), np.zeros(0, dtype=bool),
                   0, eps, delta, p, h)

    @property
    def size(self) -> int:
        return len(self.weights)

    def patch_mask(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n_patches:
            raise DomainError(f"Unknown patch index {i}; the field has {self.n_patches} patches.")
        return self.patch == i

    def with_positions(self, positions):
        return replace(self, positions=positions)


def _exact_mass(weights, mass):
    """Rescale to sum `mass`, then absorb the fsum residue into the largest weight."""
    total = math.fsum(weights)
    if total == 0.0:
        return weights
    weights = weights * (mass / total)
    k = int(np.argmax(np.abs(weights)))
    weights[k] += mass - math.fsum(weights)
    return weights


def _check_spec(spec: PatchSpec, domain: Domain):
    if spec.profile not in PROFILES:
        raise ConfigError(f"Unknown patch profile '{spec.profile}', expected one of {PROFILES}.")
    if spec.eps <= 0.0 or spec.h <= 0.0:
        raise ConfigError(f"Patch scale and grid spacing must be positive (eps={spec.eps}, h={spec.h}).")
    if spec.h > spec.eps / 8.0:
        raise ConfigError(f"Grid spacing h={spec.h} exceeds eps/8={spec.eps / 8.0}.")
    if spec.profile == "singular-perturbed":
        if spec.beta * spec.p >= 2.0:
            raise ConfigError(f"beta*p={spec.beta * spec.p} must stay below 2 for an L^p profile.")
        if not 0.0 <= spec.singular_weight <= 1.0:
            raise ConfigError(f"Singular weight must lie in [0, 1], got {spec.singular_weight}.")
    center = np.asarray(spec.center, dtype=np.float64)
    if not contains(domain, center):
        raise ConfigError(f"Patch center {tuple(center)} is outside the domain.")
    clearance = boundary_distance(domain, center) - spec.eps
    if clearance < spec.delta - 1e-12:
        raise ConfigError(
            f"Patch at {tuple(center)} is {clearance:.4g} from the boundary, less than delta={spec.delta}."
        )


def make_patch(spec: PatchSpec, domain: Domain) -> ParticleField:
    """Cell-quadrature particles on B_eps(center): one cell per grid point Y + h(i, j) inside the ball."""
    _check_spec(spec, domain)
    n = int(math.ceil(spec.eps / spec.h))
    i, j = np.meshgrid(np.arange(-n, n + 1), np.arange(-n, n + 1), indexing="ij")
    offsets = spec.h * np.stack((i.ravel(), j.ravel()), axis=-1).astype(np.float64)
    radii = np.hypot(offsets[:, 0], offsets[:, 1])
    inside = radii < spec.eps
    offsets, radii = offsets[inside], radii[inside]
    cells = np.asarray(spec.center, dtype=np.float64) + offsets

    lam = spec.singular_weight
    bounded = _exact_mass(np.full(len(cells), spec.h * spec.h), (1.0 - lam) * spec.strength)
    positions, weights, p_part = [cells], [bounded], [np.zeros(len(cells), dtype=bool)]
    if lam > 0.0:
        # midpoint rule of |x|^-beta, truncated at h/2 in the center cell
        singular = np.maximum(radii, 0.5 * spec.h) ** (-spec.beta) * spec.h * spec.h
        positions.append(cells)
        weights.append(_exact_mass(singular, lam * spec.strength))
        p_part.append(np.ones(len(cells), dtype=bool))
    if lam == 1.0:
        positions, weights, p_part = positions[1:], weights[1:], p_part[1:]

    weights = np.concatenate(weights)
    logger.debug(f"Patch at {spec.center}: {len(weights)} particles (eps={spec.eps}, h={spec.h}, lambda={lam:.4g}).")
    return ParticleField(
        positions=np.concatenate(positions),
        weights=weights,
        patch=np.zeros(len(weights), dtype=int),
        p_part=np.concatenate(p_part),
        n_patches=1,
        eps=spec.eps,
        delta=spec.delta,
        p=spec.p,
        h=spec.h,
    )


def make_field(specs, domain: Domain) -> ParticleField:
    """Concatenate patches, checking that patch balls are at least delta apart."""
    specs = list(specs)
    if not specs:
        raise ConfigError("A particle field needs at least one patch.")
    for a in range(len(specs)):
        for b in range(a + 1, len(specs)):
            gap = float(np.hypot(*np.subtract(specs[a].center, specs[b].center))) - specs[a].eps - specs[b].eps
            if gap < max(specs[a].delta, specs[b].delta) - 1e-12:
                raise ConfigError(f"Patches {a} and {b} are {gap:.4g} apart, less than delta.")
    patches = [make_patch(spec, domain) for spec in specs]
    first = specs[0]
    return ParticleField(
        positions=np.concatenate([f.positions for f in patches]),
        weights=np.concatenate([f.weights for f in patches]),
        patch=np.concatenate([np.full(f.size, k, dtype=int) for k, f in enumerate(patches)]),
        p_part=np.concatenate([f.p_part for f in patches]),
        n_patches=len(patches),
        eps=first.eps,
        delta=first.delta,
        p=first.p,
        h=first.h,
    )


def advect(state: FlowState, dt: float, blob_size: float) -> ParticleField:
    """One RK4 step of every particle position under the Biot-Savart velocity."""
    field = state.field
    if field.size == 0:
        return field

    def stage(positions, t):
        moved = FlowState(state.domain, field.with_positions(positions), state.circulations, t, state.threads)
        return velocity_at(moved, positions, blob_size)

    x0 = field.positions
    try:
        k1 = velocity_at(state, x0, blob_size)
        k2 = stage(x0 + 0.5 * dt * k1, state.t + 0.5 * dt)
        k3 = stage(x0 + 0.5 * dt * k2, state.t + 0.5 * dt)
        k4 = stage(x0 + dt * k3, state.t + dt)
    except (ClearanceError, DomainError) as e:
        raise PartialStepError(state, e) from e
    return field.with_positions(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def min_patch_distance(field: ParticleField):
    """Minimum distance between particles of different patches, None for fewer than two patches."""
    if field.n_patches < 2:
        return None
    best = math.inf
    for i in range(field.n_patches):
        tree = cKDTree(field.positions[field.patch == i])
        others = field.positions[field.patch > i]
        if len(others):
            d, _ = tree.query(others, k=1)
            best = min(best, float(np.min(d)))
    return best


def support_monitor(field: ParticleField, domain: Domain, delta: float = None) -> SeparationReport:
    delta = field.delta if delta is None else delta
    return SeparationReport(min_patch_distance(field), min_boundary_distance(domain, field.positions),
                            float(delta), "C5")


def lp_proxy(field: ParticleField, i: int) -> float:
    """(sum over p-part cells of |w/h^2|^p h^2)^(1/p)."""
    w = field.weights[field.patch_mask(i) & field.p_part]
    if len(w) == 0:
        return 0.0
    h2 = field.h * field.h
    return float(math.fsum(np.abs(w / h2) ** field.p * h2) ** (1.0 / field.p))


def linf_proxy(field: ParticleField, i: int) -> float:
    """max over infinity-part cells of |w|/h^2."""
    w = field.weights[field.patch_mask(i) & ~field.p_part]
    if len(w) == 0:
        return 0.0
    return float(np.max(np.abs(w)) / (field.h * field.h))


def peak_vorticity(field: ParticleField) -> float:
    """Largest cell vorticity |sum of co-located weights|/h^2."""
    if field.size == 0 or field.h <= 0.0:
        return 0.0
    _, inverse = np.unique(field.positions, axis=0, return_inverse=True)
    cell = np.zeros(int(inverse.max()) + 1)
    np.add.at(cell, inverse.ravel(), field.weights)
    return float(np.max(np.abs(cell)) / (field.h * field.h))
