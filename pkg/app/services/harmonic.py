# app/services/harmonic.py
"""Dirichlet problems for the Laplacian on a Domain.

Three evaluator families share one interface:

* ImageSumEvaluator: closed-form method of images on a disk, for boundary data
  that is a weighted sum of Newtonian potentials.
* FourierModeEvaluator: exact mode-by-mode solution on analytic disks and
  annuli for arbitrary sampled boundary data.
* LayerPotentialEvaluator: double-layer potential plus one logarithmic source
  per hole, discretized by Nystrom/trapezoid on the boundary nodes.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg

from app.exceptions import ClearanceError, DomainError, SolverError
from app.services.geometry import (
    MIN_SOLVER_NODES,
    Domain,
    boundary_distance,
    contains,
)
from app.services.kernels import TWO_PI, perp

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
CLEARANCE_FACTOR = 5.0


def _points(x):
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(-1, 2), x.ndim == 1


class HarmonicEvaluator(ABC):
    """A solved Laplace problem, queried by value and gradient at interior points."""

    clearance = 0.0

    def __init__(self, domain: Domain, boundary_values=None):
        self.domain = domain
        self._boundary_values = boundary_values

    def _data(self):
        values = self._boundary_values if self._boundary_values is not None else self.boundary_trace()
        return np.concatenate([np.ravel(v) for v in values])

    @property
    def data_min(self) -> float:
        """Minimum of the prescribed boundary data."""
        return float(self._data().min())

    @property
    def data_max(self) -> float:
        return float(self._data().max())

    @property
    def log_coefficients(self) -> np.ndarray:
        """Coefficient of log|x - z_m| for every hole m (the hole's logarithmic period)."""
        return np.zeros(self.domain.n_holes)

    @abstractmethod
    def _values(self, pts): ...

    @abstractmethod
    def _gradients(self, pts): ...

    def _admit(self, pts):
        if self.clearance > 0.0:
            d = np.atleast_1d(boundary_distance(self.domain, pts))
            if d.size and d.min() <= self.clearance:
                raise ClearanceError(d.min(), self.clearance)
        elif pts.size and not np.all(contains(self.domain, pts)):
            raise DomainError("Harmonic evaluator queried outside the domain.")

    def value(self, x):
        pts, single = _points(x)
        self._admit(pts)
        v = self._values(pts)
        return float(v[0]) if single else v

    def gradient(self, x):
        pts, single = _points(x)
        self._admit(pts)
        g = self._gradients(pts)
        return g[0] if single else g

    def perp_gradient(self, x):
        return perp(self.gradient(x))

    def boundary_trace(self):
        """Values of the solution on the quadrature nodes, one array per component."""
        return [self._values(n.points) for n in self.domain.nodes]


# --- method of images on a disk ------------------------------------------------

class ImageSumEvaluator(HarmonicEvaluator):
    """Harmonic extension of sum_j w_j G(x - y_j) from the boundary of a disk.

    With x', y' scaled to the unit disk the extension is
    -(1/2pi) log R - (1/4pi) log(|y'|^2 |x'|^2 - 2 x'.y' + 1), which is regular at y' = 0.
    """

    def __init__(self, domain: Domain, sources, weights):
        center, radius = domain.disk_params
        self.center = center
        self.radius = float(radius)
        self.sources = np.asarray(sources, dtype=np.float64).reshape(-1, 2)
        self.weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        super().__init__(domain)

    def _scaled(self, pts):
        xs = (pts - self.center) / self.radius
        ys = (self.sources - self.center) / self.radius
        y2 = np.sum(ys * ys, axis=1)
        x2 = np.sum(xs * xs, axis=1)
        dot = xs @ ys.T
        denom = y2[None, :] * x2[:, None] - 2.0 * dot + 1.0
        return xs, ys, y2, denom

    def _values(self, pts):
        if self.sources.shape[0] == 0:
            return np.zeros(pts.shape[0])
        _, _, _, denom = self._scaled(pts)
        total = self.weights.sum()
        return -total * np.log(self.radius) / TWO_PI - (np.log(denom) @ self.weights) / (2.0 * TWO_PI)

    def _gradients(self, pts):
        if self.sources.shape[0] == 0:
            return np.zeros((pts.shape[0], 2))
        xs, ys, y2, denom = self._scaled(pts)
        c = self.weights[None, :] / denom
        gx = (c * (y2[None, :] * xs[:, 0:1] - ys[None, :, 0])).sum(axis=1)
        gy = (c * (y2[None, :] * xs[:, 1:2] - ys[None, :, 1])).sum(axis=1)
        return -np.stack((gx, gy), axis=-1) / (TWO_PI * self.radius)


# --- Fourier modes on analytic disks and annuli -----------------------------------

def _trig_coefficients(values, size):
    """Complex b_k with g(s) = Re sum_k b_k exp(iks), zero-padded to `size`."""
    n = len(values)
    c = np.fft.rfft(values)
    b = 2.0 * c / n
    b[0] = c[0] / n
    if n % 2 == 0:
        b[-1] = c[-1] / n
    out = np.zeros(size, dtype=np.complex128)
    out[: len(b)] = b
    return out


class FourierModeEvaluator(HarmonicEvaluator):
    """u = Re f(zeta), zeta = x - center, with f built mode by mode.

    Disk:    f = sum_k b_k (zeta/R)^k
    Annulus: f = A + B log(zeta/r1) + sum_k P_k (zeta/r1)^k + conj(Q_k) (r0/zeta)^k
    """

    def __init__(self, domain: Domain, outer_values, inner_values=None):
        super().__init__(domain, [outer_values] + ([] if inner_values is None else [inner_values]))
        if domain.backend == "analytic-disk":
            self.center, self.r1 = domain.disk_params
            self.r0 = None
            size = len(outer_values) // 2 + 1
            self.P = _trig_coefficients(outer_values, size)
            self.Q = np.zeros(size, dtype=np.complex128)
            self.B = 0.0
        else:
            self.center, self.r0, self.r1 = domain.annulus_params
            size = max(len(outer_values), len(inner_values)) // 2 + 1
            bo = _trig_coefficients(outer_values, size)
            bi = _trig_coefficients(inner_values, size)
            k = np.arange(size)
            q = (self.r0 / self.r1) ** k
            det = 1.0 - q * q
            det[0] = 1.0
            self.P = (bo - q * bi) / det
            self.Q = (bi - q * bo) / det
            self.B = float((bi[0] - bo[0]).real / np.log(self.r0 / self.r1))
            self.P[0] = bo[0].real
            self.Q[0] = 0.0
        self.k = np.arange(len(self.P))

    @property
    def log_coefficients(self):
        return np.array([self.B]) if self.r0 is not None else np.zeros(0)

    def _zeta(self, pts):
        return (pts[:, 0] - self.center[0]) + 1j * (pts[:, 1] - self.center[1])

    def _values(self, pts):
        z = self._zeta(pts)
        inner = (z[:, None] / self.r1) ** self.k[None, :]
        f = inner @ self.P
        if self.r0 is not None:
            k = self.k[1:]
            f = f + ((self.r0 / z[:, None]) ** k[None, :]) @ np.conj(self.Q[1:])
            f = f + self.B * np.log(np.abs(z) / self.r1)
        return f.real

    def _gradients(self, pts):
        z = self._zeta(pts)
        k = self.k[1:]
        df = ((z[:, None] / self.r1) ** (k[None, :] - 1) * (k / self.r1)[None, :]) @ self.P[1:]
        if self.r0 is not None:
            df = df - ((self.r0 / z[:, None]) ** k[None, :] * (k[None, :] / z[:, None])) @ np.conj(self.Q[1:])
            df = df + self.B / z
        return np.stack((df.real, -df.imag), axis=-1)


# --- boundary integral solver ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class LayerPotentialSolver:
    """Factorized Nystrom system for the interior Dirichlet problem on one domain.

    u(x) = sum_j k(x, y_j) w_j mu_j + sum_m A_m log|x - z_m|,
    k(x, y) = (1/2pi) (x - y).nu(y) / |x - y|^2, nu pointing out of the domain,
    with sum over nodes of hole m of w_j mu_j = 0 closing the system.
    """
    domain: Domain
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    component: np.ndarray
    hole_centers: np.ndarray
    matrix: np.ndarray
    lu: tuple
    clearance: float

    @classmethod
    def build(cls, domain: Domain):
        for curve in domain.curves:
            if curve.n_quad < MIN_SOLVER_NODES:
                raise SolverError(f"Curve '{curve.name}' has {curve.n_quad} nodes, the solver needs >= {MIN_SOLVER_NODES}.")
        nodes = domain.nodes
        points = np.concatenate([n.points for n in nodes])
        normals = np.concatenate([n.normals for n in nodes])
        weights = np.concatenate([n.weights for n in nodes])
        component = np.concatenate([np.full(len(n.weights), c) for c, n in enumerate(nodes)])
        curvature_term = np.concatenate([
            np.sum(n.second_derivatives * n.normals, axis=1) / (2.0 * n.speeds ** 2) for n in nodes
        ])
        hole_centers = np.array([_interior_point(domain, m) for m in range(1, domain.n_holes + 1)]).reshape(-1, 2)

        n, M = len(weights), domain.n_holes
        r = points[:, None, :] - points[None, :, :]
        r2 = np.sum(r * r, axis=2)
        np.fill_diagonal(r2, 1.0)
        kernel = np.sum(r * normals[None, :, :], axis=2) / r2
        np.fill_diagonal(kernel, curvature_term)
        matrix = np.zeros((n + M, n + M))
        matrix[:n, :n] = kernel * weights[None, :] / TWO_PI - 0.5 * np.eye(n)
        for m in range(M):
            matrix[:n, n + m] = np.log(np.hypot(*(points - hole_centers[m]).T))
            matrix[n + m, :n] = np.where(component == m + 1, weights, 0.0)

        cond = np.linalg.cond(matrix)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            worst = _worst_curve(domain, matrix, component)
            raise SolverError(f"Nystrom system is ill-conditioned (cond={cond:.3e}); worst curve: '{worst}'.")
        clearance = CLEARANCE_FACTOR * max(c.length / c.n_quad for c in domain.curves)
        logger.debug(f"Factorized Nystrom system of size {n + M} (cond={cond:.3e}, clearance={clearance:.3e}).")
        return cls(domain, points, normals, weights, component, hole_centers,
                   matrix, linalg.lu_factor(matrix), clearance)

    def solve(self, values) -> "LayerPotentialEvaluator":
        values = np.asarray(values, dtype=np.float64)
        rhs = np.concatenate([values, np.zeros(self.domain.n_holes)])
        solution = linalg.lu_solve(self.lu, rhs)
        n = len(self.weights)
        return LayerPotentialEvaluator(self, solution[:n], solution[n:], values)


def _interior_point(domain: Domain, m: int):
    hole = domain.holes[m - 1]
    c0 = dict(hole.coefficients).get(0, 0j)
    candidate = np.array([c0.real, c0.imag])
    if domain._paths[m].contains_points(candidate[None, :])[0]:
        return candidate
    centroid = domain.nodes[m].points.mean(axis=0)
    if domain._paths[m].contains_points(centroid[None, :])[0]:
        return centroid
    raise DomainError(f"Could not place a source point inside hole '{hole.name}'.")


def _worst_curve(domain, matrix, component):
    worst, worst_cond = domain.curves[0].name, 0.0
    for c, curve in enumerate(domain.curves):
        idx = np.flatnonzero(component == c)
        block_cond = np.linalg.cond(matrix[np.ix_(idx, idx)])
        if not np.isfinite(block_cond) or block_cond > worst_cond:
            worst, worst_cond = curve.name, block_cond if np.isfinite(block_cond) else np.inf
    return worst


@lru_cache(maxsize=16)
def solver_for(domain: Domain) -> LayerPotentialSolver:
    return LayerPotentialSolver.build(domain)


class LayerPotentialEvaluator(HarmonicEvaluator):
    def __init__(self, solver: LayerPotentialSolver, density, log_coeffs, values):
        self.solver = solver
        self.density = density
        self._log_coeffs = np.asarray(log_coeffs, dtype=np.float64)
        self.clearance = solver.clearance
        super().__init__(solver.domain, [values])

    @property
    def log_coefficients(self):
        return self._log_coeffs

    def _values(self, pts):
        s = self.solver
        r = pts[:, None, :] - s.points[None, :, :]
        r2 = np.sum(r * r, axis=2)
        kernel = np.sum(r * s.normals[None, :, :], axis=2) / r2
        v = kernel @ (s.weights * self.density) / TWO_PI
        for m, A in enumerate(self._log_coeffs):
            v = v + A * np.log(np.hypot(*(pts - s.hole_centers[m]).T))
        return v

    def _gradients(self, pts):
        s = self.solver
        r = pts[:, None, :] - s.points[None, :, :]
        r2 = np.sum(r * r, axis=2)
        rn = np.sum(r * s.normals[None, :, :], axis=2)
        q = s.weights * self.density / TWO_PI
        g = (s.normals[None, :, :] / r2[..., None] - 2.0 * (rn / r2 ** 2)[..., None] * r) * q[None, :, None]
        g = g.sum(axis=1)
        for m, A in enumerate(self._log_coeffs):
            d = pts - s.hole_centers[m]
            g = g + A * d / np.sum(d * d, axis=1)[:, None]
        return g

    def boundary_trace(self):
        s = self.solver
        n = len(s.weights)
        sol = np.concatenate([self.density, self._log_coeffs])
        trace = s.matrix[:n] @ sol
        return [trace[s.component == c] for c in range(len(self.domain.curves))]


# --- public operations ---------------------------------------------------------------

def clearance(domain: Domain) -> float:
    """Minimum boundary distance at which evaluators of this domain may be queried."""
    if domain.backend == "boundary-integral":
        return solver_for(domain).clearance
    return 0.0


def _component_values(domain: Domain, g):
    """Sample boundary data: one callable for all nodes, or one callable/constant per component."""
    if callable(g):
        return [np.asarray(g(n.points), dtype=np.float64) * np.ones(len(n.weights)) for n in domain.nodes]
    items = list(g)
    if len(items) != len(domain.curves):
        raise DomainError(f"Expected boundary data for {len(domain.curves)} components, got {len(items)}.")
    return [
        np.asarray(item(n.points) if callable(item) else item, dtype=np.float64) * np.ones(len(n.weights))
        for item, n in zip(items, domain.nodes)
    ]


def _solve_sampled(domain: Domain, values) -> HarmonicEvaluator:
    if domain.backend == "analytic-disk":
        return FourierModeEvaluator(domain, values[0])
    if domain.backend == "analytic-annulus":
        return FourierModeEvaluator(domain, values[0], values[1])
    return solver_for(domain).solve(np.concatenate(values))


def solve_dirichlet(domain: Domain, g) -> HarmonicEvaluator:
    """Harmonic function on the domain with boundary trace g."""
    return _solve_sampled(domain, _component_values(domain, g))


def gradient(ev: HarmonicEvaluator, x):
    return ev.gradient(x)


def _check_hole_index(domain: Domain, m: int):
    if domain.n_holes == 0:
        raise DomainError("The domain has no holes.")
    if not 1 <= m <= domain.n_holes:
        raise DomainError(f"Hole index {m} out of range 1..{domain.n_holes}.")


@lru_cache(maxsize=64)
def harmonic_measure(domain: Domain, m: int) -> HarmonicEvaluator:
    """w_m: 1 on hole m, 0 on every other boundary component."""
    _check_hole_index(domain, m)
    return solve_dirichlet(domain, [1.0 if c == m else 0.0 for c in range(len(domain.curves))])


@dataclass(frozen=True, eq=False)
class HoleField:
    """xi_m = grad^perp psi, psi = sum_k c_k w_k constant on every component (0 on the outer one)."""
    domain: Domain
    m: int
    stream_constants: np.ndarray
    measures: tuple

    def stream(self, x):
        return sum(c * w.value(x) for c, w in zip(self.stream_constants, self.measures))

    def velocity(self, x):
        return sum(c * w.perp_gradient(x) for c, w in zip(self.stream_constants, self.measures))

    def _node_velocity(self, nodes):
        return sum(c * perp(w._gradients(nodes.points)) for c, w in zip(self.stream_constants, self.measures))

    def circulations(self) -> np.ndarray:
        """Counterclockwise circulation of xi_m around every hole."""
        if self.domain.backend == "boundary-integral":
            logs = sum(c * w.log_coefficients for c, w in zip(self.stream_constants, self.measures))
            return TWO_PI * logs
        out = []
        for nodes in self.domain.nodes[1:]:
            u = self._node_velocity(nodes)
            out.append(float(np.sum(np.sum(u * nodes.tangents, axis=1) * nodes.weights)))
        return np.array(out)

    def tangency_defect(self) -> float:
        """max |xi_m . nu| over boundary nodes, from the tangential derivative of the stream trace."""
        traces = [sum(c * t for c, t in zip(self.stream_constants, trace))
                  for trace in zip(*[w.boundary_trace() for w in self.measures])]
        worst = 0.0
        for trace, nodes in zip(traces, self.domain.nodes):
            n = len(trace)
            k = np.fft.rfftfreq(n, d=1.0 / n)
            derivative = np.fft.irfft(1j * k * np.fft.rfft(trace), n)
            worst = max(worst, float(np.max(np.abs(derivative / nodes.speeds))))
        return worst


@lru_cache(maxsize=64)
def hole_field(domain: Domain, m: int) -> HoleField:
    _check_hole_index(domain, m)
    measures = tuple(harmonic_measure(domain, k) for k in range(1, domain.n_holes + 1))
    periods = np.array([w.log_coefficients for w in measures]).T
    rhs = np.zeros(domain.n_holes)
    rhs[m - 1] = 1.0 / TWO_PI
    try:
        if np.linalg.cond(periods) > CONDITION_LIMIT:
            raise np.linalg.LinAlgError("period matrix is ill-conditioned")
        constants = np.linalg.solve(periods, rhs)
    except np.linalg.LinAlgError as e:
        raise SolverError(f"Cannot determine stream constants for hole {m}: {e}") from e
    return HoleField(domain, m, constants, measures)


def _source_values(domain: Domain, sources, weights):
    out = []
    for nodes in domain.nodes:
        if sources.shape[0] == 0:
            out.append(np.zeros(len(nodes.weights)))
            continue
        d = nodes.points[:, None, :] - sources[None, :, :]
        out.append(-(np.log(np.sum(d * d, axis=2)) @ weights) / (2.0 * TWO_PI))
    return out


def _check_sources(domain: Domain, sources):
    if sources.shape[0] == 0:
        return
    if domain.backend == "boundary-integral":
        d = np.atleast_1d(boundary_distance(domain, sources))
        limit = clearance(domain)
        if d.min() <= limit:
            raise ClearanceError(d.min(), limit)
    elif not np.all(contains(domain, sources)):
        raise DomainError("Point source outside the domain or on its boundary.")


def source_extension(domain: Domain, sources, weights) -> HarmonicEvaluator:
    """Harmonic extension of sum_j weights_j G(x - sources_j) from the boundary."""
    sources = np.asarray(sources, dtype=np.float64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    _check_sources(domain, sources)
    if domain.backend == "analytic-disk":
        return ImageSumEvaluator(domain, sources, weights)
    return _solve_sampled(domain, _source_values(domain, sources, weights))


def eta_evaluator(domain: Domain, field) -> HarmonicEvaluator:
    """eta: harmonic extension of G * omega for a particle field."""
    return source_extension(domain, field.positions, field.weights)


def theta_evaluator(domain: Domain, strengths, positions) -> HarmonicEvaluator:
    """theta: boundary interaction of point vortices."""
    return source_extension(domain, positions, strengths)
