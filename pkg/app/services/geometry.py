# app/services/geometry.py
"""Bounded, possibly multiply-connected domains with smooth boundaries.

Every boundary component is a closed curve given by a truncated Fourier series
z(s) = sum_k c_k exp(i k s), s in [0, 2pi). Circles are the special case
{0: center, 1: radius}.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from matplotlib.path import Path

from app.exceptions import DomainError

logger = logging.getLogger(__name__)

BACKENDS = ("analytic-disk", "analytic-annulus", "boundary-integral")
MIN_SOLVER_NODES = 16
BOUNDARY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class QuadratureNodes:
    """Trapezoidal nodes of one boundary component.

    `normals` point out of the domain; `tangents` run counterclockwise.
    """
    params: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    # d^2 z / ds^2 and |dz/ds| at the nodes, needed for the double-layer diagonal
    second_derivatives: np.ndarray
    speeds: np.ndarray


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    coefficients: tuple
    n_quad: int = 256
    role: str = "outer"
    name: str = "outer"

    def __post_init__(self):
        if self.role not in ("outer", "hole"):
            raise DomainError(f"Unknown curve role '{self.role}'.")
        if self.n_quad < 3:
            raise DomainError(f"Curve '{self.name}' needs at least 3 nodes, got {self.n_quad}.")
        if not self.coefficients:
            raise DomainError(f"Curve '{self.name}' has no Fourier coefficients.")
        speeds = np.abs(self._complex_derivative(self._params(self.n_quad)))
        if np.min(speeds) <= 0.0:
            raise DomainError(f"Curve '{self.name}' has vanishing speed at a quadrature node.")
        if self.signed_area == 0.0:
            raise DomainError(f"Curve '{self.name}' encloses no area.")
        if _self_intersects(self.point(self._params(min(self.n_quad, 256)))):
            raise DomainError(f"Curve '{self.name}' is not simple at quadrature resolution.")

    @classmethod
    def circle(cls, center=(0.0, 0.0), radius=1.0, n_quad=256, role="outer", name=None):
        if radius <= 0.0:
            raise DomainError(f"Circle radius must be positive, got {radius}.")
        c0 = complex(center[0], center[1])
        return cls(((0, c0), (1, complex(radius, 0.0))), n_quad=n_quad, role=role, name=name or role)

    @classmethod
    def from_config(cls, block: dict, n_quad: int, name: str):
        try:
            coefficients = tuple((int(k), complex(float(re), float(im))) for k, re, im in block["coefficients"])
            role = block.get("role", "outer")
        except (KeyError, TypeError, ValueError) as e:
            raise DomainError(f"Malformed curve block '{name}': {e}") from e
        return cls(coefficients, n_quad=int(block.get("n_quad", n_quad)), role=role, name=name)

    @staticmethod
    def _params(n):
        return 2.0 * np.pi * np.arange(n) / n

    def _series(self, s, order):
        s = np.asarray(s, dtype=np.float64)
        z = np.zeros(s.shape, dtype=np.complex128)
        for k, c in self.coefficients:
            z = z + c * (1j * k) ** order * np.exp(1j * k * s)
        return z

    def _complex_point(self, s):
        return self._series(s, 0)

    def _complex_derivative(self, s):
        return self._series(s, 1)

    def point(self, s):
        z = self._complex_point(s)
        return np.stack((z.real, z.imag), axis=-1)

    def derivative(self, s):
        z = self._complex_derivative(s)
        return np.stack((z.real, z.imag), axis=-1)

    def second_derivative(self, s):
        z = self._series(s, 2)
        return np.stack((z.real, z.imag), axis=-1)

    @cached_property
    def signed_area(self) -> float:
        # 1/2 Im of the contour integral of conj(z) dz, exact for the series
        return float(np.pi * sum(k * abs(c) ** 2 for k, c in self.coefficients))

    @property
    def counterclockwise(self) -> bool:
        return self.signed_area > 0.0

    def as_circle(self):
        """(center, radius) when the series describes a circle, else None."""
        coeffs = {k: c for k, c in self.coefficients if abs(c) > 1e-14}
        first = [k for k in coeffs if k != 0]
        if len(first) != 1 or abs(first[0]) != 1:
            return None
        c0 = coeffs.get(0, 0j)
        return np.array([c0.real, c0.imag]), abs(coeffs[first[0]])

    @property
    def is_standard_circle(self) -> bool:
        """center + r exp(is) with r real and positive: node j sits at angle 2pi j/n."""
        coeffs = {k: c for k, c in self.coefficients if abs(c) > 1e-14}
        c1 = coeffs.get(1)
        return set(coeffs) <= {0, 1} and c1 is not None and c1.real > 0.0 and abs(c1.imag) <= 1e-14 * c1.real

    def standardized(self, n_quad: int = None):
        """The same circle written as center + r exp(is); other curves unchanged."""
        n = self.n_quad if n_quad is None else n_quad
        circle = self.as_circle()
        if circle is None:
            return BoundaryCurve(self.coefficients, n, self.role, self.name)
        return BoundaryCurve.circle(circle[0], circle[1], n, self.role, self.name)

    @cached_property
    def length(self) -> float:
        return float(quadrature_nodes(self).weights.sum())


def quadrature_nodes(curve: BoundaryCurve, n_quad: int = None) -> QuadratureNodes:
    """Equispaced trapezoidal nodes with weights |z'(s)| * 2pi/n."""
    n = curve.n_quad if n_quad is None else int(n_quad)
    s = BoundaryCurve._params(n)
    dz = curve.derivative(s)
    speeds = np.hypot(dz[:, 0], dz[:, 1])
    orientation = 1.0 if curve.counterclockwise else -1.0
    tangents = orientation * dz / speeds[:, None]
    if curve.role == "outer":
        normals = np.stack((tangents[:, 1], -tangents[:, 0]), axis=-1)
    else:
        normals = np.stack((-tangents[:, 1], tangents[:, 0]), axis=-1)
    return QuadratureNodes(
        params=s,
        points=curve.point(s),
        tangents=tangents,
        normals=normals,
        weights=speeds * (2.0 * np.pi / n),
        second_derivatives=curve.second_derivative(s),
        speeds=speeds,
    )


def _self_intersects(points) -> bool:
    a = points
    b = np.roll(points, -1, axis=0)
    n = len(a)

    def orient(p, q, r):
        return np.sign((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                       - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))

    A, B = a[:, None, :], b[:, None, :]
    C, D = a[None, :, :], b[None, :, :]
    crossing = (orient(A, B, C) * orient(A, B, D) < 0) & (orient(C, D, A) * orient(C, D, B) < 0)
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    adjacent = (gap <= 1) | (gap == n - 1)
    return bool(np.any(crossing & ~adjacent))


def _segment_distances(points, curve_points):
    """Distance from each point to the closed polyline through curve_points."""
    a = curve_points
    b = np.roll(curve_points, -1, axis=0)
    ab = b - a
    ab2 = np.sum(ab * ab, axis=1)
    ap = points[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(ap * ab[None, :, :], axis=2) / ab2[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * ab[None, :, :]
    d = points[:, None, :] - closest
    return np.sqrt(np.min(np.sum(d * d, axis=2), axis=1))


@dataclass(frozen=True, eq=False)
class Domain:
    outer: BoundaryCurve
    holes: tuple = ()
    backend: str = "boundary-integral"

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise DomainError(f"Unknown backend '{self.backend}', expected one of {BACKENDS}.")
        if self.outer.role != "outer" or any(h.role != "hole" for h in self.holes):
            raise DomainError("Curve roles do not match their position in the domain.")
        if self.backend == "analytic-disk" and (self.holes or self.outer.as_circle() is None):
            raise DomainError("The analytic-disk backend needs a circular outer boundary and no holes.")
        if self.backend == "analytic-annulus" and self.annulus_params is None:
            raise DomainError("The analytic-annulus backend needs two concentric circles.")
        if self.backend != "boundary-integral" and not all(c.is_standard_circle for c in self.curves):
            raise DomainError(f"The {self.backend} backend needs circles written as center + r exp(is); "
                              f"use Domain.with_backend to convert.")
        outer_path = Path(self.outer.point(BoundaryCurve._params(self.outer.n_quad)))
        hole_paths = [Path(h.point(BoundaryCurve._params(h.n_quad))) for h in self.holes]
        for i, hole in enumerate(self.holes):
            pts = hole.point(BoundaryCurve._params(hole.n_quad))
            if not np.all(outer_path.contains_points(pts)):
                raise DomainError(f"Hole '{hole.name}' is not strictly inside the outer boundary.")
            for j, other in enumerate(hole_paths):
                if j != i and np.any(other.contains_points(pts)):
                    raise DomainError(f"Holes '{hole.name}' and '{self.holes[j].name}' overlap.")

    # --- constructors -------------------------------------------------------
    @classmethod
    def disk(cls, center=(0.0, 0.0), radius=1.0, n_quad=256, backend="analytic-disk"):
        return cls(BoundaryCurve.circle(center, radius, n_quad), (), backend)

    @classmethod
    def unit_disk(cls, n_quad=256, backend="analytic-disk"):
        return cls.disk((0.0, 0.0), 1.0, n_quad, backend)

    @classmethod
    def annulus(cls, inner_radius=0.5, outer_radius=1.0, center=(0.0, 0.0), n_quad=256,
                backend="analytic-annulus"):
        if not 0.0 < inner_radius < outer_radius:
            raise DomainError(f"Annulus radii must satisfy 0 < r0 < r1, got {inner_radius}, {outer_radius}.")
        outer = BoundaryCurve.circle(center, outer_radius, n_quad, "outer", "outer")
        hole = BoundaryCurve.circle(center, inner_radius, n_quad, "hole", "hole 1")
        return cls(outer, (hole,), backend)

    @classmethod
    def from_config(cls, block: dict):
        """Build a domain from the `[domain]` block of a scenario file."""
        backend = block.get("backend", "boundary-integral")
        n_quad = int(block.get("n_quad", 256))
        center = tuple(block.get("center", (0.0, 0.0)))
        if backend == "analytic-disk":
            return cls.disk(center, float(block.get("radius", 1.0)), n_quad, backend)
        if backend == "analytic-annulus":
            return cls.annulus(float(block["inner_radius"]), float(block["outer_radius"]), center, n_quad, backend)
        curves = block.get("curves")
        if not curves:
            raise DomainError("A boundary-integral domain needs a non-empty 'curves' list.")
        outer = [c for c in curves if c.get("role", "outer") == "outer"]
        holes = [c for c in curves if c.get("role") == "hole"]
        if len(outer) != 1:
            raise DomainError(f"Expected exactly one outer curve, found {len(outer)}.")
        return cls(
            BoundaryCurve.from_config(outer[0], n_quad, "outer"),
            tuple(BoundaryCurve.from_config(h, n_quad, f"hole {m}") for m, h in enumerate(holes, start=1)),
            backend,
        )

    def with_backend(self, backend: str, n_quad: int = None):
        """Same geometry, different solver backend (and optionally resolution).

        Circles are rewritten as center + r exp(is) for the analytic backends.
        """
        def regrid(curve):
            if backend != "boundary-integral":
                return curve.standardized(n_quad)
            n = curve.n_quad if n_quad is None else n_quad
            return BoundaryCurve(curve.coefficients, n, curve.role, curve.name)
        return Domain(regrid(self.outer), tuple(regrid(h) for h in self.holes), backend)

    # --- descriptors --------------------------------------------------------
    @property
    def n_holes(self) -> int:
        return len(self.holes)

    @property
    def curves(self):
        return (self.outer,) + tuple(self.holes)

    @property
    def disk_params(self):
        if self.holes:
            return None
        return self.outer.as_circle()

    @cached_property
    def annulus_params(self):
        """(center, r0, r1) for two concentric circles, else None."""
        if len(self.holes) != 1:
            return None
        outer, hole = self.outer.as_circle() or (None, None), self.holes[0].as_circle() or (None, None)
        if outer[0] is None or hole[0] is None or not np.allclose(outer[0], hole[0], atol=1e-14):
            return None
        return outer[0], hole[1], outer[1]

    @cached_property
    def nodes(self):
        return tuple(quadrature_nodes(c) for c in self.curves)

    @cached_property
    def _paths(self):
        return tuple(Path(n.points) for n in self.nodes)


def _as_points(x):
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(-1, 2), x.ndim == 1


def contains(domain: Domain, x):
    """True where x lies in the open domain; points within 1e-12 of the boundary count as outside."""
    pts, single = _as_points(x)
    if domain.backend == "analytic-disk":
        center, radius = domain.disk_params
        inside = np.hypot(*(pts - center).T) < radius - BOUNDARY_TOLERANCE
    elif domain.backend == "analytic-annulus":
        center, r0, r1 = domain.annulus_params
        r = np.hypot(*(pts - center).T)
        inside = (r > r0 + BOUNDARY_TOLERANCE) & (r < r1 - BOUNDARY_TOLERANCE)
    else:
        outer_path, *hole_paths = domain._paths
        inside = outer_path.contains_points(pts)
        for path in hole_paths:
            inside &= ~path.contains_points(pts)
        if np.any(inside):
            near = _polyline_distance(domain, pts[inside]) <= BOUNDARY_TOLERANCE
            inside[np.flatnonzero(inside)[near]] = False
    return bool(inside[0]) if single else inside


def _polyline_distance(domain: Domain, pts):
    return np.min([_segment_distances(pts, n.points) for n in domain.nodes], axis=0)


def boundary_distance(domain: Domain, x):
    """Distance to the nearest boundary component.

    Exact for the analytic backends; polyline distance at quadrature resolution
    otherwise, with error O(n_quad^-2).
    """
    pts, single = _as_points(x)
    if not np.all(contains(domain, pts)):
        raise DomainError("boundary_distance queried at a point outside the domain.")
    if domain.backend == "analytic-disk":
        center, radius = domain.disk_params
        d = radius - np.hypot(*(pts - center).T)
    elif domain.backend == "analytic-annulus":
        center, r0, r1 = domain.annulus_params
        r = np.hypot(*(pts - center).T)
        d = np.minimum(r - r0, r1 - r)
    else:
        d = _polyline_distance(domain, pts)
    return float(d[0]) if single else d
