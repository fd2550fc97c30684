# tests/test_geometry.py
import numpy as np
import pytest

from app.exceptions import DomainError
from app.services.geometry import (
    BoundaryCurve,
    Domain,
    boundary_distance,
    contains,
    quadrature_nodes,
)


def test_circle_quadrature_is_exact(unit_disk):
    nodes = unit_disk.nodes[0]
    assert nodes.weights.sum() == pytest.approx(2.0 * np.pi, rel=1e-12)
    assert np.allclose(nodes.normals, nodes.points)
    assert unit_disk.outer.length == pytest.approx(2.0 * np.pi)


def test_ellipse_perimeter_converges_spectrally(ellipse):
    coarse = quadrature_nodes(ellipse.outer, 128).weights.sum()
    fine = quadrature_nodes(ellipse.outer, 512).weights.sum()
    assert coarse == pytest.approx(fine, rel=1e-12)
    assert 2.0 * np.pi < fine < 2.0 * np.pi * 1.5


def test_hole_normals_point_into_the_hole(annulus):
    hole = annulus.nodes[1]
    assert np.allclose(hole.normals, -hole.points / 0.5)
    assert annulus.holes[0].role == "hole"
    assert annulus.n_holes == 1


def test_tangents_run_counterclockwise_for_clockwise_parametrization():
    curve = BoundaryCurve(((0, 0j), (-1, 1 + 0j)), n_quad=64)
    assert not curve.counterclockwise
    nodes = quadrature_nodes(curve)
    cross = nodes.points[:, 0] * nodes.tangents[:, 1] - nodes.points[:, 1] * nodes.tangents[:, 0]
    assert np.all(cross > 0.0)
    assert np.allclose(nodes.normals, nodes.points)


def test_contains_excludes_boundary(unit_disk, annulus):
    assert contains(unit_disk, [0.0, 0.0])
    assert not contains(unit_disk, [1.0, 0.0])
    assert contains(unit_disk, [0.999999, 0.0])
    assert list(contains(annulus, [[0.0, 0.0], [0.75, 0.0], [1.2, 0.0]])) == [False, True, False]


def test_contains_on_boundary_integral_domain(bie_disk):
    assert list(contains(bie_disk, [[0.0, 0.0], [0.5, 0.5], [2.0, 0.0]])) == [True, True, False]


def test_boundary_distance(unit_disk, annulus, bie_disk):
    assert boundary_distance(unit_disk, [0.3, 0.4]) == pytest.approx(0.5)
    assert boundary_distance(annulus, [0.7, 0.0]) == pytest.approx(0.2)
    # polyline distance underestimates the circle by at most the chord sagitta
    assert boundary_distance(bie_disk, [0.3, 0.4]) == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(DomainError):
        boundary_distance(unit_disk, [1.5, 0.0])


def test_backend_requirements():
    with pytest.raises(DomainError):
        Domain.disk(backend="analytic-annulus")
    with pytest.raises(DomainError):
        Domain.unit_disk(backend="spectral")
    with pytest.raises(DomainError):
        Domain.annulus(1.0, 0.5)


def test_from_config_builds_holes():
    domain = Domain.from_config({
        "backend": "boundary-integral",
        "n_quad": 64,
        "curves": [
            {"role": "outer", "coefficients": [[1, 1.0, 0.0]]},
            {"role": "hole", "coefficients": [[0, 0.3, 0.0], [1, 0.1, 0.0]]},
        ],
    })
    assert domain.n_holes == 1
    assert domain.holes[0].name == "hole 1"
    assert not contains(domain, [0.3, 0.0])


def test_from_config_rejects_bad_layouts():
    with pytest.raises(DomainError):
        Domain.from_config({"backend": "boundary-integral", "curves": []})
    with pytest.raises(DomainError):
        Domain.from_config({
            "backend": "boundary-integral",
            "curves": [
                {"role": "outer", "coefficients": [[1, 1.0, 0.0]]},
                {"role": "hole", "coefficients": [[0, 0.9, 0.0], [1, 0.3, 0.0]]},
            ],
        })


def test_degenerate_curves_are_rejected():
    # lemniscate of Gerono: crosses itself and encloses no net area
    with pytest.raises(DomainError):
        BoundaryCurve(((1, 0.5 + 0j), (-1, 0.5 + 0j), (2, 0.25 + 0j), (-2, -0.25 + 0j)))
    with pytest.raises(DomainError):
        BoundaryCurve.circle(radius=1.0, n_quad=2)
    with pytest.raises(DomainError):
        BoundaryCurve.circle(radius=-1.0)


def test_with_backend_keeps_geometry(unit_disk):
    bie = unit_disk.with_backend("boundary-integral", 64)
    assert bie.backend == "boundary-integral"
    assert bie.outer.n_quad == 64
    assert np.allclose(bie.outer.as_circle()[0], [0.0, 0.0])
    assert bie.outer.as_circle()[1] == pytest.approx(1.0)


@pytest.mark.parametrize("coefficients", [
    ((1, 1j),),          # i exp(is): rotated by a quarter turn
    ((-1, 1.0 + 0j),),   # exp(-is): clockwise
])
def test_analytic_backends_need_standard_circles(coefficients):
    curve = BoundaryCurve(coefficients, n_quad=64)
    assert curve.as_circle() is not None
    assert not curve.is_standard_circle
    with pytest.raises(DomainError):
        Domain(curve, (), "analytic-disk")

    domain = Domain(curve, (), "boundary-integral").with_backend("analytic-disk")
    assert domain.outer.is_standard_circle
    assert domain.outer.n_quad == 64
    assert np.allclose(domain.outer.point([0.0, np.pi / 2]), [[1.0, 0.0], [0.0, 1.0]], atol=1e-15)


def test_with_backend_standardizes_annulus_holes():
    outer = BoundaryCurve(((-1, 1.0 + 0j),), 64)
    hole = BoundaryCurve(((1, -0.5j),), 64, "hole", "hole 1")
    domain = Domain(outer, (hole,), "boundary-integral").with_backend("analytic-annulus")
    center, r0, r1 = domain.annulus_params
    assert np.allclose(center, [0.0, 0.0])
    assert (r0, r1) == pytest.approx((0.5, 1.0))
    assert all(c.is_standard_circle for c in domain.curves)
