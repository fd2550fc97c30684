# tests/test_euler_sim.py
import math

import numpy as np
import pytest

from app.exceptions import ConfigError, DomainError
from app.services.euler_sim import (
    ParticleField,
    PatchSpec,
    advect,
    linf_proxy,
    lp_proxy,
    make_field,
    make_patch,
    min_patch_distance,
    peak_vorticity,
    support_monitor,
)
from app.services.metrics import center_of_vorticity, w2_to_dirac
from app.services.velocity import FlowState

EPS, H = 0.05, 0.005


def uniform(center=(0.0, 0.0), strength=1.0, **kw):
    return PatchSpec(center=center, strength=strength, eps=EPS, h=H, **kw)


def test_uniform_patch_has_exact_mass_and_support(unit_disk):
    field = make_patch(uniform(strength=2.5), unit_disk)
    assert math.fsum(field.weights) == 2.5
    assert np.all(np.hypot(*field.positions.T) < EPS)
    assert field.size == pytest.approx(math.pi * (EPS / H) ** 2, rel=0.1)
    assert not field.p_part.any()


def test_singular_patch_splits_its_mass(unit_disk):
    spec = uniform(profile="singular-perturbed", beta=0.5, p=3.0)
    field = make_patch(spec, unit_disk)
    lam = EPS ** (2.0 / 3.0)
    assert spec.singular_weight == pytest.approx(lam)
    assert math.fsum(field.weights[field.p_part]) == pytest.approx(lam, rel=1e-14)
    assert math.fsum(field.weights[~field.p_part]) == pytest.approx(1.0 - lam, rel=1e-14)
    # the singular part peaks at the center cell
    singular = field.weights[field.p_part]
    center = np.argmin(np.hypot(*field.positions[field.p_part].T))
    assert singular[center] == singular.max()


def test_explicit_singular_weight(unit_disk):
    field = make_patch(uniform(profile="singular-perturbed", lam=1.0), unit_disk)
    assert field.p_part.all()
    assert linf_proxy(field, 0) == 0.0


@pytest.mark.parametrize("spec", [
    uniform(profile="gaussian"),
    PatchSpec(center=(0.0, 0.0), strength=1.0, eps=EPS, h=EPS / 4),
    uniform(profile="singular-perturbed", beta=0.8, p=3.0),
    uniform(center=(1.5, 0.0)),
    uniform(center=(0.9, 0.0), delta=0.1),
])
def test_invalid_patches_are_rejected(unit_disk, spec):
    with pytest.raises(ConfigError):
        make_patch(spec, unit_disk)


def test_field_keeps_patches_apart(unit_disk):
    field = make_field([uniform((0.3, 0.0), delta=0.2), uniform((-0.3, 0.0), delta=0.2)], unit_disk)
    assert field.n_patches == 2
    assert min_patch_distance(field) == pytest.approx(0.6 - 2 * EPS, abs=3 * H)
    with pytest.raises(ConfigError):
        make_field([uniform((0.1, 0.0), delta=0.2), uniform((-0.1, 0.0), delta=0.2)], unit_disk)
    with pytest.raises(DomainError):
        field.patch_mask(2)


def test_centered_patch_stays_put(unit_disk):
    field = make_field([uniform()], unit_disk)
    state = FlowState(unit_disk, field)
    moved = advect(state, 0.01, 2 * H)
    assert np.allclose(center_of_vorticity(moved, 0), [0.0, 0.0], atol=1e-12)
    # a uniform disc rotates rigidly about its center at half its vorticity
    assert not np.allclose(moved.positions, field.positions)
    assert np.array_equal(moved.weights, field.weights)


def test_support_monitor_reports_c5(unit_disk):
    field = make_field([uniform((0.3, 0.0)), uniform((-0.3, 0.0))], unit_disk)
    report = support_monitor(field, unit_disk, 0.4)
    assert report.kind == "C5"
    assert report.ok
    assert not support_monitor(field, unit_disk, 1.2).ok
    assert support_monitor(field, unit_disk, 1.2).violation == "C5-pair"


def test_norm_proxies(unit_disk):
    flat = make_patch(uniform(), unit_disk)
    assert lp_proxy(flat, 0) == 0.0
    assert linf_proxy(flat, 0) == pytest.approx(1.0 / (math.pi * EPS ** 2), rel=0.1)
    assert peak_vorticity(flat) == pytest.approx(linf_proxy(flat, 0))

    singular = make_patch(uniform(profile="singular-perturbed"), unit_disk)
    assert lp_proxy(singular, 0) > 0.0
    assert peak_vorticity(singular) > linf_proxy(singular, 0)


def test_uniform_patch_second_moment_approaches_eps_over_sqrt2(unit_disk):
    eps = 0.1
    limit = eps / math.sqrt(2.0)
    errors = []
    for refinement in (8, 16, 32):
        field = make_patch(PatchSpec((0.0, 0.0), 1.0, eps, eps / refinement), unit_disk)
        errors.append(abs(w2_to_dirac(field, 0, [0.0, 0.0]) - limit) / limit)
    assert errors[-1] < errors[0]
    assert errors[-1] < 0.01


def test_support_monitor_matches_brute_force(unit_disk):
    field = make_field([uniform((0.3, 0.1)), uniform((-0.25, -0.2)), uniform((0.0, 0.6))], unit_disk)
    report = support_monitor(field, unit_disk, 0.3)
    x, patch = field.positions, field.patch
    d = np.hypot(x[:, None, 0] - x[None, :, 0], x[:, None, 1] - x[None, :, 1])
    other = patch[:, None] != patch[None, :]
    assert report.min_pair == pytest.approx(float(d[other].min()), abs=1e-15)
    assert report.min_boundary == pytest.approx(1.0 - float(np.hypot(*x.T).max()), abs=1e-15)


def advect_to(field, domain, t_end, steps, blob_size):
    dt = t_end / steps
    for n in range(steps):
        field = advect(FlowState(domain, field, (), n * dt), dt, blob_size)
    return field.positions


def test_advection_is_fourth_order(unit_disk):
    positions = np.array([[0.4, 0.0], [-0.1, 0.3], [0.0, -0.5]])
    weights = np.array([1.0, 0.6, -0.8])
    field = ParticleField(positions, weights, np.arange(3), np.zeros(3, dtype=bool), 3, 0.05, 0.1, 3.0, 0.005)
    coarse, middle, fine = (advect_to(field, unit_disk, 0.8, n, 0.05) for n in (16, 32, 64))
    ratio = np.max(np.abs(coarse - middle)) / np.max(np.abs(middle - fine))
    assert 3.7 <= math.log2(ratio) <= 4.3
