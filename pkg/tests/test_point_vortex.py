# tests/test_point_vortex.py
import math

import numpy as np
import pytest

from app.exceptions import DomainError, PartialStepError, SeparationViolation
from app.services.geometry import Domain
from app.services.point_vortex import (
    PointVortexState,
    SeparationReport,
    green_regular_part,
    hamiltonian,
    kr_rhs,
    separation_monitor,
    step,
    suggest_dt,
    vortex_hole_coefficients,
)
from app.services.kernels import TWO_PI


def orbit_speed(r, a=1.0):
    """Angular velocity of a single vortex at radius r in the unit disk."""
    return a / (TWO_PI * (1.0 - r * r))


def test_centered_vortex_is_at_rest(unit_disk):
    state = PointVortexState([[0.0, 0.0]], [1.0])
    assert np.allclose(kr_rhs(state, unit_disk), 0.0, atol=1e-15)


def test_single_vortex_orbits_with_image_velocity(unit_disk):
    state = PointVortexState([[0.5, 0.0]], [1.0])
    assert np.allclose(kr_rhs(state, unit_disk), [[0.0, 0.5 * orbit_speed(0.5)]])


def test_rk4_follows_the_circular_orbit(unit_disk):
    state = PointVortexState([[0.5, 0.0]], [1.0])
    dt = 0.01
    for _ in range(100):
        state = step(state, unit_disk, dt)
    angle = orbit_speed(0.5) * state.t
    assert state.t == pytest.approx(1.0)
    assert np.allclose(state.positions, [[0.5 * math.cos(angle), 0.5 * math.sin(angle)]], atol=1e-10)


def test_image_and_boundary_integral_dynamics_agree(unit_disk, bie_disk):
    state = PointVortexState([[0.3, 0.1], [-0.2, -0.2]], [1.0, -0.7])
    assert np.allclose(kr_rhs(state, unit_disk), kr_rhs(state, bie_disk), atol=1e-8)


def test_hamiltonian_of_a_single_vortex(unit_disk):
    r = 0.6
    state = PointVortexState([[0.0, r]], [2.0])
    assert hamiltonian(state, unit_disk) == pytest.approx(4.0 * math.log(1.0 - r * r) / (2.0 * TWO_PI))


def test_hamiltonian_of_a_symmetric_pair(unit_disk):
    state = PointVortexState([[0.3, 0.0], [-0.3, 0.0]], [1.0, 1.0])
    g = -math.log(0.6) / TWO_PI
    h_cross = -math.log(0.09 * 0.09 + 2 * 0.09 + 1.0) / (2.0 * TWO_PI)
    h_self = -math.log(0.09 * 0.09 - 2 * 0.09 + 1.0) / (2.0 * TWO_PI)
    expected = g - h_cross - h_self
    assert hamiltonian(state, unit_disk) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.0800, abs=1e-4)


def test_rk4_conserves_the_hamiltonian(unit_disk):
    state = PointVortexState([[0.4, 0.0], [-0.1, 0.3], [0.0, -0.5]], [1.0, 0.6, -0.8])
    H0 = hamiltonian(state, unit_disk)
    for _ in range(200):
        state = step(state, unit_disk, 0.005)
    assert abs(hamiltonian(state, unit_disk) - H0) < 1e-8 * max(1.0, abs(H0))


def test_hamiltonian_needs_a_simply_connected_domain(annulus):
    with pytest.raises(DomainError):
        hamiltonian(PointVortexState([[0.75, 0.0]], [1.0], (0.0,)), annulus)


def test_green_regular_part_is_symmetric(unit_disk):
    x, y = np.array([0.2, -0.1]), np.array([-0.4, 0.3])
    assert green_regular_part(unit_disk, x, y) == pytest.approx(green_regular_part(unit_disk, y, x))


def test_separation_monitor_names_the_violation(unit_disk):
    report = separation_monitor(PointVortexState([[0.0, 0.0], [0.05, 0.0]], [1.0, 1.0]), unit_disk, 0.2)
    assert report.threshold == pytest.approx(0.1)
    assert not report.pair_ok and report.boundary_ok
    assert report.violation == "C12-pair"
    near_wall = separation_monitor(PointVortexState([[0.95, 0.0]], [1.0]), unit_disk, 0.2)
    assert near_wall.min_pair is None
    assert near_wall.violation == "C12-boundary"
    assert SeparationReport(0.5, 0.5, 0.2).violation is None


def test_kr_rhs_raises_stop_signal_when_monitored(unit_disk):
    state = PointVortexState([[0.95, 0.0]], [1.0])
    with pytest.raises(SeparationViolation) as excinfo:
        kr_rhs(state, unit_disk, delta=0.2)
    assert excinfo.value.condition == "C12-boundary"
    with pytest.raises(PartialStepError) as step_error:
        step(state, unit_disk, 0.01, delta=0.2)
    assert step_error.value.last_good is state


def test_annulus_vortex_feels_its_hole_coefficient(annulus):
    state = PointVortexState([[0.75, 0.0]], [1.0], (0.3,))
    w = math.log(0.75) / math.log(0.5)
    assert vortex_hole_coefficients(state, annulus) == pytest.approx([w + 0.3], abs=1e-10)
    u = kr_rhs(state, annulus)
    assert u.shape == (1, 2)
    assert abs(u[0, 0]) < 1e-10


def test_suggest_dt():
    single = PointVortexState([[0.0, 0.0]], [1.0])
    assert suggest_dt(single, 0.1) == pytest.approx(1e-3)
    pair = PointVortexState([[0.1, 0.0], [-0.1, 0.0]], [1.0, -1.0])
    assert suggest_dt(pair, 0.1) == pytest.approx(4e-4)
    assert suggest_dt(single, 0.1, max_vorticity=1000.0) == pytest.approx(2e-4)


def test_state_validates_shapes():
    with pytest.raises(DomainError):
        PointVortexState([[0.0, 0.0], [0.1, 0.0]], [1.0])
    with pytest.raises(DomainError):
        PointVortexState(np.zeros((0, 2)), [])


def orbit_return_error(domain, steps, r=0.5, a=TWO_PI):
    period = TWO_PI / orbit_speed(r, a)
    state = PointVortexState([[r, 0.0]], [a])
    dt = period / steps
    for _ in range(steps):
        state = step(state, domain, dt)
    return float(np.hypot(*(state.positions[0] - [r, 0.0])))


def test_single_vortex_returns_after_one_period(unit_disk):
    assert TWO_PI / orbit_speed(0.5, TWO_PI) == pytest.approx(1.5 * math.pi)
    assert orbit_return_error(unit_disk, 2000) < 1e-6


def test_rk4_is_fourth_order(unit_disk):
    coarse, fine = orbit_return_error(unit_disk, 50), orbit_return_error(unit_disk, 100)
    assert 3.7 <= math.log2(coarse / fine) <= 4.3


def test_hamiltonian_sign_convention(unit_disk):
    state = PointVortexState([[0.5, 0.0]], [1.0])
    assert hamiltonian(state, unit_disk) == pytest.approx(-0.0228930, abs=1e-7)


def test_symmetric_pair_moves_antipodally(unit_disk):
    state = PointVortexState([[0.35, 0.0], [-0.35, 0.0]], [1.0, 1.0])
    rhs = kr_rhs(state, unit_disk)
    assert np.allclose(rhs[1], -rhs[0], atol=1e-15)
    assert abs(rhs[0, 0]) < 1e-15


def test_rhs_rotates_with_the_disk(unit_disk):
    Y = np.array([[0.3, 0.1], [-0.2, 0.25], [0.05, -0.4]])
    a = np.array([1.0, -0.5, 0.8])
    phi = 0.7
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    rotated = kr_rhs(PointVortexState(Y @ R.T, a), unit_disk)
    assert np.allclose(rotated, kr_rhs(PointVortexState(Y, a), unit_disk) @ R.T, atol=1e-10)


def test_reversed_strengths_retrace_the_trajectory(unit_disk):
    start = PointVortexState([[0.4, 0.0], [-0.1, 0.3], [0.0, -0.5]], [1.0, 0.6, -0.8])
    state = start
    for _ in range(20):
        state = step(state, unit_disk, 0.01)
    state = PointVortexState(state.positions, -start.strengths)
    for _ in range(20):
        state = step(state, unit_disk, 0.01)
    assert np.allclose(state.positions, start.positions, atol=1e-9)
