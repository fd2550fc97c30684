# tests/test_runner.py
import math

import numpy as np
import pytest

from app.exceptions import ConfigError
from app.scenario import Scenario
from app.services import runner as runner_module
from app.services.point_vortex import PointVortexState
from app.services.runner import (
    STOPPING_REASONS,
    LeapfrogParams,
    demo_leapfrog,
    run,
    run_point_vortices,
)
from app.utils.record_io import write_run
from conftest import SCENARIO_DIR, scenario_dict


@pytest.fixture(scope="module")
def small_run():
    return run(Scenario.from_dict(scenario_dict()))


def test_run_reaches_t_end_with_scheduled_frames(small_run):
    assert small_run.stopping_reason == "t_end"
    assert small_run.stop_time == pytest.approx(0.005)
    assert small_run.n_steps == 20
    assert np.allclose(small_run.times, [0.0, 0.0025, 0.005])
    assert small_run.n_patches == 2


def test_initial_frame_starts_vortices_at_the_centers(small_run):
    first = small_run.frames[0]
    assert np.allclose(first.X, first.Y, atol=1e-14)
    # a uniform disc of radius eps sits at W2 distance eps/sqrt(2) from its center
    assert np.allclose(first.W2, 0.02 / math.sqrt(2.0), rtol=0.05)
    assert np.all(first.W1i <= first.W2 + 1e-15)
    assert first.W1 <= float(np.dot([1.0, 1.0], first.W1i)) + 1e-12
    assert first.c5.ok and first.c12.ok
    assert first.H is not None


def test_particles_track_the_vortices(small_run):
    last = small_run.frames[-1]
    assert np.max(np.hypot(*(last.X - last.Y).T)) < 1e-3
    assert np.max(last.W2) < 0.05


def test_runs_are_deterministic(small_run, tmp_path):
    again = run(Scenario.from_dict(scenario_dict()))
    first = write_run(small_run, tmp_path / "first") / "frames.csv"
    second = write_run(again, tmp_path / "second") / "frames.csv"
    assert first.read_bytes() == second.read_bytes()
    for a, b in zip(small_run.frames, again.frames):
        assert a.t == b.t
        assert np.array_equal(a.Y, b.Y)
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.W2, b.W2)
        assert a.W1 == b.W1


def test_frames_every_override():
    record = run(Scenario.from_dict(scenario_dict()), frames_every=20)
    assert np.allclose(record.times, [0.0, 0.005])
    assert record.frames_every == 20


def test_zero_strength_patch_stays_at_rest():
    record = run(Scenario.from_file(SCENARIO_DIR / "zero_strength.toml"))
    assert record.stopping_reason == "t_end"
    last = record.frames[-1]
    assert np.array_equal(last.Y, [[0.2, 0.1]])
    assert np.allclose(last.X, [[0.2, 0.1]], atol=1e-14)
    assert last.W1 == 0.0
    assert last.H == 0.0


def test_solver_failure_is_a_stopping_reason():
    data = scenario_dict(domain={"backend": "boundary-integral", "n_quad": 8,
                                 "curves": [{"role": "outer", "coefficients": [[1, 1.0, 0.0]]}]})
    record = run(Scenario.from_dict(data))
    assert record.stopping_reason == "solver-error"
    assert record.frames == []
    assert "needs >= 16" in record.detail


def test_point_vortex_pair_violation(unit_disk):
    vortices = PointVortexState([[0.1, 0.0], [-0.1, 0.0]], [1.0, -1.0])
    record = run_point_vortices(unit_disk, vortices, delta=0.6, t_end=1.0, dt=0.01)
    assert record.stopping_reason == "C12-pair"
    assert record.stop_time == pytest.approx(0.01)
    assert record.frames[-1].c12.violation == "C12-pair"


def test_violation_frame_is_attempted_once(unit_disk, monkeypatch):
    attempts = []

    def refuse(record, build, *args):
        attempts.append(args[0])
        return False

    monkeypatch.setattr(runner_module, "_append_if_computable", refuse)
    vortices = PointVortexState([[0.1, 0.0], [-0.1, 0.0]], [1.0, -1.0])
    record = run_point_vortices(unit_disk, vortices, delta=0.6, t_end=1.0, dt=0.01)
    assert record.stopping_reason == "C12-pair"
    assert attempts == [pytest.approx(0.01)]
    assert [f.t for f in record.frames] == [0.0]


def test_point_vortex_boundary_violation(unit_disk):
    vortices = PointVortexState([[0.8, 0.0]], [1.0])
    record = run_point_vortices(unit_disk, vortices, delta=0.5, t_end=1.0, dt=0.01)
    assert record.stopping_reason == "C12-boundary"
    assert record.stopping_reason in STOPPING_REASONS


def test_leapfrog_exchanges_radial_order():
    record = demo_leapfrog(LeapfrogParams(t_end=0.3, dt=5e-4))
    assert record.stopping_reason == "t_end"
    assert record.extras["radial_exchanges"] >= 1
    assert record.extras["hamiltonian_drift"] < 1e-6


def test_leapfrog_parameters_are_checked(tmp_path):
    with pytest.raises(ConfigError):
        demo_leapfrog(LeapfrogParams(strengths=(1.0, -1.0)))
    with pytest.raises(ConfigError):
        demo_leapfrog(LeapfrogParams(positions=((0.1, 0.0), (0.9, 0.0))))
    with pytest.raises(ConfigError):
        LeapfrogParams.from_dict({"spacing": 0.1})
    params = tmp_path / "leapfrog.toml"
    params.write_text("[leapfrog]\nt_end = 0.5\ndelta = 0.04\n", encoding="utf-8")
    loaded = LeapfrogParams.from_file(params)
    assert (loaded.t_end, loaded.delta) == (0.5, 0.04)
    assert loaded.positions == LeapfrogParams().positions


def test_annulus_run_records_hole_coefficients():
    data = scenario_dict(
        domain={"backend": "analytic-annulus", "inner_radius": 0.2, "outer_radius": 1.0},
        physics={"delta": 0.2, "eps": 0.01, "circulations": [0.25]},
        numerics={"t_end": 0.0002, "dt": 0.0001, "frames_every": 1},
        patches=[{"center": [0.6, 0.0], "strength": 1.0}],
    )
    record = run(Scenario.from_dict(data))
    assert record.stopping_reason == "t_end"
    first = record.frames[0]
    assert first.H is None
    assert first.hole_coefficients.shape == (1,)
    w = math.log(0.6) / math.log(0.2)
    assert first.hole_coefficients[0] == pytest.approx(w + 0.25, abs=1e-3)
