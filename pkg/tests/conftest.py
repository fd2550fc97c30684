# tests/conftest.py
from pathlib import Path

import pytest

from app import create_app
from app.config import TestingConfig
from app.models import db
from app.services.geometry import Domain

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


def scenario_dict(**overrides):
    """Small two-patch scenario in the unit disk, cheap enough for end-to-end tests."""
    data = {
        "schema_version": 1,
        "name": "small-pair",
        "domain": {"backend": "analytic-disk", "radius": 1.0, "n_quad": 128},
        "physics": {"delta": 0.4, "eps": 0.02},
        "numerics": {"h_ratio": 0.125, "blob_ratio": 2.0, "dt": 0.00025, "t_end": 0.005, "frames_every": 10},
        "patches": [
            {"center": [0.3, 0.0], "strength": 1.0},
            {"center": [-0.3, 0.0], "strength": 1.0},
        ],
    }
    for section, values in overrides.items():
        if isinstance(values, dict) and isinstance(data.get(section), dict):
            data[section] = dict(data[section], **values)
        else:
            data[section] = values
    return data


@pytest.fixture
def app(tmp_path):
    class _Config(TestingConfig):
        OUTPUT_DIR = str(tmp_path / "runs")

    app = create_app(_Config)
    yield app
    with app.app_context():
        db.session.remove()
        db.drop_all()


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def cli_runner(app):
    return app.test_cli_runner()


@pytest.fixture
def unit_disk():
    return Domain.unit_disk()


@pytest.fixture
def annulus():
    return Domain.annulus(0.5, 1.0)


@pytest.fixture
def bie_disk():
    return Domain.unit_disk(n_quad=256, backend="boundary-integral")


@pytest.fixture
def ellipse():
    """x^2/1.5^2 + y^2 = 1 for the boundary-integral backend."""
    return Domain.from_config({
        "backend": "boundary-integral",
        "n_quad": 256,
        "curves": [{"role": "outer", "coefficients": [[1, 1.25, 0.0], [-1, 0.25, 0.0]]}],
    })
