# tests/test_cli.py
import json
from pathlib import Path

import pytest

from app.cli import cli
from app.models import RunEntry
from conftest import SCENARIO_DIR

SMALL_RUN = """
schema_version = 1
name = "cli-pair"

[domain]
backend = "analytic-disk"
radius = 1.0
n_quad = 128

[physics]
delta = 0.4
eps = 0.02

[numerics]
h_ratio = 0.125
dt = 0.00025
t_end = 0.005

[[patches]]
center = [0.3, 0.0]
strength = 1.0

[[patches]]
center = [-0.3, 0.0]
strength = 1.0
"""


def only_subdir(root: Path) -> Path:
    (directory,) = [p for p in root.iterdir() if p.is_dir()]
    return directory


def test_run_writes_artifacts_and_registers(app, cli_runner, client, tmp_path):
    config = tmp_path / "pair.toml"
    config.write_text(SMALL_RUN, encoding="utf-8")
    out = tmp_path / "out"

    result = cli_runner.invoke(cli, ["run", str(config), "--out", str(out), "--frames-every", "10"])

    assert result.exit_code == 0, result.output
    directory = only_subdir(out)
    assert {p.name for p in directory.iterdir()} >= {"frames.csv", "manifest.json", "trajectories.svg", "w2.svg"}
    with app.app_context():
        entry = RunEntry.query.one()
        assert entry.name == "cli-pair"
        assert entry.stopping_reason == "t_end"
        assert entry.passed
        run_id = entry.id

    listing = client.get("/runs").get_json()
    assert [r["name"] for r in listing["runs"]] == ["cli-pair"]
    detail = client.get(f"/runs/{run_id}").get_json()
    assert detail["manifest"]["n_frames"] == 3
    frames = client.get(f"/runs/{run_id}/frames").get_json()
    assert [f["t"] for f in frames["frames"]] == pytest.approx([0.0, 0.0025, 0.005])


def test_run_uses_configured_output_dir(app, cli_runner, tmp_path):
    config = tmp_path / "pair.toml"
    config.write_text(SMALL_RUN, encoding="utf-8")
    result = cli_runner.invoke(cli, ["run", str(config)])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["out_dir"].startswith(app.config["OUTPUT_DIR"])


def test_bad_scenario_exits_with_error(cli_runner, tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text(SMALL_RUN.replace("schema_version = 1", "schema_version = 2"), encoding="utf-8")
    result = cli_runner.invoke(cli, ["run", str(config)])
    assert result.exit_code == 1
    assert "Unsupported schema_version" in result.output


def test_missing_config_is_a_usage_error(cli_runner, tmp_path):
    result = cli_runner.invoke(cli, ["run", str(tmp_path / "missing.toml")])
    assert result.exit_code == 2


def test_validate_passes_on_the_analytic_disk(cli_runner, tmp_path):
    result = cli_runner.invoke(cli, ["validate", str(SCENARIO_DIR / "two_patch_disk.toml"), "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = json.loads((only_subdir(tmp_path) / "validation.json").read_text())
    assert report["passed"]


def test_validate_flags_coarse_boundary_integral(cli_runner, tmp_path):
    result = cli_runner.invoke(cli, ["validate", str(SCENARIO_DIR / "two_patch_disk.toml"), "--out", str(tmp_path),
                                     "--backend", "boundary-integral", "--n-quad", "16"])
    assert result.exit_code == 1
    assert json.loads(result.output)["passed"] is False


def test_converge_needs_three_eps(cli_runner, tmp_path):
    result = cli_runner.invoke(cli, ["converge", str(SCENARIO_DIR / "two_patch_disk.toml"),
                                     "--eps", "0.05,0.025", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "at least 3 eps values" in result.output


def test_converge_rejects_malformed_lists(cli_runner):
    result = cli_runner.invoke(cli, ["converge", str(SCENARIO_DIR / "two_patch_disk.toml"), "--eps", "a,b,c"])
    assert result.exit_code == 2


def test_leapfrog_demo(app, cli_runner, tmp_path):
    params = tmp_path / "leapfrog.toml"
    params.write_text("[leapfrog]\nt_end = 0.3\ndt = 0.0005\n", encoding="utf-8")
    result = cli_runner.invoke(cli, ["demo", "leapfrog", "--params", str(params), "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert summary["radial_exchanges"] >= 1
    assert summary["passed"]
    assert (Path(summary["out_dir"]) / "trajectories.svg").exists()
