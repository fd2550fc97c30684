# app/cli.py
"""Command-line entry points: run, converge, validate, demo leapfrog, serve.

Every command exits with status 0 only when it finished without errors and all
of its pass/fail gates passed.
"""
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import click
from flask import current_app
from flask.cli import FlaskGroup

from app import create_app
from app.analytics.convergence_service import ConvergenceService
from app.analytics.validation_service import ValidationService
from app.exceptions import ConfigError, DomainError, VortexKitError
from app.scenario import Scenario
from app.services.database_service import record_report, record_run
from app.services.geometry import Domain
from app.services.runner import LeapfrogParams, demo_leapfrog, run
from app.utils.plotting import plot_rates, plot_trajectories, plot_w2
from app.utils.record_io import run_directory, write_run

logger = logging.getLogger(__name__)

LEAPFROG_DRIFT_LIMIT = 1e-6


def _float_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated list of numbers, got {value!r}")


def _out_root(out):
    return Path(out or current_app.config["OUTPUT_DIR"])


def _threads(threads):
    return int(threads or current_app.config["THREADS"])


def _write_json(payload, path):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _finish(passed: bool, summary: dict):
    click.echo(json.dumps(summary, indent=2, sort_keys=True))
    if not passed:
        raise click.exceptions.Exit(1)


@click.group(cls=FlaskGroup, create_app=create_app, add_default_commands=False)
def cli():
    """Concentrated vorticity against point vortices in bounded domains."""


@cli.command("run")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Output root (defaults to OUTPUT_DIR).")
@click.option("--frames-every", type=click.IntRange(min=1), help="Record a frame every k steps.")
@click.option("--threads", type=click.IntRange(min=1), help="Worker threads for velocity evaluation.")
def run_command(config, out, frames_every, threads):
    """Run the particle field and the point vortices of CONFIG side by side."""
    try:
        scenario = Scenario.from_file(config)
        record = run(scenario, frames_every=frames_every or scenario.numerics.frames_every
                     or current_app.config["FRAMES_EVERY"], threads=_threads(threads))
    except VortexKitError as e:
        raise click.ClickException(str(e))

    directory = write_run(record, run_directory(_out_root(out), record.name))
    plot_trajectories(record, directory / "trajectories.svg", scenario.domain)
    plot_w2(record, directory / "w2.svg")
    summary = ConvergenceService.summarize(record)
    passed = record.stopping_reason == "t_end" and summary["bound_violations"] == 0
    entry = record_run(record, directory, passed)
    summary.update(out_dir=str(directory), run_id=entry.id if entry else None, passed=passed)
    _finish(passed, summary)


@cli.command("converge")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--eps", "eps_list", callback=_float_list, help="Comma-separated eps values (>= 3).")
@click.option("--delta", "deltas", callback=_float_list, help="Comma-separated delta values to record.")
@click.option("--out", type=click.Path(file_okay=False))
@click.option("--frames-every", type=click.IntRange(min=1))
@click.option("--threads", type=click.IntRange(min=1), help="Parallel sub-runs.")
def converge_command(config, eps_list, deltas, out, frames_every, threads):
    """eps-sweep of CONFIG with rate fits against the configured slope windows."""
    try:
        scenario = Scenario.from_file(config)
        report = ConvergenceService.converge(scenario, eps_list, threads=_threads(threads),
                                             frames_every=frames_every, deltas=deltas)
    except VortexKitError as e:
        raise click.ClickException(str(e))

    directory = run_directory(_out_root(out), f"{scenario.name}-converge")
    directory.mkdir(parents=True, exist_ok=True)
    _write_json(report, directory / "convergence.json")
    if report["slopes"]:
        plot_rates(report, directory / "rates.svg")
    record_report("converge", scenario.name, scenario.config_hash, report["passed"], directory)
    _finish(report["passed"], {"out_dir": str(directory), "slopes": report["slopes"],
                               "T_uniform": report["T_uniform"], "passed": report["passed"]})


@cli.command("validate")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--n-quad", type=click.IntRange(min=3), help="Override the quadrature resolution.")
@click.option("--backend", type=click.Choice(["analytic-disk", "analytic-annulus", "boundary-integral"]))
@click.option("--out", type=click.Path(file_okay=False))
def validate_command(config, n_quad, backend, out):
    """Run the kernel and Laplace-solver oracle checks on the domain of CONFIG."""
    try:
        with open(config, "rb") as fh:
            block = tomllib.load(fh)["domain"]
        domain = Domain.from_config(block)
        if n_quad or backend:
            domain = domain.with_backend(backend or domain.backend, n_quad)
    except (OSError, KeyError, tomllib.TOMLDecodeError, DomainError, ConfigError) as e:
        raise click.ClickException(f"Cannot build the domain of {config}: {e}")

    report = ValidationService.validate(domain)
    directory = run_directory(_out_root(out), f"{Path(config).stem}-validate")
    directory.mkdir(parents=True, exist_ok=True)
    _write_json(report, directory / "validation.json")
    record_report("validate", Path(config).stem, "", report["passed"], directory)
    click.echo(json.dumps(report, indent=2, sort_keys=True))
    if not report["passed"]:
        raise click.exceptions.Exit(1)


@cli.group("demo")
def demo():
    """Qualitative demonstrations."""


@demo.command("leapfrog")
@click.option("--params", type=click.Path(exists=True, dir_okay=False),
              help="TOML file with a [leapfrog] table overriding the default parameter set.")
@click.option("--t-end", type=float)
@click.option("--out", type=click.Path(file_okay=False))
def leapfrog_command(params, t_end, out):
    """Two like-signed vortices near the wall of a disk."""
    try:
        parameters = LeapfrogParams.from_file(params) if params else LeapfrogParams()
        if t_end is not None:
            parameters = LeapfrogParams.from_dict(dict(parameters.__dict__, t_end=t_end))
        record = demo_leapfrog(parameters)
    except VortexKitError as e:
        raise click.ClickException(str(e))

    directory = write_run(record, run_directory(_out_root(out), record.name))
    domain = Domain.disk(parameters.center, parameters.radius, parameters.n_quad, parameters.backend)
    plot_trajectories(record, directory / "trajectories.svg", domain)
    exchanges = record.extras["radial_exchanges"]
    drift = record.extras.get("hamiltonian_drift", 0.0)
    passed = exchanges >= 1 and drift < LEAPFROG_DRIFT_LIMIT
    entry = record_run(record, directory, passed)
    _finish(passed, {"out_dir": str(directory), "run_id": entry.id if entry else None,
                     "stopping_reason": record.stopping_reason, "radial_exchanges": exchanges,
                     "hamiltonian_drift": drift, "passed": passed})


@cli.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=5000, type=int)
def serve_command(host, port):
    """Serve the read-only run registry browser."""
    current_app.run(host=host, port=port)
