# app/scenario.py
"""Versioned TOML scenario files.

    schema_version = 1
    name = "two-patch-disk"

    [domain]            backend, n_quad, center, radius | inner_radius/outer_radius | [[domain.curves]]
    [physics]           delta, eps, p, circulations, max_eps_over_delta
    [numerics]          h_ratio | h, blob_ratio | blob, dt ("auto" or a number), t_end, frames_every
    [[patches]]         center, strength, profile, beta, lambda
    [converge]          eps, delta, t_min, uniform_T_tolerance, far_field_ratio, lp_factor, [converge.windows]
"""
import copy
import hashlib
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from app.exceptions import ConfigError, DomainError
from app.services.euler_sim import PROFILES, PatchSpec
from app.services.geometry import Domain, boundary_distance, contains

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RECOMMENDED_EPS_OVER_DELTA = 1.0 / 20.0
DEFAULT_WINDOWS = {"W2": (0.7, 1.3), "X": (0.7, 1.3), "V": (0.7, 1.3), "W1": (0.7, 1.3)}


@dataclass(frozen=True)
class PatchConfig:
    center: Tuple[float, float]
    strength: float
    profile: str = "uniform-disc"
    beta: float = 0.5
    lam: Optional[float] = None


@dataclass(frozen=True)
class Numerics:
    h_ratio: float = 0.1
    blob_ratio: float = 2.0
    dt: Optional[float] = None
    t_end: float = 0.5
    frames_every: Optional[int] = None


@dataclass(frozen=True)
class ConvergeGates:
    eps: Tuple[float, ...] = ()
    deltas: Tuple[float, ...] = ()
    t_min: Optional[float] = None
    uniform_T_tolerance: float = 0.1
    far_field_ratio: float = 2.0
    lp_factor: float = 2.0
    windows: Dict[str, Tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_WINDOWS))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    domain_block: dict
    patches: Tuple[PatchConfig, ...]
    delta: float
    eps: float
    p: float = 3.0
    circulations: Tuple[float, ...] = ()
    max_eps_over_delta: float = RECOMMENDED_EPS_OVER_DELTA
    numerics: Numerics = field(default_factory=Numerics)
    converge: ConvergeGates = field(default_factory=ConvergeGates)
    schema_version: int = SCHEMA_VERSION

    # --- loading ------------------------------------------------------------
    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            with path.open("rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as e:
            raise ConfigError(f"Scenario file not found: {path}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Scenario file {path} is not valid TOML: {e}") from e
        scenario = cls.from_dict(data, default_name=path.stem)
        logger.info(f"Loaded scenario '{scenario.name}' from {path}.")
        return scenario

    @classmethod
    def from_dict(cls, data: dict, default_name: str = "scenario"):
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"Unsupported schema_version {version!r}, expected {SCHEMA_VERSION}.")
        try:
            physics = data["physics"]
            numerics = data.get("numerics", {})
            dt = numerics.get("dt", "auto")
            h_ratio = _h_ratio(numerics, float(physics["eps"]))
            scenario = cls(
                name=str(data.get("name", default_name)),
                domain_block=copy.deepcopy(data["domain"]),
                patches=tuple(
                    PatchConfig(
                        center=(float(p["center"][0]), float(p["center"][1])),
                        strength=float(p["strength"]),
                        profile=str(p.get("profile", "uniform-disc")),
                        beta=float(p.get("beta", 0.5)),
                        lam=None if p.get("lambda") is None else float(p["lambda"]),
                    )
                    for p in data["patches"]
                ),
                delta=float(physics["delta"]),
                eps=float(physics["eps"]),
                p=float(physics.get("p", 3.0)),
                circulations=tuple(float(g) for g in physics.get("circulations", ())),
                max_eps_over_delta=float(physics.get("max_eps_over_delta", RECOMMENDED_EPS_OVER_DELTA)),
                numerics=Numerics(
                    h_ratio=h_ratio,
                    blob_ratio=_blob_ratio(numerics, h_ratio * float(physics["eps"])),
                    dt=None if dt == "auto" else float(dt),
                    t_end=float(numerics.get("t_end", 0.5)),
                    frames_every=None if numerics.get("frames_every") is None else int(numerics["frames_every"]),
                ),
                converge=_gates(data.get("converge", {})),
            )
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ConfigError(f"Malformed scenario '{data.get('name', default_name)}': {e!r}") from e
        scenario.validate()
        return scenario

    # --- derived ------------------------------------------------------------
    @property
    def h(self) -> float:
        return self.numerics.h_ratio * self.eps

    @property
    def blob_size(self) -> float:
        return self.numerics.blob_ratio * self.h

    @cached_property
    def domain(self) -> Domain:
        try:
            return Domain.from_config(self.domain_block)
        except (DomainError, KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Invalid domain block in scenario '{self.name}': {e}") from e

    def patch_specs(self):
        return [
            PatchSpec(center=pc.center, strength=pc.strength, eps=self.eps, h=self.h, profile=pc.profile,
                      beta=pc.beta, p=self.p, lam=pc.lam, delta=self.delta)
            for pc in self.patches
        ]

    def with_eps(self, eps: float):
        """Same scenario at another concentration scale; h and the blob size scale with eps."""
        scenario = replace(self, eps=float(eps), name=f"{self.name}@eps={eps:g}")
        scenario.validate()
        return scenario

    def with_delta(self, delta: float):
        scenario = replace(self, delta=float(delta), name=f"{self.name}@delta={delta:g}")
        scenario.validate()
        return scenario

    def with_numerics(self, **changes):
        return replace(self, numerics=replace(self.numerics, **changes))

    # --- validation ---------------------------------------------------------
    def validate(self):
        if self.delta <= 0.0 or self.eps <= 0.0:
            raise ConfigError(f"delta and eps must be positive (delta={self.delta}, eps={self.eps}).")
        if self.p <= 2.0:
            raise ConfigError(f"The integrability exponent p must exceed 2, got {self.p}.")
        if not self.patches:
            raise ConfigError("A scenario needs at least one patch.")
        if self.numerics.t_end <= 0.0 or (self.numerics.frames_every is not None and self.numerics.frames_every < 1):
            raise ConfigError("t_end must be positive and frames_every at least 1.")
        if self.numerics.dt is not None and self.numerics.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.numerics.dt}.")
        if self.eps > self.max_eps_over_delta * self.delta + 1e-15:
            raise ConfigError(
                f"eps={self.eps} exceeds {self.max_eps_over_delta:g}*delta={self.max_eps_over_delta * self.delta:g}."
            )
        if self.eps > RECOMMENDED_EPS_OVER_DELTA * self.delta:
            logger.warning(f"Scenario '{self.name}': eps/delta={self.eps / self.delta:.3g} is above 1/20.")
        for pc in self.patches:
            if pc.profile not in PROFILES:
                raise ConfigError(f"Unknown patch profile '{pc.profile}'.")
        domain = self.domain
        if len(self.circulations) != domain.n_holes:
            raise ConfigError(f"Expected {domain.n_holes} circulations, got {len(self.circulations)}.")
        self._check_clearances(domain)

    def _check_clearances(self, domain: Domain):
        centers = np.array([pc.center for pc in self.patches])
        if not np.all(contains(domain, centers)):
            raise ConfigError(f"Scenario '{self.name}' places a patch center outside the domain.")
        gaps = np.atleast_1d(boundary_distance(domain, centers)) - self.eps
        if np.min(gaps) < self.delta - 1e-12:
            raise ConfigError(f"Patch support is {np.min(gaps):.4g} from the boundary, less than delta={self.delta}.")
        for a in range(len(centers)):
            for b in range(a + 1, len(centers)):
                gap = float(np.hypot(*(centers[a] - centers[b]))) - 2.0 * self.eps
                if gap < self.delta - 1e-12:
                    raise ConfigError(f"Patches {a} and {b} are {gap:.4g} apart, less than delta={self.delta}.")

    # --- identity -----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "domain": self.domain_block,
            "physics": {
                "delta": self.delta,
                "eps": self.eps,
                "p": self.p,
                "circulations": list(self.circulations),
                "max_eps_over_delta": self.max_eps_over_delta,
            },
            "numerics": {
                "h_ratio": self.numerics.h_ratio,
                "blob_ratio": self.numerics.blob_ratio,
                "dt": "auto" if self.numerics.dt is None else self.numerics.dt,
                "t_end": self.numerics.t_end,
                "frames_every": self.numerics.frames_every,
            },
            "patches": [
                {"center": list(pc.center), "strength": pc.strength, "profile": pc.profile,
                 "beta": pc.beta, "lambda": pc.lam}
                for pc in self.patches
            ],
        }

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _h_ratio(block: dict, eps: float) -> float:
    """Numerics give h as a ratio of eps or as an absolute spacing."""
    if "h_ratio" in block:
        return float(block["h_ratio"])
    if "h" in block:
        return float(block["h"]) / eps
    return 0.1


def _blob_ratio(block: dict, h: float) -> float:
    if "blob_ratio" in block:
        return float(block["blob_ratio"])
    if "blob" in block:
        return float(block["blob"]) / h
    return 2.0


def _gates(block: dict) -> ConvergeGates:
    windows = dict(DEFAULT_WINDOWS)
    for key, window in block.get("windows", {}).items():
        lo, hi = window
        windows[key] = (float(lo), float(hi))
    return ConvergeGates(
        eps=tuple(float(e) for e in block.get("eps", ())),
        deltas=tuple(float(d) for d in block.get("delta", ())),
        t_min=None if block.get("t_min") is None else float(block["t_min"]),
        uniform_T_tolerance=float(block.get("uniform_T_tolerance", 0.1)),
        far_field_ratio=float(block.get("far_field_ratio", 2.0)),
        lp_factor=float(block.get("lp_factor", 2.0)),
        windows=windows,
    )
