"""Run configuration: nested dataclasses with JSON round trip.

Precedence is CLI flag > config file > built-in default; the CLI echoes the
effective configuration into the run directory.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .consistency import RefineConfig
from .planner import PlannerConfig


@dataclass(frozen=True)
class CoverageConfig:
    """How the coverage field is built from a scene."""

    surface_spheres: int = 192
    obb_spheres: int = 64
    samples_per_sphere: int = 64
    sphere_radius: float | None = None  # None: 1.5x covering radius of the centers


@dataclass(frozen=True)
class DegradeConfig:
    """Noise sigmas and removal fraction for degradation-pair generation."""

    sigma_position: float | None = None  # None: 1% of the scene diagonal
    sigma_log_scale: float = 0.1
    sigma_rotation: float = 0.05
    sigma_opacity: float = 0.5
    sigma_color: float = 0.1
    remove_fraction: float = 0.3


@dataclass(frozen=True)
class RunConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    refine: RefineConfig = field(default_factory=RefineConfig)
    coverage: CoverageConfig = field(default_factory=CoverageConfig)
    degrade: DegradeConfig = field(default_factory=DegradeConfig)
    resolution: int = 64
    rng_seed: int = 0
    threads: int = 1
    deterministic: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        kwargs = {}
        for name, sub_cls in (("planner", PlannerConfig), ("refine", RefineConfig),
                              ("coverage", CoverageConfig), ("degrade", DegradeConfig)):
            if name in data:
                kwargs[name] = sub_cls(**data.pop(name))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs.update(data)
        return cls(**kwargs)

    def replacing(self, **updates) -> "RunConfig":
        """Copy with nested overrides given as 'planner.gain_threshold' keys."""
        cfg = self
        for key, value in updates.items():
            if value is None:
                continue
            if "." in key:
                section, leaf = key.split(".", 1)
                sub = dataclasses.replace(getattr(cfg, section), **{leaf: value})
                cfg = dataclasses.replace(cfg, **{section: sub})
            else:
                cfg = dataclasses.replace(cfg, **{key: value})
        return cfg


def load_run_config(path) -> RunConfig:
    return RunConfig.from_dict(json.loads(Path(path).read_text()))


def save_run_config(path, cfg: RunConfig) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
