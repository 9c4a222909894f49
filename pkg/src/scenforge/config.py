"""Run configuration: one JSON document with per-command sections."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .constraints import ConstraintThresholds
from .criticality import DEFAULT_WEIGHTS, MetricConfig, MetricWeights, Thresholds, default_weights
from .odd import SearchSpace, catalog_scenario, default_search_space, load_search_space
from .roadnet import StaticMapSpec
from .sim import SimConfig

OUT_ENV = "SCENFORGE_OUT"
KNOWN_KEYS = {
    "scenario", "search_space", "with_weather", "parameters", "constraints", "map", "sim",
    "metrics", "optimizer", "campaigns", "export", "output_dir", "seed",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str = "S1"
    search_space: Any = None
    with_weather: bool = False
    parameters: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)
    map: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    campaigns: list = field(default_factory=list)
    export: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int | None = None
    base_dir: Path = field(default=Path("."), repr=False)

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Path | None = None) -> "RunConfig":
        unknown = set(data) - KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in data.items()})
        cfg.base_dir = base_dir or Path(".")
        return cfg

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        p = Path(path)
        try:
            data = json.loads(p.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {p}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{p}: top level must be an object")
        return cls.from_dict(data, p.parent)

    def apply_overrides(self, seed: int | None = None, out: str | None = None, scenario: str | None = None) -> None:
        """Flags win over the environment, which wins over the file."""
        if os.environ.get(OUT_ENV):
            self.output_dir = os.environ[OUT_ENV]
        if out is not None:
            self.output_dir = out
        if seed is not None:
            self.seed = seed
        if scenario is not None:
            self.scenario = scenario

    def check(self) -> None:
        try:
            catalog_scenario(self.scenario)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None

    # -- typed views ------------------------------------------------------

    def space(self) -> SearchSpace:
        if self.search_space is None:
            return default_search_space(self.with_weather)
        source = self.search_space
        if isinstance(source, str):
            source = self.base_dir / source
            if not source.exists():
                raise ConfigError(f"search-space file not found: {source}")
        try:
            return load_search_space(source)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid search space: {exc}") from None

    def constraint_thresholds(self) -> ConstraintThresholds:
        try:
            return ConstraintThresholds.from_dict(self.constraints)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid constraints block: {exc}") from None

    def map_spec(self) -> StaticMapSpec:
        try:
            return StaticMapSpec(**self.map)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid map block: {exc}") from None

    def sim_config(self) -> SimConfig:
        try:
            return SimConfig.from_dict(self.sim)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid sim block: {exc}") from None

    def metric_config(self) -> MetricConfig:
        try:
            return MetricConfig(self.metrics.get("distance_mode", "box_gap"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def weights(self) -> MetricWeights:
        m = self.metrics
        try:
            if "weights" in m:
                directions = m.get("directions", DEFAULT_WEIGHTS.directions)
                return MetricWeights(dict(m["weights"]), dict(directions))
            return default_weights(m.get("fitness_sign", "signed"))
        except ValueError as exc:
            raise ConfigError(f"invalid metric weights: {exc}") from None

    def thresholds(self) -> Thresholds:
        try:
            return Thresholds.from_dict(self.metrics.get("thresholds"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid thresholds: {exc}") from None

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is required (config 'seed' or --seed)")
        return int(self.seed)
