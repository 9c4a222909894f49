"""Five-layer ODD parameter space and the logical crossroad scenarios.

Layers 1-2 (road network, traffic facilities) are static; layers 3-5
(temporary changes, participants, weather) are dynamic. Each parameter lives
on one of five search axes and the order of a :class:`SearchSpace` fixes the
layout of flat search vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

AXES = ("static", "temporary_change", "traffic_participant", "weather", "extension")

# layer each axis may carry; static covers both layer 1 and layer 2
_AXIS_LAYERS = {
    "static": (1, 2),
    "temporary_change": (3,),
    "traffic_participant": (4,),
    "weather": (5,),
    "extension": (1, 2, 3, 4, 5),
}

WAYPOINTS = tuple(f"P{i}" for i in range(1, 9))
CONFLICTS = ("C1", "C2", "C3", "C4")


class SearchSpaceError(ValueError):
    """Raised for malformed search spaces or vectors that do not fit them."""


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    axis: str
    layer: int
    lower: float
    upper: float
    unit: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise SearchSpaceError("parameter name must be non-empty")
        if self.axis not in AXES:
            raise SearchSpaceError(f"{self.name}: unknown axis {self.axis!r}")
        if self.layer not in _AXIS_LAYERS[self.axis]:
            raise SearchSpaceError(
                f"{self.name}: layer {self.layer} does not belong to axis {self.axis!r}"
            )
        if not self.lower < self.upper:
            raise SearchSpaceError(
                f"{self.name}: inverted bounds [{self.lower}, {self.upper}]"
            )

    @property
    def is_static(self) -> bool:
        return self.layer in (1, 2)


@dataclass(frozen=True)
class SearchSpace:
    specs: tuple[ParameterSpec, ...]

    def __post_init__(self) -> None:
        if not self.specs:
            raise SearchSpaceError("search space needs at least one parameter")
        seen = set()
        for spec in self.specs:
            if spec.name in seen:
                raise SearchSpaceError(f"duplicate parameter name {spec.name!r}")
            seen.add(spec.name)

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def dim(self) -> int:
        return len(self.specs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    @property
    def lower(self) -> np.ndarray:
        return np.array([s.lower for s in self.specs], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([s.upper for s in self.specs], dtype=float)

    def index(self, name: str) -> int:
        for i, spec in enumerate(self.specs):
            if spec.name == name:
                return i
        raise SearchSpaceError(f"unknown parameter {name!r}")

    def on_axis(self, axis: str) -> tuple[ParameterSpec, ...]:
        return tuple(s for s in self.specs if s.axis == axis)

    @property
    def static_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.specs) if s.is_static)

    @property
    def dynamic_indices(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.specs) if not s.is_static)

    def to_json(self) -> list[dict]:
        return [
            {
                "name": s.name,
                "axis": s.axis,
                "layer": s.layer,
                "lower": s.lower,
                "upper": s.upper,
                "unit": s.unit,
            }
            for s in self.specs
        ]


@dataclass(frozen=True)
class ScenarioVector:
    """Values laid out in the order of ``space``."""

    space: SearchSpace
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != self.space.dim:
            raise SearchSpaceError(
                f"vector has {len(self.values)} entries, space has {self.space.dim}"
            )
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def static_part(self) -> tuple[int, ...]:
        return self.space.static_indices

    @property
    def dynamic_part(self) -> tuple[int, ...]:
        return self.space.dynamic_indices

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def named(self) -> dict[str, float]:
        return decode(self)

    def in_bounds(self) -> bool:
        return all(s.lower <= v <= s.upper for s, v in zip(self.space.specs, self.values))


@dataclass(frozen=True)
class LogicalScenario:
    id: str
    ego_start: str
    ego_end: str
    bv_start: str
    bv_end: str
    ego_speed: float
    bv_speed: float
    conflict: str
    # target speed the ego actually drives unless the search vector sets ego_speed
    ego_speed_override: float | None = None

    def __post_init__(self) -> None:
        for label in (self.ego_start, self.ego_end, self.bv_start, self.bv_end):
            if label not in WAYPOINTS:
                raise ValueError(f"{self.id}: unknown waypoint {label!r}")
        if self.conflict not in CONFLICTS:
            raise ValueError(f"{self.id}: unknown conflict point {self.conflict!r}")
        if self.ego_speed <= 0 or self.bv_speed <= 0:
            raise ValueError(f"{self.id}: speeds must be positive")

    @property
    def ego_target_speed(self) -> float:
        if self.ego_speed_override is not None:
            return self.ego_speed_override
        return self.ego_speed


_CATALOG = {
    "S1": LogicalScenario("S1", "P5", "P2", "P3", "P8", 6.9, 1.8, "C1"),
    "S2": LogicalScenario("S2", "P5", "P2", "P1", "P4", 6.9, 1.8, "C2"),
    "S3": LogicalScenario("S3", "P1", "P6", "P7", "P2", 6.9, 5.5, "C3"),
    "S4": LogicalScenario("S4", "P5", "P8", "P3", "P8", 6.9, 1.8, "C4", ego_speed_override=2.0),
}


def define_search_space(specs: Iterable[ParameterSpec]) -> SearchSpace:
    return SearchSpace(tuple(specs))


def encode(space: SearchSpace, named: Mapping[str, float]) -> ScenarioVector:
    missing = [n for n in space.names if n not in named]
    unknown = [n for n in named if n not in space.names]
    if missing or unknown:
        raise SearchSpaceError(f"missing parameters {missing}, unknown parameters {unknown}")
    return ScenarioVector(space, tuple(float(named[n]) for n in space.names))


def decode(vector: ScenarioVector) -> dict[str, float]:
    return dict(zip(vector.space.names, vector.values))


def clamp_to_bounds(space: SearchSpace, vector: ScenarioVector | Sequence[float]) -> ScenarioVector:
    values = vector.values if isinstance(vector, ScenarioVector) else tuple(vector)
    if len(values) != space.dim:
        raise SearchSpaceError(
            f"dimension mismatch: vector {len(values)} vs space {space.dim}"
        )
    clipped = np.clip(np.asarray(values, dtype=float), space.lower, space.upper)
    return ScenarioVector(space, tuple(clipped.tolist()))


def catalog_scenario(scenario_id: str) -> LogicalScenario:
    try:
        return _CATALOG[scenario_id]
    except KeyError:
        raise KeyError(f"unknown logical scenario {scenario_id!r}; expected one of {sorted(_CATALOG)}") from None


def catalog_ids() -> tuple[str, ...]:
    return tuple(sorted(_CATALOG))


DEFAULT_DYNAMIC_SPECS = (
    ParameterSpec("bv_speed", "traffic_participant", 4, 0.5, 15.0, "m/s"),
    ParameterSpec("bv_spawn_delay", "temporary_change", 3, 0.0, 10.0, "s"),
    ParameterSpec("ego_speed", "traffic_participant", 4, 0.5, 15.0, "m/s"),
    ParameterSpec("ego_spawn_offset", "traffic_participant", 4, 0.0, 20.0, "m"),
)

WEATHER_SPECS = (
    ParameterSpec("cloud_cover", "weather", 5, 0.0, 100.0, "%"),
    ParameterSpec("precipitation_intensity", "weather", 5, 0.0, 100.0, "%"),
    ParameterSpec("precipitation_deposits", "weather", 5, 0.0, 100.0, "%"),
    ParameterSpec("wind_speed", "weather", 5, 0.0, 100.0, "%"),
    ParameterSpec("fog_density", "weather", 5, 0.0, 100.0, "%"),
    ParameterSpec("wetness", "weather", 5, 0.0, 100.0, "%"),
    ParameterSpec("sun_altitude", "weather", 5, -90.0, 50.0, "deg"),
)


def default_search_space(with_weather: bool = False) -> SearchSpace:
    specs = list(DEFAULT_DYNAMIC_SPECS)
    if with_weather:
        specs.extend(WEATHER_SPECS)
    return define_search_space(specs)


def load_search_space(source: str | Path | list) -> SearchSpace:
    """Build a space from a JSON array of ``{name, axis, layer, lower, upper, unit}``.

    ``source`` may be a path to such a document or the already-parsed list.
    """
    if isinstance(source, (str, Path)):
        entries = json.loads(Path(source).read_text())
    else:
        entries = source
    if not isinstance(entries, list):
        raise SearchSpaceError("search space document must be a JSON array")
    specs = []
    for entry in entries:
        try:
            specs.append(
                ParameterSpec(
                    name=entry["name"],
                    axis=entry["axis"],
                    layer=int(entry["layer"]),
                    lower=float(entry["lower"]),
                    upper=float(entry["upper"]),
                    unit=entry.get("unit", ""),
                )
            )
        except KeyError as exc:
            raise SearchSpaceError(f"search space entry missing field {exc}") from None
    return define_search_space(specs)
