"""Inter-layer, intra-layer and inter-element constraints on ODD scenarios.

Every rule pairs a predicate with a repair. Repairs run in a fixed order:
placement rules on the static layers, then the weather threshold rules, then
the derived weather fields, and last the rules through which weather limits
the road network and the participants. Derived values are therefore always
recomputed after their drivers settle, which keeps :func:`repair` idempotent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Mapping, Sequence

from .roadnet import (
    StaticMapSpec,
    crosswalk_rects,
    drivable_rects,
    roadside_rects,
    signal_rects,
)

RULE_KINDS = ("inter_layer", "intra_layer", "inter_element")

PERCENT_FIELDS = (
    "cloud_cover",
    "precipitation_intensity",
    "precipitation_deposits",
    "wind_speed",
    "fog_density",
    "wetness",
)

_TOL = 1e-9


class ConstraintError(ValueError):
    """Raised for out-of-domain inputs and for placements no repair can satisfy."""


@dataclass(frozen=True)
class WeatherState:
    cloud_cover: float = 10.0
    precipitation_intensity: float = 0.0
    precipitation_deposits: float = 0.0
    wind_speed: float = 10.0
    fog_density: float = 0.0
    fog_distance: float = 100.0
    fog_falloff: float = 0.0
    wetness: float = 0.0
    friction: float = 0.005
    sun_altitude: float = 45.0
    # consistent with the default altitude under the radians sun model
    sun_azimuth: float = 125.0 / 4.0 * math.asin(65.0 / 70.0)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


WEATHER_FIELDS = tuple(f.name for f in fields(WeatherState))


@dataclass(frozen=True)
class Placement:
    """A located element: a traffic facility (layer 2) or a participant (layer 4)."""

    name: str
    kind: str
    x: float
    y: float
    speed: float | None = None


FACILITY_KINDS = ("traffic_light", "signpost", "street_light")
PARTICIPANT_KINDS = ("vehicle", "bicycle", "pedestrian")


@dataclass(frozen=True)
class ScenarioState:
    weather: WeatherState = field(default_factory=WeatherState)
    placements: tuple[Placement, ...] = ()
    map_spec: StaticMapSpec | None = field(default_factory=StaticMapSpec)
    road_type: str = "urban"

    def placement(self, name: str) -> Placement:
        for p in self.placements:
            if p.name == name:
                return p
        raise KeyError(name)


@dataclass(frozen=True)
class ConstraintThresholds:
    rain_cloud_trigger: float = 50.0
    wind_fog_trigger: float = 60.0
    wind_fog_max: float = 30.0
    illumination_trigger: float = 70.0
    illumination_max_altitude: float = 30.0
    deposits_slack: float = 10.0
    wetness_slack: float = 0.0
    heavy_rain: float = 70.0
    thick_fog: float = 70.0
    night_altitude: float = 0.0
    adverse_speed_cap: float = 11.1
    friction_model: str = "piecewise"
    sun_model: str = "radians"

    def __post_init__(self) -> None:
        if self.friction_model not in ("piecewise", "monotone"):
            raise ValueError(f"unknown friction_model {self.friction_model!r}")
        if self.sun_model not in ("radians", "normalized_arcsin"):
            raise ValueError(f"unknown sun_model {self.sun_model!r}")

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "ConstraintThresholds":
        if not data:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown constraint keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Violation:
    rule_id: str
    message: str
    offending_values: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConstraintRule:
    id: str
    kind: str
    description: str
    predicate: Callable[[ScenarioState], bool]
    repair: Callable[[ScenarioState], ScenarioState]
    # names whose values are reported when the predicate fails
    watched: Callable[[ScenarioState], dict] = lambda s: {}


# -- closed-form couplings ------------------------------------------------


def friction_from_wetness(wetness: float, model: str = "piecewise") -> float:
    """Road friction for a wetness percentage, clamped to [0, 1].

    ``piecewise`` follows the published piecewise rule as
    printed, which goes negative for wetness above 1 and jumps to 0.6 at 40;
    the clamp turns the negative stretch into 0. ``monotone`` is a
    decreasing alternative with the same 40 % breakpoint.
    """
    if not 0.0 <= wetness <= 100.0:
        raise ConstraintError(f"wetness {wetness} outside [0, 100]")
    if model == "piecewise":
        raw = (1.0 - wetness) / 200.0 if wetness < 40.0 else 0.6
    elif model == "monotone":
        raw = (100.0 - wetness) * 0.6 / 100.0 + (0.4 if wetness < 40.0 else 0.0)
    else:
        raise ValueError(f"unknown friction model {model!r}")
    return min(max(raw, 0.0), 1.0)


def fog_derivatives(fog_density: float) -> tuple[float, float]:
    """Return ``(fog_distance, fog_falloff)`` for a fog density percentage."""
    if not 0.0 <= fog_density <= 100.0:
        raise ConstraintError(f"fog density {fog_density} outside [0, 100]")
    return 100.0 - fog_density, 0.05 * fog_density


def azimuth_from_altitude(altitude: float, model: str = "radians") -> float:
    arg = (altitude + 20.0) / 70.0
    if not -1.0 <= arg <= 1.0:
        raise ConstraintError(
            f"sun altitude {altitude} outside [-90, 50]; arcsin argument {arg:.4f}"
        )
    angle = math.asin(arg)
    if model == "radians":
        return 125.0 / 4.0 * angle
    if model == "normalized_arcsin":
        # maps arcsin's range onto [-1, 1] so the result spans +-125/4
        return 125.0 / 4.0 * angle / (math.pi / 2)
    raise ValueError(f"unknown sun model {model!r}")


# -- rule construction ----------------------------------------------------


def _weather(state: ScenarioState, **changes) -> ScenarioState:
    return replace(state, weather=replace(state.weather, **changes))


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=_TOL)


_BOUNDS = {name: (0.0, 100.0) for name in PERCENT_FIELDS}
_BOUNDS["friction"] = (0.0, 1.0)
_BOUNDS["sun_altitude"] = (-90.0, 90.0)
_BOUNDS["fog_distance"] = (0.0, math.inf)
_BOUNDS["fog_falloff"] = (0.0, math.inf)


def _placement_rule(rule_id: str, description: str, kinds: Sequence[str], areas_of) -> ConstraintRule:
    def offenders(state: ScenarioState) -> list[Placement]:
        targets = [p for p in state.placements if p.kind in kinds]
        if not targets:
            return []
        areas = areas_of(state.map_spec) if state.map_spec is not None else []
        return [p for p in targets if not any(a.contains(p.x, p.y) for a in areas)]

    def predicate(state: ScenarioState) -> bool:
        return not offenders(state)

    def repair(state: ScenarioState) -> ScenarioState:
        bad = offenders(state)
        if not bad:
            return state
        areas = areas_of(state.map_spec) if state.map_spec is not None else []
        if not areas:
            raise ConstraintError(
                f"{rule_id}: cannot place {', '.join(p.name for p in bad)}; map offers no valid area"
            )
        moved = {}
        for p in bad:
            nearest = min(areas, key=lambda a: a.distance(p.x, p.y))
            x, y = nearest.project(p.x, p.y)
            moved[p.name] = replace(p, x=x, y=y)
        return replace(state, placements=tuple(moved.get(p.name, p) for p in state.placements))

    def watched(state: ScenarioState) -> dict:
        return {f"{p.name}.x": p.x for p in offenders(state)} | {
            f"{p.name}.y": p.y for p in offenders(state)
        }

    return ConstraintRule(rule_id, "inter_layer", description, predicate, repair, watched)


def _adverse(w: WeatherState, th: ConstraintThresholds) -> bool:
    return (
        w.sun_altitude < th.night_altitude
        or w.precipitation_intensity >= th.heavy_rain
        or w.fog_density >= th.thick_fog
    )


def builtin_rules(thresholds: ConstraintThresholds | None = None) -> list[ConstraintRule]:
    """All rules in repair order; rule ids sort in the same order."""
    th = thresholds or ConstraintThresholds()
    rules: list[ConstraintRule] = []

    def bounds_ok(s: ScenarioState) -> bool:
        w = s.weather
        return all(lo <= getattr(w, k) <= hi for k, (lo, hi) in _BOUNDS.items())

    def bounds_fix(s: ScenarioState) -> ScenarioState:
        w = s.weather
        return _weather(s, **{k: min(max(getattr(w, k), lo), hi) for k, (lo, hi) in _BOUNDS.items()})

    rules.append(
        ConstraintRule(
            "R00_weather_ranges",
            "intra_layer",
            "weather attributes stay inside their physical ranges",
            bounds_ok,
            bounds_fix,
            lambda s: {
                k: getattr(s.weather, k)
                for k, (lo, hi) in _BOUNDS.items()
                if not lo <= getattr(s.weather, k) <= hi
            },
        )
    )
    rules.append(
        _placement_rule(
            "R01_traffic_light_at_junction",
            "traffic lights are only initialized at intersections",
            ("traffic_light",),
            signal_rects,
        )
    )
    rules.append(
        _placement_rule(
            "R02_signpost_roadside",
            "signposts and street lights stand alongside roads, not on or away from them",
            ("signpost", "street_light"),
            roadside_rects,
        )
    )
    rules.append(
        _placement_rule(
            "R03_pedestrian_on_crosswalk",
            "pedestrians move on crosswalks",
            ("pedestrian",),
            crosswalk_rects,
        )
    )
    rules.append(
        _placement_rule(
            "R04_vehicle_on_road",
            "vehicles and bicycles drive on roads",
            ("vehicle", "bicycle"),
            drivable_rects,
        )
    )

    def rain_ok(s: ScenarioState) -> bool:
        w = s.weather
        return w.precipitation_intensity <= th.rain_cloud_trigger or w.cloud_cover >= w.precipitation_intensity

    rules.append(
        ConstraintRule(
            "R05_rain_requires_cloud",
            "intra_layer",
            "high rainfall requires at least as much cloud cover",
            rain_ok,
            lambda s: s if rain_ok(s) else _weather(s, cloud_cover=s.weather.precipitation_intensity),
            lambda s: {
                "precipitation_intensity": s.weather.precipitation_intensity,
                "cloud_cover": s.weather.cloud_cover,
            },
        )
    )

    def wind_ok(s: ScenarioState) -> bool:
        w = s.weather
        return w.wind_speed <= th.wind_fog_trigger or w.fog_density <= th.wind_fog_max

    rules.append(
        ConstraintRule(
            "R06_wind_limits_fog",
            "intra_layer",
            "strong wind keeps fog density low",
            wind_ok,
            lambda s: s if wind_ok(s) else _weather(s, fog_density=th.wind_fog_max),
            lambda s: {"wind_speed": s.weather.wind_speed, "fog_density": s.weather.fog_density},
        )
    )

    def light_ok(s: ScenarioState) -> bool:
        w = s.weather
        return (
            max(w.fog_density, w.cloud_cover) <= th.illumination_trigger
            or w.sun_altitude <= th.illumination_max_altitude
        )

    rules.append(
        ConstraintRule(
            "R07_fog_cloud_limit_illumination",
            "intra_layer",
            "dense fog or cloud cover limits illumination",
            light_ok,
            lambda s: s if light_ok(s) else _weather(s, sun_altitude=th.illumination_max_altitude),
            lambda s: {
                "fog_density": s.weather.fog_density,
                "cloud_cover": s.weather.cloud_cover,
                "sun_altitude": s.weather.sun_altitude,
            },
        )
    )

    def deposits_floor(w: WeatherState) -> float:
        return max(w.precipitation_intensity - th.deposits_slack, 0.0)

    rules.append(
        ConstraintRule(
            "R08_intensity_drives_deposits",
            "intra_layer",
            "precipitation deposits grow with precipitation intensity",
            lambda s: s.weather.precipitation_deposits >= deposits_floor(s.weather),
            lambda s: _weather(
                s, precipitation_deposits=max(s.weather.precipitation_deposits, deposits_floor(s.weather))
            ),
            lambda s: {
                "precipitation_intensity": s.weather.precipitation_intensity,
                "precipitation_deposits": s.weather.precipitation_deposits,
            },
        )
    )

    def wetness_floor(w: WeatherState) -> float:
        return max(w.precipitation_deposits - th.wetness_slack, 0.0)

    rules.append(
        ConstraintRule(
            "R09_deposits_drive_wetness",
            "intra_layer",
            "road wetness is at least the precipitation deposits",
            lambda s: s.weather.wetness >= wetness_floor(s.weather),
            lambda s: _weather(s, wetness=max(s.weather.wetness, wetness_floor(s.weather))),
            lambda s: {"precipitation_deposits": s.weather.precipitation_deposits, "wetness": s.weather.wetness},
        )
    )
    rules.append(
        ConstraintRule(
            "R10_wetness_friction",
            "inter_element",
            "friction follows wetness",
            lambda s: _close(s.weather.friction, friction_from_wetness(s.weather.wetness, th.friction_model)),
            lambda s: _weather(s, friction=friction_from_wetness(s.weather.wetness, th.friction_model)),
            lambda s: {"wetness": s.weather.wetness, "friction": s.weather.friction},
        )
    )

    def fog_ok(s: ScenarioState) -> bool:
        dist, fall = fog_derivatives(s.weather.fog_density)
        return _close(s.weather.fog_distance, dist) and _close(s.weather.fog_falloff, fall)

    def fog_fix(s: ScenarioState) -> ScenarioState:
        dist, fall = fog_derivatives(s.weather.fog_density)
        return _weather(s, fog_distance=dist, fog_falloff=fall)

    rules.append(
        ConstraintRule(
            "R11_fog_coupling",
            "inter_element",
            "fog distance and falloff follow fog density",
            fog_ok,
            fog_fix,
            lambda s: {
                "fog_density": s.weather.fog_density,
                "fog_distance": s.weather.fog_distance,
                "fog_falloff": s.weather.fog_falloff,
            },
        )
    )

    def sun_ok(s: ScenarioState) -> bool:
        w = s.weather
        if not -90.0 <= w.sun_altitude <= 50.0:
            return False
        return _close(w.sun_azimuth, azimuth_from_altitude(w.sun_altitude, th.sun_model))

    def sun_fix(s: ScenarioState) -> ScenarioState:
        alt = min(max(s.weather.sun_altitude, -90.0), 50.0)
        return _weather(s, sun_altitude=alt, sun_azimuth=azimuth_from_altitude(alt, th.sun_model))

    rules.append(
        ConstraintRule(
            "R12_sun_azimuth",
            "inter_element",
            "sun azimuth follows sun altitude",
            sun_ok,
            sun_fix,
            lambda s: {"sun_altitude": s.weather.sun_altitude, "sun_azimuth": s.weather.sun_azimuth},
        )
    )

    def highway_ok(s: ScenarioState) -> bool:
        w = s.weather
        severe = w.fog_density >= th.thick_fog or w.precipitation_intensity >= th.heavy_rain
        return not (severe and s.road_type == "highway")

    rules.append(
        ConstraintRule(
            "R13_weather_restricts_highway",
            "inter_layer",
            "heavy fog or rain closes highways",
            highway_ok,
            lambda s: s if highway_ok(s) else replace(s, road_type="urban"),
            lambda s: {"fog_density": s.weather.fog_density, "precipitation_intensity": s.weather.precipitation_intensity},
        )
    )

    def over_cap(s: ScenarioState) -> list[Placement]:
        if not _adverse(s.weather, th):
            return []
        return [
            p
            for p in s.placements
            if p.kind in PARTICIPANT_KINDS and p.speed is not None and p.speed > th.adverse_speed_cap
        ]

    def cap_fix(s: ScenarioState) -> ScenarioState:
        bad = {p.name for p in over_cap(s)}
        if not bad:
            return s
        return replace(
            s,
            placements=tuple(
                replace(p, speed=th.adverse_speed_cap) if p.name in bad else p for p in s.placements
            ),
        )

    rules.append(
        ConstraintRule(
            "R14_weather_speed_cap",
            "inter_layer",
            "night, heavy rain or thick fog cap participant speed",
            lambda s: not over_cap(s),
            cap_fix,
            lambda s: {f"{p.name}.speed": p.speed for p in over_cap(s)},
        )
    )
    return rules


def validate(
    state: ScenarioState,
    rules: Sequence[ConstraintRule] | None = None,
    thresholds: ConstraintThresholds | None = None,
) -> list[Violation]:
    rules = builtin_rules(thresholds) if rules is None else rules
    out = []
    for rule in sorted(rules, key=lambda r: r.id):
        try:
            ok = rule.predicate(state)
        except ConstraintError as exc:
            out.append(Violation(rule.id, str(exc), {}))
            continue
        if not ok:
            out.append(Violation(rule.id, rule.description, rule.watched(state)))
    return out


def repair(
    state: ScenarioState,
    rules: Sequence[ConstraintRule] | None = None,
    thresholds: ConstraintThresholds | None = None,
) -> ScenarioState:
    rules = builtin_rules(thresholds) if rules is None else rules
    for rule in rules:
        state = rule.repair(state)
    return state


def weather_from_mapping(values: Mapping[str, float], base: WeatherState | None = None) -> WeatherState:
    """Overlay the weather attributes found in ``values`` onto ``base``."""
    base = base or WeatherState()
    return replace(base, **{k: float(v) for k, v in values.items() if k in WEATHER_FIELDS})
