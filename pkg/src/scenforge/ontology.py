"""Lightweight ontology: classes, object/data properties, individuals and triples.

Reasoning is limited to what scenario generation needs: domain/range and
referential-integrity checks. A five-layer template is built by
:func:`build_template` and turned into a concrete scenario graph by
:func:`instantiate`.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .constraints import (
    ConstraintError,
    ConstraintThresholds,
    Placement,
    ScenarioState,
    Violation,
    repair,
    validate,
    weather_from_mapping,
)
from .odd import LogicalScenario, ScenarioVector, decode
from .roadnet import StaticMapSpec
from .sim import CrossroadMap, build_crossroad, plan_path

PRIMITIVES = ("float", "int", "string", "bool")
RESERVED = ("Class", "ObjectProperty", "DataProperty")

# type of membership predicate in the triple format
MEMBER = "a"


class OntologyError(ValueError):
    pass


@dataclass(frozen=True)
class ClassDef:
    name: str
    parent: str | None = None


@dataclass(frozen=True)
class PropertyDef:
    name: str
    kind: str
    domain: str
    range: str

    def __post_init__(self) -> None:
        if self.kind not in ("object_property", "data_property"):
            raise OntologyError(f"{self.name}: unknown property kind {self.kind!r}")


def _literal_token(value) -> str:
    if isinstance(value, bool):
        text = "true" if value else "false"
    elif isinstance(value, float):
        text = repr(value)
    else:
        text = str(value)
    return json.dumps(text)


def _value_key(item):
    prop, value = item
    return (prop, _literal_token(value))


@dataclass(frozen=True)
class Individual:
    id: str
    cls: str
    property_values: tuple = ()

    def __post_init__(self) -> None:
        values = self.property_values
        if isinstance(values, Mapping):
            pairs = []
            for prop, v in values.items():
                if isinstance(v, (list, tuple)):
                    pairs.extend((prop, x) for x in v)
                else:
                    pairs.append((prop, v))
            values = pairs
        object.__setattr__(self, "property_values", tuple(sorted(values, key=_value_key)))

    def values(self, prop: str) -> list:
        return [v for p, v in self.property_values if p == prop]

    def value(self, prop: str):
        vals = self.values(prop)
        if len(vals) != 1:
            raise KeyError(f"{self.id}.{prop} has {len(vals)} values")
        return vals[0]


@dataclass
class ScenarioGraph:
    classes: dict = field(default_factory=dict)
    properties: dict = field(default_factory=dict)
    individuals: dict = field(default_factory=dict)

    def add_class(self, name: str, parent: str | None = None) -> None:
        if name in RESERVED:
            raise OntologyError(f"{name!r} is a reserved name")
        if name in self.classes:
            raise OntologyError(f"class {name!r} already declared")
        self.classes[name] = ClassDef(name, parent)

    def add_property(self, name: str, kind: str, domain: str, range_: str) -> None:
        if name in self.properties:
            raise OntologyError(f"property {name!r} already declared")
        self.properties[name] = PropertyDef(name, kind, domain, range_)

    def add(self, ind_id: str, cls: str, **props) -> Individual:
        if ind_id in self.individuals:
            raise OntologyError(f"individual {ind_id!r} already exists")
        ind = Individual(ind_id, cls, props)
        self.individuals[ind_id] = ind
        return ind

    def copy(self) -> "ScenarioGraph":
        return copy.deepcopy(self)

    def ancestors(self, cls: str) -> list[str]:
        out = []
        seen = set()
        while cls is not None and cls in self.classes and cls not in seen:
            seen.add(cls)
            out.append(cls)
            cls = self.classes[cls].parent
        return out

    def is_a(self, cls: str, target: str) -> bool:
        return target in self.ancestors(cls)

    def of_class(self, cls: str) -> list[Individual]:
        return [i for _, i in sorted(self.individuals.items()) if self.is_a(i.cls, cls)]


def build_template() -> ScenarioGraph:
    g = ScenarioGraph()
    hierarchy = [
        ("PositionedEntity", None),
        # layer 1 and 2
        ("Static", "PositionedEntity"),
        ("AreaEntities", "Static"),
        ("Junction", "AreaEntities"),
        ("Road", "AreaEntities"),
        ("Crosswalk", "AreaEntities"),
        ("PointEntities", "Static"),
        ("TrafficLight", "PointEntities"),
        ("Signage", "PointEntities"),
        ("ConstructionCard", "PointEntities"),
        ("RoadCone", "PointEntities"),
        # layer 3
        ("Event", None),
        ("TrafficAccident", "Event"),
        ("TrafficJam", "Event"),
        ("EnvironmentChangeEvent", "Event"),
        ("ManeuverEvent", "Event"),
        ("Condition", None),
        ("SimulationTimeCondition", "Condition"),
        ("RelativeDistanceCondition", "Condition"),
        # layer 4
        ("TrafficParticipant", "PositionedEntity"),
        ("Pedestrian", "TrafficParticipant"),
        ("Vehicle", "TrafficParticipant"),
        ("Bicycle", "TrafficParticipant"),
        ("Misc", "TrafficParticipant"),
        ("WorldPosition", "PositionedEntity"),
        ("Action", None),
        ("SpeedAction", "Action"),
        ("LaneChangeAction", "Action"),
        ("TeleportAction", "Action"),
        ("EnvironmentAction", "Action"),
        # layer 5
        ("Weather", None),
        ("Fog", "Weather"),
        ("Rain", "Weather"),
        ("Sun", "Weather"),
        ("RoadCondition", "Weather"),
        ("ExtensionElement", None),
    ]
    for name, parent in hierarchy:
        g.add_class(name, parent)

    obj = "object_property"
    for name, dom, rng in [
        ("hasSun", "Weather", "Sun"),
        ("hasFog", "Weather", "Fog"),
        ("hasRain", "Weather", "Rain"),
        ("hasRoadCondition", "Weather", "RoadCondition"),
        ("hasInitAction", "TrafficParticipant", "Action"),
        ("hasPosition", "TeleportAction", "WorldPosition"),
        ("hasActor", "Event", "TrafficParticipant"),
        ("hasEventAction", "Event", "Action"),
        ("hasTrigger", "Event", "Condition"),
        ("appliesWeather", "EnvironmentAction", "Weather"),
        ("hasTriggeringEntity", "Condition", "TrafficParticipant"),
        ("hasReferenceEntity", "RelativeDistanceCondition", "TrafficParticipant"),
        ("hasTrafficLight", "Junction", "TrafficLight"),
    ]:
        g.add_property(name, obj, dom, rng)

    data = "data_property"
    for axis in ("x", "y", "z", "pitch", "yaw", "roll"):
        g.add_property(f"has_world_{axis}", data, "PositionedEntity", "float")
    for name, dom, rng in [
        ("has_weather", "EnvironmentAction", "string"),
        ("has_target_speed", "SpeedAction", "float"),
        ("has_start_waypoint", "TrafficParticipant", "string"),
        ("has_end_waypoint", "TrafficParticipant", "string"),
        ("has_length", "TrafficParticipant", "float"),
        ("has_width", "TrafficParticipant", "float"),
        ("has_category", "TrafficParticipant", "string"),
        ("has_simulation_time", "SimulationTimeCondition", "float"),
        ("has_distance", "RelativeDistanceCondition", "float"),
        ("has_cloud_cover", "Weather", "float"),
        ("has_wind_speed", "Weather", "float"),
        ("has_fog_density", "Fog", "float"),
        ("has_fog_distance", "Fog", "float"),
        ("has_fog_falloff", "Fog", "float"),
        ("has_precipitation_intensity", "Rain", "float"),
        ("has_precipitation_deposits", "Rain", "float"),
        ("has_wetness", "RoadCondition", "float"),
        ("has_friction", "RoadCondition", "float"),
        ("has_altitude", "Sun", "float"),
        ("has_azimuth", "Sun", "float"),
        ("has_lane_width", "Junction", "float"),
        ("has_lanes_per_approach", "Junction", "int"),
        ("has_approach_length", "Junction", "float"),
        ("has_junction_half_width", "Junction", "float"),
        ("has_scenario_id", "Static", "string"),
    ]:
        g.add_property(name, data, dom, rng)
    return g


def load_template(path: str | Path) -> ScenarioGraph:
    """Template from a JSON document ``{"classes": [...], "properties": [...]}``."""
    doc = json.loads(Path(path).read_text())
    g = ScenarioGraph()
    for c in doc.get("classes", []):
        g.add_class(c["name"], c.get("parent"))
    for p in doc.get("properties", []):
        g.add_property(p["name"], p["kind"], p["domain"], p["range"])
    return g


# -- conformance ----------------------------------------------------------


def _literal_ok(value, tag: str) -> bool:
    if tag == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if tag == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if tag == "bool":
        return isinstance(value, bool)
    return isinstance(value, str)


def check_conformance(graph: ScenarioGraph) -> list[Violation]:
    out: list[Violation] = []
    for name, c in sorted(graph.classes.items()):
        if c.parent is not None and c.parent not in graph.classes:
            out.append(Violation("integrity", f"class {name} has undeclared parent {c.parent}"))
        seen = set()
        cur = name
        while cur is not None and cur in graph.classes:
            if cur in seen:
                out.append(Violation("integrity", f"class {name} has a cyclic parent chain"))
                break
            seen.add(cur)
            cur = graph.classes[cur].parent
    for name, p in sorted(graph.properties.items()):
        if p.domain not in graph.classes:
            out.append(Violation("integrity", f"property {name} has undeclared domain {p.domain}"))
        if p.kind == "object_property" and p.range not in graph.classes:
            out.append(Violation("integrity", f"property {name} has undeclared range {p.range}"))
        if p.kind == "data_property" and p.range not in PRIMITIVES:
            out.append(Violation("integrity", f"property {name} has unknown literal type {p.range}"))

    for ind_id, ind in sorted(graph.individuals.items()):
        if ind.cls not in graph.classes:
            out.append(Violation("class", f"{ind_id} belongs to undeclared class {ind.cls}"))
            continue
        for prop, value in ind.property_values:
            p = graph.properties.get(prop)
            if p is None:
                out.append(Violation("integrity", f"{ind_id} uses undeclared property {prop}"))
                continue
            if not graph.is_a(ind.cls, p.domain):
                out.append(
                    Violation("domain", f"{ind_id} ({ind.cls}) outside the domain {p.domain} of {prop}",
                              {"individual": ind_id})
                )
            if p.kind == "object_property":
                target = graph.individuals.get(value) if isinstance(value, str) else None
                if target is None:
                    out.append(Violation("integrity", f"{ind_id}.{prop} refers to missing individual {value!r}"))
                elif not graph.is_a(target.cls, p.range):
                    out.append(
                        Violation("range", f"{ind_id}.{prop} -> {value} ({target.cls}) outside range {p.range}")
                    )
            elif not _literal_ok(value, p.range):
                out.append(Violation("range", f"{ind_id}.{prop} literal {value!r} is not {p.range}"))
    return out


# -- triples --------------------------------------------------------------


def triples(graph: ScenarioGraph) -> list[tuple[str, str, str]]:
    rows = []
    for name, c in graph.classes.items():
        rows.append((name, MEMBER, "Class"))
        if c.parent is not None:
            rows.append((name, "subClassOf", c.parent))
    for name, p in graph.properties.items():
        rows.append((name, MEMBER, "ObjectProperty" if p.kind == "object_property" else "DataProperty"))
        rows.append((name, "domain", p.domain))
        rows.append((name, "range", p.range))
    for ind_id, ind in graph.individuals.items():
        rows.append((ind_id, MEMBER, ind.cls))
        for prop, value in ind.property_values:
            p = graph.properties[prop]
            obj = value if p.kind == "object_property" else _literal_token(value)
            rows.append((ind_id, prop, obj))
    return sorted(rows)


def export_triples(graph: ScenarioGraph) -> str:
    problems = check_conformance(graph)
    if problems:
        raise OntologyError(f"graph is not conformant: {problems[0].message}")
    return "".join(f"{s} {p} {o}\n" for s, p, o in triples(graph))


def _parse_literal(token: str, tag: str):
    text = json.loads(token)
    if tag == "float":
        return float(text)
    if tag == "int":
        return int(text)
    if tag == "bool":
        return text == "true"
    return text


def import_triples(text: str) -> ScenarioGraph:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(" ", 2)
        if len(parts) != 3:
            raise OntologyError(f"line {lineno}: expected subject predicate object")
        rows.append(tuple(parts))

    g = ScenarioGraph()
    kinds = {}
    parents = {}
    prop_parts: dict[str, dict] = {}
    for s, p, o in rows:
        if p == MEMBER and o == "Class":
            g.classes[s] = ClassDef(s)
        elif p == MEMBER and o in ("ObjectProperty", "DataProperty"):
            kinds[s] = "object_property" if o == "ObjectProperty" else "data_property"
        elif p == "subClassOf":
            parents[s] = o
        elif p in ("domain", "range"):
            prop_parts.setdefault(s, {})[p] = o
    for name, parent in parents.items():
        g.classes[name] = ClassDef(name, parent)
    for name, kind in kinds.items():
        parts = prop_parts.get(name, {})
        g.properties[name] = PropertyDef(name, kind, parts.get("domain", ""), parts.get("range", ""))

    members = {}
    values: dict[str, list] = {}
    for s, p, o in rows:
        if s in g.classes or s in g.properties:
            continue
        if p == MEMBER:
            members[s] = o
            continue
        prop = g.properties.get(p)
        if prop is None:
            raise OntologyError(f"undeclared property {p!r}")
        value = o if prop.kind == "object_property" else _parse_literal(o, prop.range)
        values.setdefault(s, []).append((p, value))
    for ind_id, cls in members.items():
        g.individuals[ind_id] = Individual(ind_id, cls, tuple(values.get(ind_id, ())))
    return g


# -- instantiation --------------------------------------------------------

STATIC_MAP_PARAMS = ("lane_width", "lanes_per_approach", "approach_length", "junction_half_width")


class InstantiationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(f"{v.rule_id}: {v.message}" for v in violations))


def scenario_state(
    logical: LogicalScenario,
    named: Mapping[str, float],
    crossroad: CrossroadMap,
) -> ScenarioState:
    """Constraint-engine view of a concrete scenario (weather plus placements)."""
    ego_path = plan_path(crossroad, logical.ego_start, logical.ego_end)
    bv_path = plan_path(crossroad, logical.bv_start, logical.bv_end)
    ex, ey, _ = ego_path.pose(named.get("ego_spawn_offset", 0.0))
    bx, by, _ = bv_path.pose(0.0)
    placements = [
        Placement("ego", "vehicle", float(ex[0]), float(ey[0]),
                  float(named.get("ego_speed", logical.ego_target_speed))),
        Placement("bv", "vehicle", float(bx[0]), float(by[0]), float(named.get("bv_speed", logical.bv_speed))),
    ]
    if crossroad.signal is not None:
        h = crossroad.geometry.junction_half_width
        corners = [(h, h), (-h, h), (-h, -h), (h, -h)]
        placements += [Placement(f"traffic_light_{i}", "traffic_light", x, y) for i, (x, y) in enumerate(corners)]
    return ScenarioState(
        weather=weather_from_mapping(named),
        placements=tuple(placements),
        map_spec=crossroad.geometry,
    )


def instantiate(
    template: ScenarioGraph,
    logical: LogicalScenario,
    vector: ScenarioVector | Mapping[str, float] | None = None,
    *,
    crossroad: CrossroadMap | None = None,
    thresholds: ConstraintThresholds | None = None,
    trigger: str = "time",
    trigger_distance: float = 30.0,
    vehicle_length: float = 4.5,
    vehicle_width: float = 2.0,
) -> ScenarioGraph:
    """Concrete scenario graph for ``logical`` with the parameters in ``vector``.

    Weather attributes in the vector are repaired against the constraint
    rules before they enter the graph. ``trigger`` selects how the BV start
    event fires: ``time`` waits ``bv_spawn_delay`` seconds, ``distance``
    fires when the ego comes within ``trigger_distance`` meters of the BV.
    """
    if trigger not in ("time", "distance"):
        raise ValueError(f"unknown trigger mode {trigger!r}")
    if isinstance(vector, ScenarioVector):
        named = decode(vector)
        extension = [s.name for s in vector.space.on_axis("extension")]
    else:
        named = dict(vector or {})
        extension = []

    if crossroad is None:
        base = StaticMapSpec()
        overrides = {k: named[k] for k in STATIC_MAP_PARAMS if k in named}
        if "lanes_per_approach" in overrides:
            overrides["lanes_per_approach"] = int(round(overrides["lanes_per_approach"]))
        spec = StaticMapSpec(**{**base.__dict__, **overrides}) if overrides else base
        crossroad = build_crossroad(spec)
    spec = crossroad.geometry

    state = scenario_state(logical, named, crossroad)
    try:
        state = repair(state, thresholds=thresholds)
    except ConstraintError as exc:
        raise InstantiationError([Violation("repair", str(exc))]) from None
    problems = validate(state, thresholds=thresholds)
    if problems:
        raise InstantiationError(problems)
    w = state.weather

    g = template.copy()
    g.add(
        "crossroad", "Junction",
        has_scenario_id=logical.id,
        has_lane_width=float(spec.lane_width),
        has_lanes_per_approach=int(spec.lanes_per_approach),
        has_approach_length=float(spec.approach_length),
        has_junction_half_width=float(spec.junction_half_width),
        hasTrafficLight=[p.name for p in state.placements if p.kind == "traffic_light"],
    )
    for p in state.placements:
        if p.kind == "traffic_light":
            g.add(p.name, "TrafficLight", has_world_x=p.x, has_world_y=p.y, has_world_z=0.0)

    paths = {
        "ego": plan_path(crossroad, logical.ego_start, logical.ego_end),
        "bv": plan_path(crossroad, logical.bv_start, logical.bv_end),
    }
    routes = {"ego": (logical.ego_start, logical.ego_end), "bv": (logical.bv_start, logical.bv_end)}
    spawn_s = {"ego": float(named.get("ego_spawn_offset", 0.0)), "bv": 0.0}
    for actor in ("ego", "bv"):
        x, y, h = paths[actor].pose(spawn_s[actor])
        speed = state.placement(actor).speed
        g.add(f"{actor}_position", "WorldPosition",
              has_world_x=float(x[0]), has_world_y=float(y[0]), has_world_z=0.0,
              has_world_pitch=0.0, has_world_yaw=float(h[0]), has_world_roll=0.0)
        g.add(f"{actor}_teleport", "TeleportAction", hasPosition=f"{actor}_position")
        g.add(f"{actor}_speed_action", "SpeedAction", has_target_speed=float(speed))
        init_actions = [f"{actor}_teleport"]
        if actor == "ego":
            init_actions.append("ego_speed_action")
        g.add(actor, "Vehicle",
              has_category="car", has_length=float(vehicle_length), has_width=float(vehicle_width),
              has_start_waypoint=routes[actor][0], has_end_waypoint=routes[actor][1],
              hasInitAction=init_actions)

    g.add("sun", "Sun", has_altitude=w.sun_altitude, has_azimuth=w.sun_azimuth)
    g.add("fog", "Fog", has_fog_density=w.fog_density, has_fog_distance=w.fog_distance,
          has_fog_falloff=w.fog_falloff)
    g.add("rain", "Rain", has_precipitation_intensity=w.precipitation_intensity,
          has_precipitation_deposits=w.precipitation_deposits)
    g.add("road_condition", "RoadCondition", has_wetness=w.wetness, has_friction=w.friction)
    g.add("weather", "Weather", has_cloud_cover=w.cloud_cover, has_wind_speed=w.wind_speed,
          hasSun="sun", hasFog="fog", hasRain="rain", hasRoadCondition="road_condition")
    g.add("environment_action", "EnvironmentAction", has_weather="weather", appliesWeather="weather")
    g.add("weather_trigger", "SimulationTimeCondition", has_simulation_time=0.0)
    g.add("weather_event", "EnvironmentChangeEvent",
          hasEventAction="environment_action", hasTrigger="weather_trigger")

    if trigger == "time":
        g.add("bv_start_trigger", "SimulationTimeCondition",
              has_simulation_time=float(named.get("bv_spawn_delay", 0.0)))
    else:
        g.add("bv_start_trigger", "RelativeDistanceCondition",
              has_distance=float(trigger_distance), hasTriggeringEntity="ego", hasReferenceEntity="bv")
    g.add("bv_start_event", "ManeuverEvent",
          hasActor="bv", hasEventAction="bv_speed_action", hasTrigger="bv_start_trigger")

    if extension:
        props = {}
        for name in extension:
            prop = f"ext_{name}"
            g.add_property(prop, "data_property", "ExtensionElement", "float")
            props[prop] = float(named[name])
        g.add("extension", "ExtensionElement", **props)

    problems = check_conformance(g)
    if problems:
        raise InstantiationError(problems)
    return g
