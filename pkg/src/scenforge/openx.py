"""OpenDRIVE 1.6 map and OpenSCENARIO 1.0 scenario emission, plus a reader for the latter.

Only the element subset needed for the two-vehicle crossroad is produced.
Numbers are written with 6 significant digits. Weather values that the base
schema cannot carry in their native units travel as extra attributes on the
weather elements so that :func:`parse_back` can recover them.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime, timezone

from .ontology import Individual, OntologyError, ScenarioGraph, check_conformance
from .roadnet import StaticMapSpec, arm_axis
from .sim import _Arc, junction_piece

JUNCTION_ID = 100
TIME_OF_DAY = "2020-06-01T12:00:00"


class EmitterError(ValueError):
    pass


class MalformedXmlError(ValueError):
    pass


@dataclass(frozen=True)
class EmitterOptions:
    xodr_filename: str = "crossroad.xodr"
    author: str = "scenforge"
    fixed_timestamp: str | None = None

    def __post_init__(self) -> None:
        if not self.xodr_filename:
            raise EmitterError("xodr_filename must be non-empty")

    def timestamp(self) -> str:
        if self.fixed_timestamp is not None:
            return self.fixed_timestamp
        return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")


def num(x: float) -> str:
    text = f"{float(x):.6g}"
    return "0" if text == "-0" else text


def _sub(parent: ET.Element, tag: str, **attrs) -> ET.Element:
    return ET.SubElement(parent, tag, {k: v if isinstance(v, str) else num(v) for k, v in attrs.items()})


def _serialize(root: ET.Element) -> str:
    ET.indent(root, space="  ")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


# -- OpenDRIVE ------------------------------------------------------------


def _lanes(parent: ET.Element, spec: StaticMapSpec, left: int, right: int, offset: float = 0.0) -> None:
    lanes = _sub(parent, "lanes")
    if offset:
        _sub(lanes, "laneOffset", s=0.0, a=offset, b=0.0, c=0.0, d=0.0)
    section = _sub(lanes, "laneSection", s=0.0)

    def lane(group, lane_id):
        el = _sub(group, "lane", id=str(lane_id), type="driving", level="false")
        _sub(el, "link")
        _sub(el, "width", sOffset=0.0, a=spec.lane_width, b=0.0, c=0.0, d=0.0)
        _sub(el, "roadMark", sOffset=0.0, type="solid" if abs(lane_id) == max(left, right) else "broken",
             weight="standard", color="standard", width=0.12)

    if left:
        group = _sub(section, "left")
        for i in range(left, 0, -1):
            lane(group, i)
    center = _sub(_sub(section, "center"), "lane", id="0", type="none", level="false")
    _sub(center, "roadMark", sOffset=0.0, type="solid solid", weight="standard", color="yellow", width=0.12)
    if right:
        group = _sub(section, "right")
        for i in range(1, right + 1):
            lane(group, -i)


def emit_xodr(spec: StaticMapSpec, opts: EmitterOptions | None = None) -> str:
    """Four approach roads (road ``k+1`` on arm ``k``, east first, counterclockwise) joined by one junction."""
    opts = opts or EmitterOptions()
    h = spec.junction_half_width
    extent = h + spec.approach_length
    root = ET.Element("OpenDRIVE")
    _sub(root, "header", revMajor="1", revMinor="6", name="crossroad", version="1.00",
         date=opts.timestamp(), north=extent, south=-extent, east=extent, west=-extent, vendor=opts.author)

    n = spec.lanes_per_approach
    for arm in range(4):
        ux, uy = arm_axis(arm)
        road = _sub(root, "road", name=f"approach_{arm}", length=spec.approach_length,
                    id=str(arm + 1), junction="-1")
        link = _sub(road, "link")
        _sub(link, "predecessor", elementType="junction", elementId=str(JUNCTION_ID))
        _sub(_sub(road, "type", s=0.0, type="town"), "speed", max=50, unit="km/h")
        geom = _sub(_sub(road, "planView"), "geometry", s=0.0, x=h * ux, y=h * uy,
                    hdg=math.atan2(uy, ux), length=spec.approach_length)
        _sub(geom, "line")
        # road runs outward: right lanes leave the junction, left lanes enter it
        _lanes(road, spec, n, n)

    connections = []
    for entry in range(4):
        for turn, step in (("right", 1), ("straight", 2), ("left", 3)):
            exit_arm = (entry + step) % 4
            road_id = JUNCTION_ID + 1 + 3 * entry + (step - 1)
            piece = junction_piece(spec, entry, exit_arm)
            road = _sub(root, "road", name=f"connect_{entry}_{turn}", length=piece.length,
                        id=str(road_id), junction=str(JUNCTION_ID))
            link = _sub(road, "link")
            _sub(link, "predecessor", elementType="road", elementId=str(entry + 1), contactPoint="start")
            _sub(link, "successor", elementType="road", elementId=str(exit_arm + 1), contactPoint="start")
            plan = _sub(road, "planView")
            if isinstance(piece, _Arc):
                x = piece.center[0] + piece.radius * math.cos(piece.theta0)
                y = piece.center[1] + piece.radius * math.sin(piece.theta0)
                hdg = piece.theta0 + piece.direction * math.pi / 2
                geom = _sub(plan, "geometry", s=0.0, x=x, y=y, hdg=hdg, length=piece.length)
                _sub(geom, "arc", curvature=piece.direction / piece.radius)
            else:
                geom = _sub(plan, "geometry", s=0.0, x=piece.start[0], y=piece.start[1],
                            hdg=piece.heading, length=piece.length)
                _sub(geom, "line")
            # reference line follows the lane center
            _lanes(road, spec, 0, 1, offset=spec.lane_width / 2)
            connections.append((entry + 1, road_id))

    junction = _sub(root, "junction", id=str(JUNCTION_ID), name="crossroad")
    for k, (incoming, connecting) in enumerate(connections):
        conn = _sub(junction, "connection", id=str(k), incomingRoad=str(incoming),
                    connectingRoad=str(connecting), contactPoint="start")
        _sub(conn, "laneLink", **{"from": "1", "to": "-1"})
    return _serialize(root)


# -- OpenSCENARIO ---------------------------------------------------------


@dataclass(frozen=True)
class EntityParams:
    name: str
    kind: str = "vehicle"
    category: str = "car"
    length: float = 4.5
    width: float = 2.0
    start_waypoint: str = ""
    end_waypoint: str = ""
    pose: tuple[float, float, float, float, float, float] | None = None
    speed: float | None = None


@dataclass(frozen=True)
class WeatherParams:
    cloud_cover: float = 0.0
    wind_speed: float = 0.0
    fog_density: float = 0.0
    fog_distance: float = 100.0
    fog_falloff: float = 0.0
    precipitation_intensity: float = 0.0
    precipitation_deposits: float = 0.0
    wetness: float = 0.0
    friction: float = 0.0
    sun_altitude: float = 45.0
    sun_azimuth: float = 0.0


@dataclass(frozen=True)
class EventParams:
    name: str
    actor: str | None
    action: str
    condition: str
    condition_value: float
    speed: float | None = None
    weather: WeatherParams | None = None
    triggering_entity: str | None = None
    reference_entity: str | None = None


@dataclass(frozen=True)
class XoscParams:
    xodr_filename: str
    entities: tuple[EntityParams, ...] = ()
    events: tuple[EventParams, ...] = ()
    description: str = "scenario"

    def entity(self, name: str) -> EntityParams:
        for e in self.entities:
            if e.name == name:
                return e
        raise KeyError(name)

    def event(self, name: str) -> EventParams:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)


def _one(ind: Individual, prop: str, default=None):
    vals = ind.values(prop)
    return vals[0] if vals else default


def _weather_params(g: ScenarioGraph, weather_id: str) -> WeatherParams:
    w = g.individuals[weather_id]
    parts = {p: g.individuals[_one(w, p)] for p in ("hasSun", "hasFog", "hasRain", "hasRoadCondition")
             if _one(w, p) is not None}
    base = WeatherParams()

    def pick(part, prop, default):
        ind = parts.get(part)
        return float(_one(ind, prop, default)) if ind is not None else default

    return WeatherParams(
        cloud_cover=float(_one(w, "has_cloud_cover", base.cloud_cover)),
        wind_speed=float(_one(w, "has_wind_speed", base.wind_speed)),
        fog_density=pick("hasFog", "has_fog_density", base.fog_density),
        fog_distance=pick("hasFog", "has_fog_distance", base.fog_distance),
        fog_falloff=pick("hasFog", "has_fog_falloff", base.fog_falloff),
        precipitation_intensity=pick("hasRain", "has_precipitation_intensity", base.precipitation_intensity),
        precipitation_deposits=pick("hasRain", "has_precipitation_deposits", base.precipitation_deposits),
        wetness=pick("hasRoadCondition", "has_wetness", base.wetness),
        friction=pick("hasRoadCondition", "has_friction", base.friction),
        sun_altitude=pick("hasSun", "has_altitude", base.sun_altitude),
        sun_azimuth=pick("hasSun", "has_azimuth", base.sun_azimuth),
    )


def params_from_graph(g: ScenarioGraph, opts: EmitterOptions) -> XoscParams:
    """Collect what the scenario file needs from an instantiated graph."""
    problems = check_conformance(g)
    if problems:
        raise OntologyError(f"graph is not conformant: {problems[0].message}")

    entities = []
    for ind in g.of_class("TrafficParticipant"):
        if not (g.is_a(ind.cls, "Vehicle") or g.is_a(ind.cls, "Pedestrian")):
            continue
        pose = speed = None
        for action_id in ind.values("hasInitAction"):
            action = g.individuals[action_id]
            if g.is_a(action.cls, "TeleportAction"):
                pos = g.individuals[action.value("hasPosition")]
                pose = tuple(float(_one(pos, f"has_world_{a}", 0.0))
                             for a in ("x", "y", "z", "yaw", "pitch", "roll"))
            elif g.is_a(action.cls, "SpeedAction"):
                speed = float(action.value("has_target_speed"))
        entities.append(EntityParams(
            name=ind.id,
            kind="vehicle" if g.is_a(ind.cls, "Vehicle") else "pedestrian",
            category=str(_one(ind, "has_category", "car" if g.is_a(ind.cls, "Vehicle") else "pedestrian")),
            length=float(_one(ind, "has_length", 4.5)),
            width=float(_one(ind, "has_width", 2.0)),
            start_waypoint=str(_one(ind, "has_start_waypoint", "")),
            end_waypoint=str(_one(ind, "has_end_waypoint", "")),
            pose=pose,
            speed=speed,
        ))

    events = []
    for ev in g.of_class("Event"):
        action_id = _one(ev, "hasEventAction")
        action = g.individuals[action_id] if action_id else None
        kind, speed, weather = "none", None, None
        if action is not None and g.is_a(action.cls, "SpeedAction"):
            kind, speed = "speed", float(action.value("has_target_speed"))
        elif action is not None and g.is_a(action.cls, "EnvironmentAction"):
            kind, weather = "environment", _weather_params(g, action.value("appliesWeather"))
        trig_id = _one(ev, "hasTrigger")
        trig = g.individuals[trig_id] if trig_id else None
        if trig is not None and g.is_a(trig.cls, "RelativeDistanceCondition"):
            condition = "relative_distance"
            value = float(trig.value("has_distance"))
        else:
            condition = "simulation_time"
            value = float(_one(trig, "has_simulation_time", 0.0)) if trig is not None else 0.0
        events.append(EventParams(
            name=ev.id,
            actor=_one(ev, "hasActor"),
            action=kind,
            condition=condition,
            condition_value=value,
            speed=speed,
            weather=weather,
            triggering_entity=_one(trig, "hasTriggeringEntity") if trig is not None else None,
            reference_entity=_one(trig, "hasReferenceEntity") if trig is not None else None,
        ))

    junctions = g.of_class("Junction")
    description = str(_one(junctions[0], "has_scenario_id", "scenario")) if junctions else "scenario"
    return XoscParams(opts.xodr_filename, tuple(entities), tuple(events), description)


def _speed_action(parent: ET.Element, speed: float) -> None:
    sa = _sub(_sub(_sub(parent, "PrivateAction"), "LongitudinalAction"), "SpeedAction")
    _sub(sa, "SpeedActionDynamics", dynamicsShape="step", value=0.0, dynamicsDimension="time")
    _sub(_sub(sa, "SpeedActionTarget"), "AbsoluteTargetSpeed", value=speed)


def _environment(parent: ET.Element, w: WeatherParams) -> None:
    env = _sub(_sub(parent, "EnvironmentAction"), "Environment", name="weather")
    _sub(env, "TimeOfDay", animation="false", dateTime=TIME_OF_DAY)
    cloud = "free" if w.cloud_cover < 20 else "cloudy" if w.cloud_cover < 60 else "overcast"
    weather = _sub(env, "Weather", cloudState=cloud, cloudCover=w.cloud_cover, windSpeed=w.wind_speed)
    _sub(weather, "Sun", intensity=1.0, azimuth=w.sun_azimuth, elevation=math.radians(w.sun_altitude),
         altitudeDeg=w.sun_altitude)
    _sub(weather, "Fog", visualRange=w.fog_distance, density=w.fog_density, falloff=w.fog_falloff)
    _sub(weather, "Precipitation", precipitationType="rain" if w.precipitation_intensity > 0 else "dry",
         intensity=w.precipitation_intensity / 100.0, intensityPercent=w.precipitation_intensity,
         deposits=w.precipitation_deposits)
    _sub(env, "RoadCondition", frictionScaleFactor=w.friction, wetness=w.wetness)


def render(p: XoscParams, opts: EmitterOptions | None = None) -> str:
    opts = opts or EmitterOptions(p.xodr_filename)
    root = ET.Element("OpenSCENARIO")
    _sub(root, "FileHeader", revMajor="1", revMinor="0", date=opts.timestamp(),
         description=p.description, author=opts.author)
    _sub(root, "ParameterDeclarations")
    _sub(root, "CatalogLocations")
    _sub(_sub(root, "RoadNetwork"), "LogicFile", filepath=p.xodr_filename)

    entities = _sub(root, "Entities")
    for e in p.entities:
        obj = _sub(entities, "ScenarioObject", name=e.name)
        if e.kind == "vehicle":
            body = _sub(obj, "Vehicle", name=e.category, vehicleCategory=e.category)
        else:
            body = _sub(obj, "Pedestrian", name=e.category, model=e.category, mass=80.0,
                        pedestrianCategory="pedestrian")
        _sub(body, "ParameterDeclarations")
        box = _sub(body, "BoundingBox")
        _sub(box, "Center", x=0.0, y=0.0, z=0.75)
        _sub(box, "Dimensions", width=e.width, length=e.length, height=1.5)
        if e.kind == "vehicle":
            _sub(body, "Performance", maxSpeed=69.0, maxAcceleration=10.0, maxDeceleration=10.0)
            axles = _sub(body, "Axles")
            _sub(axles, "FrontAxle", maxSteering=0.5, wheelDiameter=0.6, trackWidth=1.8,
                 positionX=3.1, positionZ=0.3)
            _sub(axles, "RearAxle", maxSteering=0.0, wheelDiameter=0.6, trackWidth=1.8,
                 positionX=0.0, positionZ=0.3)
        props = _sub(body, "Properties")
        _sub(props, "Property", name="startWaypoint", value=e.start_waypoint)
        _sub(props, "Property", name="endWaypoint", value=e.end_waypoint)

    board = _sub(root, "Storyboard")
    actions = _sub(_sub(board, "Init"), "Actions")
    for e in p.entities:
        if e.pose is None and e.speed is None:
            continue
        private = _sub(actions, "Private", entityRef=e.name)
        if e.pose is not None:
            x, y, z, yaw, pitch, roll = e.pose
            tp = _sub(_sub(private, "PrivateAction"), "TeleportAction")
            _sub(_sub(tp, "Position"), "WorldPosition", x=x, y=y, z=z, h=yaw, p=pitch, r=roll)
        if e.speed is not None:
            _speed_action(private, e.speed)

    story = _sub(board, "Story", name="story")
    act = _sub(story, "Act", name="act")
    for ev in p.events:
        group = _sub(act, "ManeuverGroup", maximumExecutionCount="1", name=f"{ev.name}_group")
        actors = _sub(group, "Actors", selectTriggeringEntities="false")
        if ev.actor:
            _sub(actors, "EntityRef", entityRef=ev.actor)
        event = _sub(_sub(group, "Maneuver", name=f"{ev.name}_maneuver"), "Event",
                     name=ev.name, priority="overwrite")
        action = _sub(event, "Action", name=f"{ev.name}_action", kind=ev.action)
        if ev.action == "speed":
            _speed_action(action, ev.speed)
        elif ev.action == "environment":
            _environment(_sub(action, "GlobalAction"), ev.weather)
        group_el = _sub(_sub(event, "StartTrigger"), "ConditionGroup")
        cond = _sub(group_el, "Condition", name=f"{ev.name}_condition", delay=0.0, conditionEdge="rising")
        if ev.condition == "relative_distance":
            by = _sub(cond, "ByEntityCondition")
            te = _sub(by, "TriggeringEntities", triggeringEntitiesRule="any")
            _sub(te, "EntityRef", entityRef=ev.triggering_entity or "")
            _sub(_sub(by, "EntityCondition"), "RelativeDistanceCondition",
                 entityRef=ev.reference_entity or "", relativeDistanceType="cartesianDistance",
                 value=ev.condition_value, freespace="false", rule="lessThan")
        else:
            _sub(_sub(cond, "ByValueCondition"), "SimulationTimeCondition",
                 value=ev.condition_value, rule="greaterThan")
    act_start = _sub(_sub(act, "StartTrigger"), "ConditionGroup")
    cond = _sub(act_start, "Condition", name="act_start", delay=0.0, conditionEdge="rising")
    _sub(_sub(cond, "ByValueCondition"), "SimulationTimeCondition", value=0.0, rule="greaterThan")
    _sub(board, "StopTrigger")
    return _serialize(root)


def emit_xosc(graph: ScenarioGraph, opts: EmitterOptions | None = None) -> str:
    opts = opts or EmitterOptions()
    return render(params_from_graph(graph, opts), opts)


# -- reading back ---------------------------------------------------------


def _f(el: ET.Element, attr: str) -> float:
    try:
        return float(el.attrib[attr])
    except KeyError:
        raise MalformedXmlError(f"<{el.tag}> lacks attribute {attr!r}") from None


def _find(el: ET.Element, path: str) -> ET.Element:
    found = el.find(path)
    if found is None:
        raise MalformedXmlError(f"<{el.tag}> has no {path}")
    return found


def _read_speed(private_action: ET.Element) -> float:
    return _f(_find(private_action, "LongitudinalAction/SpeedAction/SpeedActionTarget/AbsoluteTargetSpeed"),
              "value")


def _read_weather(env: ET.Element) -> WeatherParams:
    weather = _find(env, "Weather")
    sun = _find(weather, "Sun")
    fog = _find(weather, "Fog")
    rain = _find(weather, "Precipitation")
    road = _find(env, "RoadCondition")
    return WeatherParams(
        cloud_cover=_f(weather, "cloudCover"),
        wind_speed=_f(weather, "windSpeed"),
        fog_density=_f(fog, "density"),
        fog_distance=_f(fog, "visualRange"),
        fog_falloff=_f(fog, "falloff"),
        precipitation_intensity=_f(rain, "intensityPercent"),
        precipitation_deposits=_f(rain, "deposits"),
        wetness=_f(road, "wetness"),
        friction=_f(road, "frictionScaleFactor"),
        sun_altitude=_f(sun, "altitudeDeg"),
        sun_azimuth=_f(sun, "azimuth"),
    )


def parse_back(xosc: str) -> XoscParams:
    """Recover the parameters of a document written by :func:`render`."""
    try:
        root = ET.fromstring(xosc)
    except ET.ParseError as exc:
        raise MalformedXmlError(str(exc)) from None
    if root.tag != "OpenSCENARIO":
        raise MalformedXmlError(f"unexpected root element <{root.tag}>")
    header = _find(root, "FileHeader")
    xodr = _find(root, "RoadNetwork/LogicFile").attrib.get("filepath", "")

    init = {}
    for private in root.iterfind("Storyboard/Init/Actions/Private"):
        pose = speed = None
        for pa in private.iterfind("PrivateAction"):
            wp = pa.find("TeleportAction/Position/WorldPosition")
            if wp is not None:
                pose = tuple(_f(wp, a) for a in ("x", "y", "z", "h", "p", "r"))
            elif pa.find("LongitudinalAction") is not None:
                speed = _read_speed(pa)
        init[private.attrib["entityRef"]] = (pose, speed)

    entities = []
    for obj in _find(root, "Entities").iterfind("ScenarioObject"):
        name = obj.attrib["name"]
        body = obj.find("Vehicle")
        kind = "vehicle"
        if body is None:
            body = _find(obj, "Pedestrian")
            kind = "pedestrian"
        dims = _find(body, "BoundingBox/Dimensions")
        props = {p.attrib["name"]: p.attrib["value"] for p in body.iterfind("Properties/Property")}
        pose, speed = init.get(name, (None, None))
        entities.append(EntityParams(
            name=name,
            kind=kind,
            category=body.attrib.get("vehicleCategory", body.attrib.get("model", "")),
            length=_f(dims, "length"),
            width=_f(dims, "width"),
            start_waypoint=props.get("startWaypoint", ""),
            end_waypoint=props.get("endWaypoint", ""),
            pose=pose,
            speed=speed,
        ))

    events = []
    for group in root.iterfind("Storyboard/Story/Act/ManeuverGroup"):
        ref = group.find("Actors/EntityRef")
        event = _find(group, "Maneuver/Event")
        action = _find(event, "Action")
        kind = action.attrib.get("kind", "none")
        speed = weather = None
        if kind == "speed":
            speed = _read_speed(_find(action, "PrivateAction"))
        elif kind == "environment":
            weather = _read_weather(_find(action, "GlobalAction/EnvironmentAction/Environment"))
        cond = _find(event, "StartTrigger/ConditionGroup/Condition")
        rel = cond.find("ByEntityCondition/EntityCondition/RelativeDistanceCondition")
        if rel is not None:
            condition, value = "relative_distance", _f(rel, "value")
            triggering = _find(cond, "ByEntityCondition/TriggeringEntities/EntityRef").attrib["entityRef"]
            reference = rel.attrib["entityRef"]
        else:
            sim_time = _find(cond, "ByValueCondition/SimulationTimeCondition")
            condition, value = "simulation_time", _f(sim_time, "value")
            triggering = reference = None
        events.append(EventParams(
            name=event.attrib["name"],
            actor=ref.attrib["entityRef"] if ref is not None else None,
            action=kind,
            condition=condition,
            condition_value=value,
            speed=speed,
            weather=weather,
            triggering_entity=triggering,
            reference_entity=reference,
        ))
    return XoscParams(xodr, tuple(entities), tuple(events), header.attrib.get("description", ""))


def header_timestamp(xml_text: str) -> str:
    root = ET.fromstring(xml_text)
    header = root.find("FileHeader")
    if header is None:
        header = root.find("header")
    if header is None:
        raise MalformedXmlError("document has no header")
    return header.attrib["date"]
