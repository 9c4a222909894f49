import math
import xml.etree.ElementTree as ET

import pytest

from helpers import rounded_params
from xmlcheck import NotWellFormed, check
from scenforge.odd import catalog_scenario
from scenforge.ontology import OntologyError, build_template, instantiate
from scenforge.openx import (
    EmitterError,
    EmitterOptions,
    MalformedXmlError,
    emit_xodr,
    emit_xosc,
    header_timestamp,
    num,
    params_from_graph,
    parse_back,
    render,
)
from scenforge.roadnet import StaticMapSpec
from scenforge.sim import build_crossroad, plan_path

OPTS = EmitterOptions(fixed_timestamp="2024-01-01T00:00:00")


def graph(sid="S1", **params):
    return instantiate(build_template(), catalog_scenario(sid), params)


class TestChecker:
    def test_accepts_simple_document(self):
        assert check('<?xml version="1.0"?>\n<a x="1"><b/>t &amp; u</a>\n') == ["a", "b"]

    @pytest.mark.parametrize("doc", [
        "<a><b></a></b>", "<a>", "<a x=1/>", '<a x="1" x="2"/>', "<a/><b/>", "<a>&</a>", "text",
    ])
    def test_rejects(self, doc):
        with pytest.raises(NotWellFormed):
            check(doc)


class TestNumbers:
    @pytest.mark.parametrize("x, text", [
        (1.8, "1.8"), (40.0, "40"), (math.pi, "3.14159"), (-0.0, "0"), (-1e-12, "-1e-12"), (123456789.0, "1.23457e+08"),
    ])
    def test_six_significant_digits(self, x, text):
        assert num(x) == text


class TestXodr:
    def test_structure(self):
        doc = emit_xodr(StaticMapSpec(), OPTS)
        names = check(doc)
        assert names.count("junction") == 1
        root = ET.fromstring(doc)
        approaches = [r for r in root.iter("road") if r.attrib["junction"] == "-1"]
        assert [r.attrib["id"] for r in approaches] == ["1", "2", "3", "4"]
        assert len(root.findall("road")) == 16
        assert len(root.findall("junction/connection")) == 12

    def test_lane_counts_and_width(self):
        root = ET.fromstring(emit_xodr(StaticMapSpec(lane_width=3.25, lanes_per_approach=2), OPTS))
        for road in root.iter("road"):
            if road.attrib["junction"] != "-1":
                continue
            section = road.find("lanes/laneSection")
            for side in ("left", "right"):
                lanes = section.findall(f"{side}/lane")
                assert len(lanes) == 2 and all(l.attrib["type"] == "driving" for l in lanes)
                assert all(l.find("width").attrib["a"] == "3.25" for l in lanes)

    def test_first_road_points_east(self):
        road = ET.fromstring(emit_xodr(StaticMapSpec(), OPTS)).find("road")
        geom = road.find("planView/geometry")
        assert float(geom.attrib["hdg"]) == 0.0 and float(geom.attrib["x"]) == 10.0

    def test_connecting_geometry_matches_planner(self):
        spec = StaticMapSpec()
        cross = build_crossroad(spec)
        root = ET.fromstring(emit_xodr(spec, OPTS))
        # left turn from the west arm (road 3) to the north arm is the ego route of S1
        road = next(r for r in root.iter("road") if r.attrib["name"] == "connect_2_left")
        plan = plan_path(cross, "P5", "P2")
        geom = road.find("planView/geometry")
        arc = geom.find("arc")
        assert arc is not None
        start = plan.polyline[1]
        assert float(geom.attrib["x"]) == pytest.approx(start[0], abs=1e-4)
        assert float(geom.attrib["y"]) == pytest.approx(start[1], abs=1e-4)
        assert float(geom.attrib["length"]) == pytest.approx(plan.pieces[1].length, rel=1e-5)
        assert float(arc.attrib["curvature"]) > 0

    def test_deterministic(self):
        assert emit_xodr(StaticMapSpec(), OPTS) == emit_xodr(StaticMapSpec(), OPTS)

    def test_bad_options(self):
        with pytest.raises(EmitterError):
            EmitterOptions(xodr_filename="")


class TestXosc:
    def test_s1_entities_and_speed(self):
        doc = emit_xosc(graph(), OPTS)
        check(doc)
        root = ET.fromstring(doc)
        assert len(root.findall("Entities/ScenarioObject")) == 2
        speeds = [el.attrib["value"] for el in root.iter("AbsoluteTargetSpeed")]
        assert "1.8" in speeds and "6.9" in speeds
        assert root.find("RoadNetwork/LogicFile").attrib["filepath"] == OPTS.xodr_filename

    def test_fog_mapping(self):
        root = ET.fromstring(emit_xosc(graph(fog_density=60), OPTS))
        fog = root.find(".//Weather/Fog")
        assert fog.attrib["visualRange"] == "40"
        assert fog.attrib["falloff"] == "3"

    def test_sun_and_road_condition(self):
        root = ET.fromstring(emit_xosc(graph(sun_altitude=15.0, wetness=80.0), OPTS))
        sun = root.find(".//Weather/Sun")
        assert float(sun.attrib["azimuth"]) == pytest.approx(31.25 * math.pi / 6, rel=1e-5)
        assert float(sun.attrib["elevation"]) == pytest.approx(math.radians(15.0), rel=1e-5)
        road = root.find(".//Environment/RoadCondition")
        assert road.attrib["frictionScaleFactor"] == "0.6"

    def test_no_events(self):
        g = graph()
        for ev in g.of_class("Event"):
            g.individuals.pop(ev.id)
        doc = emit_xosc(g, OPTS)
        check(doc)
        act = ET.fromstring(doc).find("Storyboard/Story/Act")
        assert act.findall("ManeuverGroup") == []
        assert parse_back(doc).events == ()

    def test_distance_trigger_survives(self):
        g = instantiate(build_template(), catalog_scenario("S2"), {}, trigger="distance", trigger_distance=17.5)
        ev = parse_back(emit_xosc(g, OPTS)).event("bv_start_event")
        assert (ev.condition, ev.condition_value) == ("relative_distance", 17.5)
        assert (ev.triggering_entity, ev.reference_entity) == ("ego", "bv")

    def test_non_conformant_graph(self):
        g = graph()
        g.add("ufo", "Spaceship")
        with pytest.raises(OntologyError):
            emit_xosc(g, OPTS)

    def test_fixed_timestamp(self):
        doc = emit_xosc(graph(), OPTS)
        assert header_timestamp(doc) == "2024-01-01T00:00:00"
        assert emit_xosc(graph(), OPTS) == doc
        live = emit_xosc(graph(), EmitterOptions())
        assert header_timestamp(live) != ""


class TestParseBack:
    def test_bv_speed(self):
        back = parse_back(emit_xosc(graph(), OPTS))
        assert back.event("bv_start_event").speed == 1.8
        assert back.entity("ego").speed == 6.9
        assert back.entity("bv").speed is None

    def test_fixpoint(self):
        doc = emit_xosc(graph(fog_density=47.123456789, bv_speed=3.3333333), OPTS)
        assert render(parse_back(doc), OPTS) == doc

    @pytest.mark.parametrize("sid", ["S1", "S2", "S3", "S4"])
    def test_every_parameter_recovered(self, sid):
        g = graph(sid, fog_density=12.5, cloud_cover=64.0, sun_altitude=-5.0, bv_spawn_delay=2.25)
        expected = params_from_graph(g, OPTS)
        back = parse_back(emit_xosc(g, OPTS))

        assert back == rounded_params(expected)

    def test_truncated(self):
        doc = emit_xosc(graph(), OPTS)
        with pytest.raises(MalformedXmlError):
            parse_back(doc[: len(doc) // 2])

    def test_unknown_shape(self):
        with pytest.raises(MalformedXmlError):
            parse_back("<OpenDRIVE/>")
        with pytest.raises(MalformedXmlError):
            parse_back("<OpenSCENARIO><FileHeader/></OpenSCENARIO>")
