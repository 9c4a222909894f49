"""Random scenario states shared by property and acceptance tests."""

import math

import numpy as np

from scenforge.constraints import (
    FACILITY_KINDS,
    PARTICIPANT_KINDS,
    Placement,
    ScenarioState,
    WeatherState,
)
from scenforge.roadnet import StaticMapSpec


def random_weather(rng: np.random.Generator) -> WeatherState:
    # deliberately wider than the physical ranges so range repair is exercised
    pct = lambda: float(rng.uniform(-20, 120))
    return WeatherState(
        cloud_cover=pct(),
        precipitation_intensity=pct(),
        precipitation_deposits=pct(),
        wind_speed=pct(),
        fog_density=pct(),
        fog_distance=float(rng.uniform(-10, 150)),
        fog_falloff=float(rng.uniform(-1, 8)),
        wetness=pct(),
        friction=float(rng.uniform(-0.5, 1.5)),
        sun_altitude=float(rng.uniform(-100, 100)),
        sun_azimuth=float(rng.uniform(-180, 180)),
    )


def random_state(rng: np.random.Generator) -> ScenarioState:
    placements = []
    for i in range(int(rng.integers(0, 6))):
        kind = str(rng.choice(FACILITY_KINDS + PARTICIPANT_KINDS))
        speed = float(rng.uniform(0, 25)) if kind in PARTICIPANT_KINDS else None
        x, y = rng.uniform(-120, 120, size=2)
        placements.append(Placement(f"e{i}", kind, float(x), float(y), speed))
    return ScenarioState(
        weather=random_weather(rng),
        placements=tuple(placements),
        map_spec=StaticMapSpec(),
        road_type=str(rng.choice(["urban", "highway"])),
    )


# -- arrival-time oracle ---------------------------------------------------

SCENARIO_IDS = ("S1", "S2", "S3", "S4")
STRAIGHT_ROUTES = (("P1", "P4"), ("P3", "P6"), ("P5", "P8"), ("P7", "P2"))


def arc_length_at(polyline: np.ndarray, point) -> float:
    """Arc length along ``polyline`` of its closest approach to ``point``."""
    p = np.asarray(point, dtype=float)
    best, best_s, s0 = np.inf, 0.0, 0.0
    for a, b in zip(polyline[:-1], polyline[1:]):
        seg = b - a
        L = float(np.hypot(*seg))
        u = min(max(float((p - a) @ seg) / (L * L), 0.0), 1.0) if L > 0 else 0.0
        d = float(np.hypot(*(a + u * seg - p)))
        if d < best:
            best, best_s = d, s0 + u * L
        s0 += L
    return best_s


def synchronized_arrival(crossroad, logical, rng):
    """Speeds, delay and offset that bring both vehicle centers to the
    scenario's conflict point at the same instant (t = distance / speed)."""
    from scenforge.sim import plan_path

    ego = plan_path(crossroad, logical.ego_start, logical.ego_end)
    bv = plan_path(crossroad, logical.bv_start, logical.bv_end)
    point = crossroad.conflicts[logical.conflict]
    s_ego = arc_length_at(ego.polyline, point)
    s_bv = arc_length_at(bv.polyline, point)
    while True:
        v_ego, v_bv = rng.uniform(3.0, 14.0, size=2)
        offset = rng.uniform(0.0, 20.0)
        t_ego = (s_ego - offset) / v_ego
        delay = t_ego - s_bv / v_bv
        if delay >= 0.0:
            return {"ego_speed": float(v_ego), "bv_speed": float(v_bv),
                    "bv_spawn_delay": float(delay), "ego_spawn_offset": float(offset)}, t_ego


def entropy_oracle(rows, directions):
    """Entropy weights computed one element at a time, no numpy."""
    m, n = len(rows), len(rows[0])
    cols = [[(-r[j] if directions[j] == "cost" else r[j]) for r in rows] for j in range(n)]
    div = []
    for col in cols:
        lo, hi = min(col), max(col)
        if hi == lo:
            div.append(0.0)
            continue
        norm = [(v - lo) / (hi - lo) for v in col]
        total = sum(norm)
        h = 0.0
        for v in norm:
            p = v / total
            if p > 0:
                h -= p * math.log(p)
        div.append(1.0 - h / math.log(m))
    s = sum(div)
    return [d / s for d in div]


def rounded_params(obj):
    """Emitted-parameter dataclasses with every float rounded as the XML writer prints it."""
    from dataclasses import fields

    from scenforge.openx import num

    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, float):
        return float(num(obj))
    if isinstance(obj, tuple):
        return tuple(rounded_params(x) for x in obj)
    return type(obj)(**{f.name: rounded_params(getattr(obj, f.name)) for f in fields(obj)})
