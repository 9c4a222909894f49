"""Deterministic fixed-step kinematic simulator of the four-arm crossroad.

Two vehicles (ego and one background vehicle, BV) are bound to planned paths
through the junction. Each tracks its target speed with a proportional
controller whose output is clamped to the acceleration limit; there is no
lateral dynamics and no randomness.

Waypoints: every arm has an entry waypoint on its inbound lane and an exit
waypoint on its outbound lane, both ``waypoint_distance`` meters beyond the
stop line. Labels run counterclockwise from the east entry::

    P1 east entry   P2 north exit   P3 north entry  P4 west exit
    P5 west entry   P6 south exit   P7 south entry  P8 east exit
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .geometry import (
    box_corners,
    box_gap,
    first_polyline_intersection,
    polyline_lengths,
)
from .odd import CONFLICTS, WAYPOINTS, LogicalScenario, catalog_scenario
from .roadnet import StaticMapSpec, arm_axis, junction_box, lane_point

ARC_SEGMENTS = 32


class IllegalMovementError(ValueError):
    pass


@dataclass(frozen=True)
class SignalPlan:
    """Fixed-cycle light; east-west starts green, north-south follows."""

    green_s: float = 20.0
    yellow_s: float = 3.0
    red_s: float = 23.0

    @property
    def cycle(self) -> float:
        return self.green_s + self.yellow_s + self.red_s

    def _phase(self, tau: float) -> str:
        tau = tau % self.cycle
        if tau < self.green_s:
            return "green"
        if tau < self.green_s + self.yellow_s:
            return "yellow"
        return "red"

    def phase(self, arm: int, t: float) -> str:
        if arm in (0, 2):
            return self._phase(t)
        return self._phase(t - (self.green_s + self.yellow_s))

    def label(self, t: float) -> str:
        return f"EW:{self.phase(0, t)}|NS:{self.phase(1, t)}"


@dataclass(frozen=True)
class _Line:
    start: tuple[float, float]
    heading: float
    length: float

    def at(self, u: np.ndarray):
        x = self.start[0] + u * math.cos(self.heading)
        y = self.start[1] + u * math.sin(self.heading)
        return x, y, np.full_like(u, self.heading)


@dataclass(frozen=True)
class _Arc:
    center: tuple[float, float]
    radius: float
    theta0: float
    # +1 counterclockwise (left turn), -1 clockwise (right turn)
    direction: int

    @property
    def length(self) -> float:
        return self.radius * math.pi / 2

    def at(self, u: np.ndarray):
        theta = self.theta0 + self.direction * u / self.radius
        x = self.center[0] + self.radius * np.cos(theta)
        y = self.center[1] + self.radius * np.sin(theta)
        return x, y, theta + self.direction * math.pi / 2


@dataclass(frozen=True)
class PathPlan:
    start: str
    end: str
    pieces: tuple
    polyline: np.ndarray = field(repr=False, compare=False)
    length: float
    approach_arm: int
    stop_s: float

    @property
    def turns(self) -> bool:
        return any(isinstance(p, _Arc) for p in self.pieces)

    def pose(self, s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Position and heading at arc length ``s``; extrapolated linearly past the ends."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        x = np.empty_like(s)
        y = np.empty_like(s)
        h = np.empty_like(s)
        offset = 0.0
        first, last = self.pieces[0], self.pieces[-1]
        done = np.zeros(s.shape, dtype=bool)
        before = s < 0
        if before.any():
            x[before], y[before], h[before] = first.at(s[before])
            done |= before
        for piece in self.pieces:
            upper = offset + piece.length
            sel = ~done & (s <= upper) if piece is not last else ~done
            if sel.any():
                u = s[sel] - offset
                if piece is last and isinstance(piece, _Arc):
                    # beyond the end of a final arc: continue straight
                    px, py, ph = piece.at(np.minimum(u, piece.length))
                    extra = np.maximum(u - piece.length, 0.0)
                    px = px + extra * np.cos(ph)
                    py = py + extra * np.sin(ph)
                    x[sel], y[sel], h[sel] = px, py, ph
                else:
                    x[sel], y[sel], h[sel] = piece.at(u)
                done |= sel
            offset = upper
        return x, y, h


@dataclass(frozen=True)
class CrossroadMap:
    geometry: StaticMapSpec
    waypoints: dict
    conflicts: dict
    stop_lines: dict
    signal: SignalPlan | None = None
    waypoint_distance: float = 40.0


def _waypoint_arm(label: str) -> tuple[int, bool]:
    """Arm index and whether the waypoint is an entry (inbound)."""
    k = WAYPOINTS.index(label)
    if k % 2 == 0:
        return k // 2, True
    return (k // 2 + 1) % 4, False


def _waypoint_xy(spec: StaticMapSpec, label: str, distance: float) -> tuple[float, float]:
    arm, inbound = _waypoint_arm(label)
    return lane_point(spec, arm, inbound, spec.junction_half_width + distance)


def _turn_kind(entry_arm: int, exit_arm: int) -> str:
    diff = (exit_arm - entry_arm) % 4
    return {0: "uturn", 1: "right", 2: "straight", 3: "left"}[diff]


def _plan(spec: StaticMapSpec, start: str, end: str, distance: float) -> PathPlan:
    if start not in WAYPOINTS or end not in WAYPOINTS:
        raise IllegalMovementError(f"unknown waypoint in {start}->{end}")
    a_arm, a_in = _waypoint_arm(start)
    b_arm, b_in = _waypoint_arm(end)
    if start == end or not a_in or b_in:
        raise IllegalMovementError(f"{start}->{end}: paths run from an entry to an exit waypoint")
    kind = _turn_kind(a_arm, b_arm)
    if kind == "uturn":
        raise IllegalMovementError(f"{start}->{end}: U-turns are not allowed")

    h = spec.junction_half_width
    p0 = lane_point(spec, a_arm, True, h + distance)
    p1 = lane_point(spec, a_arm, True, h)
    p2 = lane_point(spec, b_arm, False, h)
    p3 = lane_point(spec, b_arm, False, h + distance)
    u_in = arm_axis(a_arm)
    heading_in = math.atan2(-u_in[1], -u_in[0])
    u_out = arm_axis(b_arm)
    heading_out = math.atan2(u_out[1], u_out[0])

    pieces: list = [_Line(p0, heading_in, distance)]
    if kind == "straight":
        pieces.append(_Line(p1, heading_in, math.dist(p1, p2)))
    else:
        direction = 1 if kind == "left" else -1
        n_in = np.array([-math.sin(heading_in), math.cos(heading_in)]) * direction
        n_out = np.array([-math.sin(heading_out), math.cos(heading_out)]) * direction
        # S + R n_in = E + R n_out
        delta = np.subtract(p2, p1)
        dn = n_in - n_out
        radius = float(delta @ dn / (dn @ dn))
        center = np.asarray(p1) + radius * n_in
        theta0 = math.atan2(p1[1] - center[1], p1[0] - center[0])
        pieces.append(_Arc((float(center[0]), float(center[1])), radius, theta0, direction))
    pieces.append(_Line(p2, heading_out, distance))

    length = sum(p.length for p in pieces)
    samples = [np.array([p0])]
    offset = 0.0
    for piece in pieces:
        n = ARC_SEGMENTS if isinstance(piece, _Arc) else 1
        u = np.linspace(0.0, piece.length, n + 1)[1:]
        x, y, _ = piece.at(u)
        samples.append(np.stack([x, y], axis=1))
        offset += piece.length
    polyline = np.concatenate(samples)
    # snap junction-boundary vertices to their exact lane points
    polyline[1] = p1
    polyline[-2] = p2
    polyline[-1] = p3
    return PathPlan(start, end, tuple(pieces), polyline, length, a_arm, distance)


def entry_label(arm: int) -> str:
    return WAYPOINTS[2 * arm]


def exit_label(arm: int) -> str:
    return WAYPOINTS[(2 * arm - 1) % 8]


def junction_piece(spec: StaticMapSpec, entry_arm: int, exit_arm: int):
    """The part of a movement inside the junction box: a ``_Line`` or an ``_Arc``."""
    return _plan(spec, entry_label(entry_arm), exit_label(exit_arm), 1.0).pieces[1]


def plan_path(crossroad: CrossroadMap, start: str, end: str) -> PathPlan:
    return _plan(crossroad.geometry, start, end, crossroad.waypoint_distance)


def conflict_point(crossroad: CrossroadMap | None, a: PathPlan, b: PathPlan):
    """First crossing of ``b`` along ``a`` as an ``(x, y)`` tuple, or ``None``."""
    hit = first_polyline_intersection(a.polyline, b.polyline)
    if hit is None:
        return None
    return (float(hit[0]), float(hit[1]))


def build_crossroad(
    spec: StaticMapSpec | None = None,
    signal: SignalPlan | None = None,
    waypoint_distance: float = 40.0,
) -> CrossroadMap:
    spec = spec or StaticMapSpec()
    if waypoint_distance <= 0 or waypoint_distance > spec.approach_length:
        raise ValueError("waypoint_distance must lie within the approach length")
    waypoints = {label: _waypoint_xy(spec, label, waypoint_distance) for label in WAYPOINTS}
    conflicts = {}
    for sid in ("S1", "S2", "S3", "S4"):
        logical = catalog_scenario(sid)
        ego = _plan(spec, logical.ego_start, logical.ego_end, waypoint_distance)
        bv = _plan(spec, logical.bv_start, logical.bv_end, waypoint_distance)
        point = conflict_point(None, ego, bv)
        if point is None:
            raise ValueError(f"{sid}: ego and BV paths do not cross")
        conflicts[logical.conflict] = point
    box = junction_box(spec)
    for label, (x, y) in conflicts.items():
        if not box.contains(x, y, tol=1e-6):
            raise ValueError(f"conflict {label} at ({x:.3f}, {y:.3f}) lies outside the junction")
    stop_lines = {arm: lane_point(spec, arm, True, spec.junction_half_width) for arm in range(4)}
    return CrossroadMap(spec, waypoints, dict(sorted(conflicts.items())), stop_lines, signal, waypoint_distance)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.05
    duration: float = 30.0
    vehicle_length: float = 4.5
    vehicle_width: float = 2.0
    accel_limit: float = 3.0
    speed_gain: float = 2.0
    brake_decel_threshold: float = 4.0

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.duration <= self.dt:
            raise ValueError("need dt > 0 and duration > dt")
        if self.vehicle_length <= 0 or self.vehicle_width <= 0 or self.accel_limit <= 0:
            raise ValueError("vehicle dimensions and accel_limit must be positive")

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "SimConfig":
        return cls(**(data or {}))


@dataclass(frozen=True)
class VehicleState:
    s: float
    x: float
    y: float
    heading: float
    speed: float
    accel: float


@dataclass(frozen=True)
class Track:
    """Per-sample arrays for one vehicle; ``active`` is false before it spawns."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray
    accel: np.ndarray
    active: np.ndarray
    lateral_offset: np.ndarray

    def state(self, k: int) -> VehicleState | None:
        if not self.active[k]:
            return None
        return VehicleState(
            float(self.s[k]), float(self.x[k]), float(self.y[k]),
            float(self.heading[k]), float(self.speed[k]), float(self.accel[k]),
        )


@dataclass(frozen=True)
class SimulationTrace:
    t: np.ndarray
    ego: Track
    bv: Track
    signal_phase: tuple[str, ...]
    events: tuple[tuple[float, str], ...]
    gap: np.ndarray
    vehicle_length: float
    vehicle_width: float

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self):
        for k in range(len(self.t)):
            yield float(self.t[k]), self.ego.state(k), self.bv.state(k), self.signal_phase[k]

    def event_count(self, kind: str) -> int:
        return sum(1 for _, e in self.events if e == kind)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = ("x", "y", "heading", "speed", "accel")
        writer.writerow(
            ["t"] + [f"ego_{c}" for c in cols] + [f"bv_{c}" for c in cols] + ["signal"]
        )
        for k in range(len(self.t)):
            row = [_fmt(self.t[k])]
            for track in (self.ego, self.bv):
                if track.active[k]:
                    row += [_fmt(getattr(track, c)[k]) for c in cols]
                else:
                    row += [""] * len(cols)
            row.append(self.signal_phase[k])
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> str:
        def track(tr: Track, k: int):
            if not tr.active[k]:
                return None
            return {c: float(getattr(tr, c)[k]) for c in ("s", "x", "y", "heading", "speed", "accel")}

        doc = {
            "samples": [
                {"t": float(self.t[k]), "ego": track(self.ego, k), "bv": track(self.bv, k),
                 "signal": self.signal_phase[k]}
                for k in range(len(self.t))
            ],
            "events": [{"t": t, "kind": kind} for t, kind in self.events],
        }
        return json.dumps(doc, sort_keys=True)


def _fmt(v: float) -> str:
    return repr(float(v))


def _drive(path: PathPlan, target: float, s0: float, spawn: float, t: np.ndarray, cfg: SimConfig) -> Track:
    n = len(t)
    s = np.zeros(n)
    v = np.zeros(n)
    a = np.zeros(n)
    active = t >= spawn - 1e-12
    idx = np.flatnonzero(active)
    if idx.size:
        k0 = idx[0]
        # spawn exactly at ``spawn`` seconds, already at target speed
        s[k0] = s0 + target * (t[k0] - spawn)
        v[k0] = target
        cur_s, cur_v = s[k0], target
        lim, gain, dt = cfg.accel_limit, cfg.speed_gain, cfg.dt
        for k in range(k0 + 1, n):
            acc = min(max(gain * (target - cur_v), -lim), lim)
            cur_v = max(cur_v + acc * dt, 0.0)
            cur_s += cur_v * dt
            s[k], v[k], a[k] = cur_s, cur_v, acc
    x, y, h = path.pose(s)
    return Track(s, x, y, h, v, a, active, np.zeros(n))


def _rising_edges(mask: np.ndarray) -> np.ndarray:
    prev = np.concatenate([[False], mask[:-1]])
    return np.flatnonzero(mask & ~prev)


def simulate(
    crossroad: CrossroadMap,
    logical: LogicalScenario,
    overrides: Mapping[str, float] | None = None,
    cfg: SimConfig | None = None,
) -> SimulationTrace:
    """Run one concrete scenario.

    ``overrides`` may set ``ego_speed``, ``bv_speed``, ``bv_spawn_delay`` and
    ``ego_spawn_offset``; other keys are ignored. The ego spawns at t = 0,
    ``ego_spawn_offset`` meters past its entry waypoint toward the junction.
    """
    cfg = cfg or SimConfig()
    ov = dict(overrides or {})
    ego_speed = float(ov.get("ego_speed", logical.ego_target_speed))
    bv_speed = float(ov.get("bv_speed", logical.bv_speed))
    delay = float(ov.get("bv_spawn_delay", 0.0))
    offset = float(ov.get("ego_spawn_offset", 0.0))
    if ego_speed < 0 or bv_speed < 0 or delay < 0 or offset < 0:
        raise ValueError("speeds, delay and offset must be non-negative")

    ego_path = plan_path(crossroad, logical.ego_start, logical.ego_end)
    bv_path = plan_path(crossroad, logical.bv_start, logical.bv_end)
    return simulate_paths(ego_path, bv_path, ego_speed, bv_speed, delay, offset, cfg, crossroad.signal)


def simulate_paths(
    ego_path: PathPlan,
    bv_path: PathPlan,
    ego_speed: float,
    bv_speed: float,
    bv_spawn_delay: float = 0.0,
    ego_spawn_offset: float = 0.0,
    cfg: SimConfig | None = None,
    signal: SignalPlan | None = None,
) -> SimulationTrace:
    cfg = cfg or SimConfig()
    t = np.arange(cfg.steps + 1) * cfg.dt
    ego = _drive(ego_path, ego_speed, ego_spawn_offset, 0.0, t, cfg)
    bv = _drive(bv_path, bv_speed, 0.0, bv_spawn_delay, t, cfg)

    both = ego.active & bv.active
    L, W = cfg.vehicle_length, cfg.vehicle_width
    ca = box_corners(np.stack([ego.x, ego.y], axis=1), ego.heading, L, W)
    cb = box_corners(np.stack([bv.x, bv.y], axis=1), bv.heading, L, W)
    gap = np.where(both, box_gap(ca, cb), np.inf)

    events: list[tuple[float, str]] = []
    for k in _rising_edges(both & (gap <= 0.0)):
        events.append((float(t[k]), "collision"))
    for track in (ego, bv):
        for k in _rising_edges(track.active & (track.accel < -cfg.brake_decel_threshold)):
            events.append((float(t[k]), "sudden_brake"))
    if signal is not None:
        for track, path in ((ego, ego_path), (bv, bv_path)):
            front = track.s + L / 2
            crossed = (front >= path.stop_s) & track.active
            for k in _rising_edges(crossed):
                if k > 0 and track.active[k - 1] and signal.phase(path.approach_arm, float(t[k])) == "red":
                    events.append((float(t[k]), "red_light_crossing"))
        phases = tuple(signal.label(float(tk)) for tk in t)
    else:
        phases = ("",) * len(t)
    events.sort()
    return SimulationTrace(t, ego, bv, phases, tuple(events), gap, L, W)
