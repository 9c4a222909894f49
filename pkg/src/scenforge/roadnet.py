"""Parametric four-arm crossroad layout.

The junction center is the origin. Arms are numbered counterclockwise from
the east one (arm 0 = east, 1 = north, 2 = west, 3 = south). Traffic is
right-hand: inbound vehicles use the lane on the left of the arm's outward
direction, outbound vehicles the lane on its right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ARM_NAMES = ("east", "north", "west", "south")
ARM_HEADINGS = (0.0, math.pi / 2, math.pi, -math.pi / 2)

CROSSWALK_WIDTH = 3.0
ROADSIDE_BAND = 2.0
SIGNAL_MARGIN = 3.0


class MapSpecError(ValueError):
    pass


@dataclass(frozen=True)
class StaticMapSpec:
    lane_width: float = 3.5
    lanes_per_approach: int = 2
    approach_length: float = 80.0
    junction_half_width: float = 10.0

    def __post_init__(self) -> None:
        if self.lane_width <= 0 or self.approach_length <= 0 or self.junction_half_width <= 0:
            raise MapSpecError("map dimensions must be positive")
        if self.lanes_per_approach < 1:
            raise MapSpecError("need at least one lane per approach")
        if self.junction_half_width < self.lanes_per_approach * self.lane_width:
            raise MapSpecError(
                "junction_half_width must be at least lanes_per_approach * lane_width"
            )

    @property
    def road_half_width(self) -> float:
        return self.lanes_per_approach * self.lane_width


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, closed on all sides."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, x: float, y: float, tol: float = 1e-9) -> bool:
        return (
            self.xmin - tol <= x <= self.xmax + tol
            and self.ymin - tol <= y <= self.ymax + tol
        )

    def project(self, x: float, y: float) -> tuple[float, float]:
        return (min(max(x, self.xmin), self.xmax), min(max(y, self.ymin), self.ymax))

    def distance(self, x: float, y: float) -> float:
        px, py = self.project(x, y)
        return math.hypot(x - px, y - py)


def arm_axis(arm: int) -> tuple[float, float]:
    h = ARM_HEADINGS[arm]
    return (round(math.cos(h)), round(math.sin(h)))


def _left_normal(u: tuple[float, float]) -> tuple[float, float]:
    return (-u[1], u[0])


def lane_point(spec: StaticMapSpec, arm: int, inbound: bool, dist: float) -> tuple[float, float]:
    """Center of the innermost lane on ``arm``, ``dist`` meters from the junction center."""
    u = arm_axis(arm)
    n = _left_normal(u)
    off = spec.lane_width / 2 if inbound else -spec.lane_width / 2
    return (u[0] * dist + n[0] * off, u[1] * dist + n[1] * off)


def junction_box(spec: StaticMapSpec) -> Rect:
    h = spec.junction_half_width
    return Rect(-h, -h, h, h)


def _arm_rect(spec: StaticMapSpec, arm: int, near: float, far: float, lat_lo: float, lat_hi: float) -> Rect:
    # rectangle spanning [near, far] along the arm and [lat_lo, lat_hi] across it
    u = arm_axis(arm)
    n = _left_normal(u)
    xs, ys = [], []
    for along in (near, far):
        for lat in (lat_lo, lat_hi):
            xs.append(u[0] * along + n[0] * lat)
            ys.append(u[1] * along + n[1] * lat)
    return Rect(min(xs), min(ys), max(xs), max(ys))


def road_rects(spec: StaticMapSpec) -> list[Rect]:
    h, w = spec.junction_half_width, spec.road_half_width
    end = h + spec.approach_length
    return [_arm_rect(spec, arm, h, end, -w, w) for arm in range(4)]


def drivable_rects(spec: StaticMapSpec) -> list[Rect]:
    return [junction_box(spec)] + road_rects(spec)


def crosswalk_rects(spec: StaticMapSpec) -> list[Rect]:
    h, w = spec.junction_half_width, spec.road_half_width
    return [_arm_rect(spec, arm, h, h + CROSSWALK_WIDTH, -w, w) for arm in range(4)]


def roadside_rects(spec: StaticMapSpec) -> list[Rect]:
    """Bands alongside each arm where signposts and street lights may stand."""
    h, w = spec.junction_half_width, spec.road_half_width
    end = h + spec.approach_length
    rects = []
    for arm in range(4):
        rects.append(_arm_rect(spec, arm, h, end, w, w + ROADSIDE_BAND))
        rects.append(_arm_rect(spec, arm, h, end, -w - ROADSIDE_BAND, -w))
    return rects


def signal_rects(spec: StaticMapSpec) -> list[Rect]:
    """Areas where a traffic light may be initialized: the junction plus a margin."""
    h = spec.junction_half_width + SIGNAL_MARGIN
    return [Rect(-h, -h, h, h)]
