"""Criticality metrics, metric weighting, fitness and critical-scenario classification."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Mapping, Sequence

import numpy as np

from .sim import SimulationTrace

METRIC_NAMES = (
    "r_red",
    "n_collision",
    "ttc_min",
    "d_min",
    "v_d",
    "l_offset",
    "a_change",
    "n_brake",
    "iou",
    "e_position",
    "map_score",
)

MS_TO_KMH = 3.6


@dataclass(frozen=True)
class MetricVector:
    r_red: bool
    n_collision: int
    ttc_min: float
    d_min: float
    v_d: float
    l_offset: float
    a_change: float
    n_brake: int
    iou: float | None = None
    e_position: float | None = None
    map_score: float | None = None

    def __getitem__(self, name: str) -> float:
        if name not in METRIC_NAMES:
            raise KeyError(name)
        value = getattr(self, name)
        if value is None:
            raise KeyError(f"metric {name!r} not available for this scenario")
        return float(value)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricConfig:
    # "box_gap" measures between bounding boxes, "center" between vehicle centers
    distance_mode: str = "box_gap"

    def __post_init__(self) -> None:
        if self.distance_mode not in ("box_gap", "center"):
            raise ValueError(f"unknown distance_mode {self.distance_mode!r}")


def compute_metrics(trace: SimulationTrace, cfg: MetricConfig | None = None) -> MetricVector:
    """Reduce a trace to its criticality metrics.

    Distance-based metrics use only samples where both vehicles exist. When
    the background vehicle never appears, ``d_min`` is infinite and ``v_d``
    is 0.
    """
    cfg = cfg or MetricConfig()
    if len(trace) == 0:
        raise ValueError("empty trace")
    ego, bv = trace.ego, trace.bv
    both = ego.active & bv.active

    dx = bv.x - ego.x
    dy = bv.y - ego.y
    center = np.hypot(dx, dy)
    dist = trace.gap if cfg.distance_mode == "box_gap" else np.where(both, center, np.inf)

    if both.any():
        k = int(np.argmin(np.where(both, dist, np.inf)))
        d_min = float(dist[k])
        v_d = float(ego.speed[k])
    else:
        d_min, v_d = math.inf, 0.0

    # closing speed: rate at which the center distance shrinks
    dvx = bv.speed * np.cos(bv.heading) - ego.speed * np.cos(ego.heading)
    dvy = bv.speed * np.sin(bv.heading) - ego.speed * np.sin(ego.heading)
    with np.errstate(divide="ignore", invalid="ignore"):
        closing = -(dx * dvx + dy * dvy) / center
        usable = both & (dist > 0) & (closing > 0) & np.isfinite(closing)
        ttc = np.where(usable, dist / np.where(usable, closing, 1.0), np.inf)
    ttc_min = float(ttc.min()) if len(ttc) else math.inf

    a_change = 0.0
    for track in (ego,):
        act = track.active
        pair = act[1:] & act[:-1]
        if pair.any():
            a_change = max(a_change, float(np.abs(np.diff(track.accel))[pair].max()))
    l_offset = float(np.abs(ego.lateral_offset[ego.active]).max()) if ego.active.any() else 0.0

    return MetricVector(
        r_red=trace.event_count("red_light_crossing") > 0,
        n_collision=trace.event_count("collision"),
        ttc_min=ttc_min,
        d_min=d_min,
        v_d=v_d,
        l_offset=l_offset,
        a_change=a_change,
        n_brake=trace.event_count("sudden_brake"),
    )


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class MetricWeights:
    """Per-metric weights and their direction (``benefit`` raises criticality, ``cost`` lowers it)."""

    weights: Mapping[str, float]
    directions: Mapping[str, str]

    def __post_init__(self) -> None:
        if set(self.weights) != set(self.directions):
            raise WeightError("weights and directions must name the same metrics")
        for name, d in self.directions.items():
            if d not in ("benefit", "cost"):
                raise WeightError(f"{name}: direction must be 'benefit' or 'cost', got {d!r}")
        for name, w in self.weights.items():
            if w < 0:
                raise WeightError(f"{name}: negative weight {w}")
        total = sum(self.weights.values())
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise WeightError(f"weights sum to {total}, expected 1")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.weights)

    def vector(self, names: Sequence[str] | None = None) -> np.ndarray:
        return np.array([self.weights[n] for n in (names or self.names)])

    def to_dict(self) -> dict:
        return {"weights": dict(self.weights), "directions": dict(self.directions)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricWeights":
        return cls(dict(data["weights"]), dict(data["directions"]))


# entropy-derived weights for (d_min, v_d) reported for the crossroad study
DEFAULT_WEIGHTS = MetricWeights(
    {"d_min": 0.8297, "v_d": 0.1703}, {"d_min": "cost", "v_d": "benefit"}
)


def default_weights(sign: str = "signed") -> MetricWeights:
    """Fitness weights; ``signed`` subtracts d_min, ``unsigned`` adds both terms."""
    if sign == "signed":
        return DEFAULT_WEIGHTS
    if sign == "unsigned":
        return MetricWeights(dict(DEFAULT_WEIGHTS.weights), {"d_min": "benefit", "v_d": "benefit"})
    raise ValueError(f"unknown fitness sign {sign!r}")


def fitness(mv: MetricVector | Mapping[str, float], w: MetricWeights = DEFAULT_WEIGHTS) -> float:
    """Weighted sum of metrics; cost metrics enter negatively. Larger is more critical."""
    total = 0.0
    for name, weight in w.weights.items():
        try:
            x = mv[name]
        except KeyError:
            raise WeightError(f"metric {name!r} missing from metric vector") from None
        sign = -1.0 if w.directions[name] == "cost" else 1.0
        total += sign * weight * float(x)
    return total


def entropy_weights(
    samples,
    directions: Sequence[str],
    names: Sequence[str] | None = None,
) -> MetricWeights:
    """Objective weights by the entropy method.

    Cost columns are negated, every column is min-max normalized, each
    column is turned into a distribution over the samples, and a column's
    weight is proportional to one minus its normalized entropy. Constant
    columns carry no information: entropy 1, weight 0.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise WeightError("samples must be a 2-D matrix")
    m, n = x.shape
    if m < 2 or n < 1:
        raise WeightError("need at least 2 samples and 1 metric")
    if len(directions) != n:
        raise WeightError(f"{len(directions)} directions for {n} metrics")
    if not np.isfinite(x).all():
        raise WeightError("samples must be finite")
    names = list(names) if names is not None else [f"m{j}" for j in range(n)]
    if len(names) != n:
        raise WeightError(f"{len(names)} names for {n} metrics")

    sign = np.array([-1.0 if d == "cost" else 1.0 for d in directions])
    xp = x * sign
    lo, hi = xp.min(axis=0), xp.max(axis=0)
    span = hi - lo
    informative = span > 0
    if not informative.any():
        raise WeightError("every metric column is constant; weights are undefined")

    entropy = np.ones(n)
    r = (xp[:, informative] - lo[informative]) / span[informative]
    p = r / r.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    entropy[informative] = -plogp.sum(axis=0) / math.log(m)

    d = 1.0 - entropy
    w = d / d.sum()
    return MetricWeights(
        dict(zip(names, w.tolist())),
        dict(zip(names, ["cost" if s < 0 else "benefit" for s in sign])),
    )


def combine_weights(
    subjective: MetricWeights,
    objective: MetricWeights,
    ratio: tuple[float, float] = (0.4, 0.6),
) -> MetricWeights:
    """Convex blend of expert (subjective) and data-driven (objective) weights."""
    if set(subjective.names) != set(objective.names):
        raise WeightError("subjective and objective weights cover different metrics")
    a, b = ratio
    if a < 0 or b < 0 or not math.isclose(a + b, 1.0, abs_tol=1e-12):
        raise WeightError(f"ratio {ratio} must be non-negative and sum to 1")
    blended = {k: a * subjective.weights[k] + b * objective.weights[k] for k in subjective.names}
    total = sum(blended.values())
    return MetricWeights({k: v / total for k, v in blended.items()}, dict(subjective.directions))


CRITICAL_RULES = ("collision_or_near_miss", "collision_only", "near_miss_only", "any_threshold")


@dataclass(frozen=True)
class Thresholds:
    collision_min: int = 0
    d_min_max: float = 2.0
    v_d_min: float = 1.0
    rule: str = "collision_or_near_miss"

    def __post_init__(self) -> None:
        if self.rule not in CRITICAL_RULES:
            raise ValueError(f"unknown critical rule {self.rule!r}")
        if not all(math.isfinite(v) for v in (self.collision_min, self.d_min_max, self.v_d_min)):
            raise ValueError("thresholds must be finite")

    @classmethod
    def from_dict(cls, data: Mapping | None) -> "Thresholds":
        if not data:
            return cls()
        data = dict(data)
        if "critical_rule" in data:
            data["rule"] = data.pop("critical_rule")
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def classify_critical(mv: MetricVector | Mapping, th: Thresholds | None = None) -> bool:
    th = th or Thresholds()
    collided = mv["n_collision"] > th.collision_min
    near = mv["d_min"] < th.d_min_max and mv["v_d"] >= th.v_d_min
    if th.rule == "collision_or_near_miss":
        return bool(collided or near)
    if th.rule == "collision_only":
        return bool(collided)
    if th.rule == "near_miss_only":
        return bool(near)
    return bool(collided or mv["d_min"] < th.d_min_max or mv["v_d"] >= th.v_d_min)


def to_report_speed(v: float, unit: str = "m/s") -> float:
    if unit == "m/s":
        return v
    if unit == "km/h":
        return v * MS_TO_KMH
    raise ValueError(f"unknown speed unit {unit!r}")
