"""Scenario objectives: search vector in, criticality score out."""

from __future__ import annotations

from dataclasses import dataclass, field

from .constraints import ConstraintThresholds, repair
from .criticality import (
    DEFAULT_WEIGHTS,
    MetricConfig,
    MetricWeights,
    Thresholds,
    classify_critical,
    compute_metrics,
    fitness,
)
from .odd import ScenarioVector, SearchSpace, catalog_scenario, clamp_to_bounds, decode
from .ontology import scenario_state
from .roadnet import StaticMapSpec
from .sim import SimConfig, build_crossroad, simulate

MODES = ("fitness", "pareto")


@dataclass(frozen=True)
class Scored:
    """An objective value together with the metrics that produced it."""

    value: float | tuple[float, ...]
    info: dict = field(default_factory=dict, compare=False)


@dataclass
class ScenarioObjective:
    """Simulate a concrete scenario of ``scenario_id`` and score it.

    ``fitness`` mode returns the weighted fitness (maximize). ``pareto`` mode
    returns ``(d_min, -v_d)`` (both minimized). Weather in the vector is
    repaired against the constraint rules before simulation, and a speed
    capped by a rule replaces the sampled one.
    """

    scenario_id: str
    space: SearchSpace
    mode: str = "fitness"
    sim: SimConfig = field(default_factory=SimConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    weights: MetricWeights = DEFAULT_WEIGHTS
    thresholds: Thresholds = field(default_factory=Thresholds)
    constraints: ConstraintThresholds = field(default_factory=ConstraintThresholds)
    map_spec: StaticMapSpec = field(default_factory=StaticMapSpec)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown objective mode {self.mode!r}")
        self.logical = catalog_scenario(self.scenario_id)
        self._crossroad = None

    @property
    def arity(self):
        return "single" if self.mode == "fitness" else 2

    @property
    def crossroad(self):
        if self._crossroad is None:
            self._crossroad = build_crossroad(self.map_spec)
        return self._crossroad

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_crossroad"] = None
        return state

    def concrete(self, vector: ScenarioVector | list) -> dict[str, float]:
        """Clamped and constraint-repaired parameters actually simulated."""
        named = decode(clamp_to_bounds(self.space, vector))
        state = repair(scenario_state(self.logical, named, self.crossroad), thresholds=self.constraints)
        named.update(state.weather.as_dict())
        named["ego_speed"] = state.placement("ego").speed
        named["bv_speed"] = state.placement("bv").speed
        return named

    def __call__(self, vector: ScenarioVector | list) -> Scored:
        named = self.concrete(vector)
        trace = simulate(self.crossroad, self.logical, named, self.sim)
        mv = compute_metrics(trace, self.metric)
        info = {
            "d_min": mv.d_min,
            "v_d": mv.v_d,
            "ttc_min": mv.ttc_min,
            "n_collision": mv.n_collision,
            "critical": classify_critical(mv, self.thresholds),
        }
        if self.mode == "fitness":
            return Scored(fitness(mv, self.weights), info)
        return Scored((mv.d_min, -mv.v_d), info)
