"""Scenario generation and search for a four-arm crossroad.

The pipeline runs from a five-layer parameter space, through constraint
repair and an ontology instance, to OpenDRIVE/OpenSCENARIO files. A
kinematic simulator and criticality metrics drive black-box searches for
critical scenarios.
"""

from .constraints import (
    ConstraintThresholds,
    ScenarioState,
    WeatherState,
    azimuth_from_altitude,
    fog_derivatives,
    friction_from_wetness,
    repair,
    validate,
)
from .criticality import (
    DEFAULT_WEIGHTS,
    MetricVector,
    MetricWeights,
    Thresholds,
    classify_critical,
    combine_weights,
    compute_metrics,
    entropy_weights,
    fitness,
)
from .objective import ScenarioObjective
from .odd import (
    LogicalScenario,
    ParameterSpec,
    ScenarioVector,
    SearchSpace,
    catalog_scenario,
    default_search_space,
    define_search_space,
)
from .ontology import build_template, instantiate
from .openx import EmitterOptions, emit_xodr, emit_xosc, parse_back
from .sim import SimConfig, build_crossroad, simulate

__version__ = "0.1.0"
