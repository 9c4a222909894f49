"""Shared optimizer plumbing: budgets, RNG streams, batch evaluation, reports."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from itertools import repeat
from typing import Any, Callable, Sequence

import numpy as np

from ..objective import Scored
from ..odd import ScenarioVector, SearchSpace

# stream index for population-level draws (selection, pairing)
POPULATION_STREAM = 2**31 - 1


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class Budget:
    iterations: int = 25
    population: int = 40

    def __post_init__(self) -> None:
        if self.iterations < 1 or self.population < 1:
            raise ValueError("iterations and population must be >= 1")

    @property
    def total(self) -> int:
        return self.iterations * self.population


def stream(seed: int, iteration: int, individual: int) -> np.random.Generator:
    """Independent generator for one (seed, iteration, individual) triple."""
    return np.random.default_rng([seed, iteration, individual])


def population_stream(seed: int, iteration: int) -> np.random.Generator:
    return stream(seed, iteration, POPULATION_STREAM)


@dataclass(frozen=True)
class Evaluation:
    vector: tuple[float, ...]
    value: float | tuple[float, ...]
    iteration: int
    individual: int
    info: dict = field(default_factory=dict, compare=False)
    wall_time: float = field(default=0.0, compare=False)


def _timed_call(objective, vector):
    start = time.perf_counter()
    result = objective(vector)
    return result, time.perf_counter() - start


def _unpack(result) -> tuple[Any, dict]:
    if isinstance(result, Scored):
        return result.value, dict(result.info)
    return result, {}


def _check_arity(value, arity) -> float | tuple[float, ...]:
    multi = isinstance(value, (tuple, list, np.ndarray))
    if arity == "single":
        if multi:
            raise ArityError("single-objective optimizer received a vector-valued objective")
        return float(value)
    if not multi:
        raise ArityError(f"multi-objective optimizer expected {arity} objectives, got a scalar")
    value = tuple(float(v) for v in value)
    if isinstance(arity, int) and len(value) != arity:
        raise ArityError(f"expected {arity} objectives, got {len(value)}")
    return value


def evaluate_batch(
    objective: Callable,
    space: SearchSpace,
    xs: np.ndarray,
    iteration: int,
    arity="single",
    executor=None,
) -> list[Evaluation]:
    """Evaluate a population; ``executor.map`` (threads or processes) keeps input order."""
    vectors = [ScenarioVector(space, tuple(float(v) for v in x)) for x in xs]
    if executor is None:
        results = [_timed_call(objective, v) for v in vectors]
    else:
        results = list(executor.map(_timed_call, repeat(objective), vectors))
    out = []
    for j, (vec, (result, elapsed)) in enumerate(zip(vectors, results)):
        value, info = _unpack(result)
        out.append(Evaluation(vec.values, _check_arity(value, arity), iteration, j, info, elapsed))
    return out


def _clean(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.floating,)):
        return _clean(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


@dataclass
class CampaignReport:
    algorithm: str
    seed: int
    budget: Budget
    names: tuple[str, ...]
    direction: str
    evaluations: list[Evaluation] = field(default_factory=list)
    best: list[float] = field(default_factory=list)
    best_index: int | None = None
    fronts: list[list[int]] = field(default_factory=list)
    hypervolume: list[float] = field(default_factory=list)
    spread: list[float | None] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def wall_time(self) -> float:
        return sum(e.wall_time for e in self.evaluations)

    @property
    def best_evaluation(self) -> Evaluation | None:
        return None if self.best_index is None else self.evaluations[self.best_index]

    def to_dict(self) -> dict:
        # wall-times stay out so reruns serialize byte-identically
        return _clean({
            "algorithm": self.algorithm,
            "seed": self.seed,
            "budget": {"iterations": self.budget.iterations, "population": self.budget.population},
            "direction": self.direction,
            "names": list(self.names),
            "config": self.config,
            "best_history": self.best,
            "best_index": self.best_index,
            "fronts": self.fronts,
            "hypervolume": self.hypervolume,
            "spread": self.spread,
            "extra": self.extra,
            "evaluations": [
                {
                    "iteration": e.iteration,
                    "individual": e.individual,
                    "vector": list(e.vector),
                    "value": e.value,
                    "info": e.info,
                }
                for e in self.evaluations
            ],
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        multi = self.evaluations and isinstance(self.evaluations[0].value, tuple)
        k = len(self.evaluations[0].value) if multi else 1
        info_keys = sorted({key for e in self.evaluations for key in e.info})
        value_cols = [f"objective_{i}" for i in range(k)] if multi else ["objective"]
        writer.writerow(["iteration", "individual", *self.names, *value_cols, *info_keys])
        for e in self.evaluations:
            values = list(e.value) if multi else [e.value]
            writer.writerow(
                [e.iteration, e.individual, *(repr(v) for v in e.vector), *(repr(v) for v in values)]
                + [e.info.get(key, "") for key in info_keys]
            )
        return buf.getvalue()


def track_best(report: CampaignReport, batch: Sequence[Evaluation], offset: int) -> None:
    """Update best-so-far bookkeeping (maximization) after appending ``batch``."""
    current = report.best[-1] if report.best else -math.inf
    for j, e in enumerate(batch):
        if report.best_index is None or e.value > current:
            current = e.value
            report.best_index = offset + j
    report.best.append(current)


def uniform_population(space: SearchSpace, seed: int, iteration: int, size: int) -> np.ndarray:
    lo, hi = space.lower, space.upper
    return np.array([stream(seed, iteration, j).uniform(lo, hi) for j in range(size)])
