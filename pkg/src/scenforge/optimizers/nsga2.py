"""NSGA-II for minimization of vector objectives."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..pareto import crowding_distance, hypervolume, non_dominated, non_dominated_sort, spread
from .base import (
    Budget,
    CampaignReport,
    evaluate_batch,
    population_stream,
    stream,
    uniform_population,
)
from .operators import polynomial_mutation, sbx

__all__ = ["Nsga2Config", "nsga2", "non_dominated_sort", "crowding_distance", "normalized_hypervolume"]


@dataclass(frozen=True)
class Nsga2Config:
    crossover_prob: float = 0.7
    mutation_prob: float = 0.05
    eta_crossover: float = 15.0
    eta_mutation: float = 20.0
    hv_reference: tuple[float, ...] = (1.1, 1.1)
    # (ideal, nadir) used to normalize objectives for HV; taken from generation 0 when unset
    objective_bounds: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __post_init__(self) -> None:
        if not (0 <= self.crossover_prob <= 1 and 0 <= self.mutation_prob <= 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.eta_crossover < 0 or self.eta_mutation < 0:
            raise ValueError("distribution indices must be non-negative")


def _bounds_from(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    finite = values[np.all(np.isfinite(values), axis=1)]
    if len(finite) == 0:
        return np.zeros(values.shape[1]), np.ones(values.shape[1])
    return finite.min(axis=0), finite.max(axis=0)


def normalize(values, ideal, nadir) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    ideal = np.asarray(ideal, dtype=float)
    span = np.asarray(nadir, dtype=float) - ideal
    span = np.where(span > 0, span, 1.0)
    return (values - ideal) / span


def normalized_hypervolume(values, ideal, nadir, reference) -> float:
    """HV of the non-dominated subset after normalization; points beyond the reference add nothing."""
    f = normalize(values, ideal, nadir)
    if f.ndim != 2 or len(f) == 0:
        return 0.0
    ref = np.asarray(reference, dtype=float)
    inside = f[np.all(f <= ref, axis=1)]
    if len(inside) == 0:
        return 0.0
    return hypervolume(inside[non_dominated(inside)], ref)


def _rank_and_crowding(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[list[int]]]:
    fronts = non_dominated_sort(values)
    rank = np.empty(len(values), dtype=int)
    crowd = np.empty(len(values))
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance(values[front])
    return rank, crowd, fronts


def _better(i: int, j: int, rank: np.ndarray, crowd: np.ndarray) -> int:
    if rank[i] != rank[j]:
        return i if rank[i] < rank[j] else j
    if crowd[i] != crowd[j]:
        return i if crowd[i] > crowd[j] else j
    return min(i, j)


def nsga2(space, objectives, budget: Budget | None = None, cfg: Nsga2Config | None = None, seed: int = 0, *,
          executor=None) -> CampaignReport:
    """Generation 0 is the random initial population; each later generation
    evaluates ``population`` offspring. ``report.fronts[g]`` holds evaluation
    indices of the non-dominated members of generation ``g``'s population,
    and ``report.hypervolume[g]`` the normalized HV of every point evaluated
    up to and including generation ``g``. The final population's evaluation
    indices are kept in ``report.extra["population"]``."""
    budget = budget or Budget()
    cfg = cfg or Nsga2Config()
    arity = getattr(objectives, "arity", "multi")
    if arity == "single":
        raise ValueError("nsga2 needs a multi-objective contract")
    lo, hi = space.lower, space.upper
    n = budget.population
    config = asdict(cfg)
    report = CampaignReport("nsga2", seed, budget, space.names, "min", config=config)

    x = uniform_population(space, seed, 0, n)
    batch = evaluate_batch(objectives, space, x, 0, arity, executor)
    report.evaluations.extend(batch)
    f = np.array([e.value for e in batch])
    idx = np.arange(n)
    if cfg.objective_bounds is None:
        ideal, nadir = _bounds_from(f)
    else:
        ideal, nadir = (np.asarray(b, dtype=float) for b in cfg.objective_bounds)
    report.extra = {"ideal": ideal.tolist(), "nadir": nadir.tolist()}
    rank, crowd, fronts = _rank_and_crowding(f)

    def record() -> None:
        front = fronts[0]
        report.fronts.append([int(idx[i]) for i in front])
        archive = np.array([e.value for e in report.evaluations])
        report.hypervolume.append(normalized_hypervolume(archive, ideal, nadir, cfg.hv_reference))
        pts = normalize(f[front], ideal, nadir)
        pts = pts[np.all(np.isfinite(pts), axis=1)]
        if pts.shape[1] == 2 and len(pts) >= 3:
            report.spread.append(spread(pts))
        else:
            report.spread.append(None)

    record()
    for it in range(1, budget.iterations):
        sel = population_stream(seed, it)
        picks = sel.integers(0, n, size=(n + n % 2, 2))
        parents = [_better(int(a), int(b), rank, crowd) for a, b in picks]
        children = np.empty((n, space.dim))
        for j in range(0, n, 2):
            rng = stream(seed, it, j)
            a, b = x[parents[j]], x[parents[j + 1]]
            if rng.random() < cfg.crossover_prob:
                a, b = sbx(a, b, lo, hi, cfg.eta_crossover, rng)
            children[j] = polynomial_mutation(a, lo, hi, cfg.eta_mutation, cfg.mutation_prob, rng)
            if j + 1 < n:
                children[j + 1] = polynomial_mutation(b, lo, hi, cfg.eta_mutation, cfg.mutation_prob,
                                                      stream(seed, it, j + 1))
        batch = evaluate_batch(objectives, space, children, it, arity, executor)
        offset = len(report.evaluations)
        report.evaluations.extend(batch)
        fc = np.array([e.value for e in batch])

        merged_x = np.vstack([x, children])
        merged_f = np.vstack([f, fc])
        merged_idx = np.concatenate([idx, offset + np.arange(n)])
        keep: list[int] = []
        for front in non_dominated_sort(merged_f):
            if len(keep) + len(front) <= n:
                keep.extend(front)
                continue
            cd = crowding_distance(merged_f[front])
            order = np.argsort(-cd, kind="stable")
            keep.extend(front[k] for k in order[: n - len(keep)])
            break
        x, f, idx = merged_x[keep], merged_f[keep], merged_idx[keep]
        rank, crowd, fronts = _rank_and_crowding(f)
        record()
    report.extra["population"] = [int(i) for i in idx]
    return report
