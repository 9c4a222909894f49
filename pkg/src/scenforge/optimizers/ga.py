"""Generational genetic algorithm with single elitism (maximization)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .base import (
    Budget,
    CampaignReport,
    evaluate_batch,
    population_stream,
    stream,
    track_best,
    uniform_population,
)
from .operators import gaussian_mutation, sbx


@dataclass(frozen=True)
class GaConfig:
    crossover_prob: float = 0.9
    mutation_prob: float = 0.1
    mutation_sigma: float = 0.1
    eta_crossover: float = 15.0
    tournament_size: int = 2

    def __post_init__(self) -> None:
        if not (0 <= self.crossover_prob <= 1 and 0 <= self.mutation_prob <= 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.mutation_sigma < 0 or self.eta_crossover < 0:
            raise ValueError("mutation_sigma and eta_crossover must be non-negative")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")


def _tournament(f: np.ndarray, size: int, rng: np.random.Generator) -> int:
    picks = rng.integers(0, len(f), size)
    return int(picks[np.argmax(f[picks])])


def ga(space, objective, budget: Budget | None = None, cfg: GaConfig | None = None, seed: int = 0, *,
       executor=None) -> CampaignReport:
    """The initial population is generation 0; every later generation evaluates
    ``population`` children and the best parent replaces the worst child."""
    budget = budget or Budget()
    cfg = cfg or GaConfig()
    lo, hi = space.lower, space.upper
    n = budget.population
    report = CampaignReport("ga", seed, budget, space.names, "max", config=asdict(cfg))

    x = uniform_population(space, seed, 0, n)
    batch = evaluate_batch(objective, space, x, 0, "single", executor)
    report.evaluations.extend(batch)
    track_best(report, batch, 0)
    f = np.array([e.value for e in batch])

    for it in range(1, budget.iterations):
        sel = population_stream(seed, it)
        parents = [_tournament(f, cfg.tournament_size, sel) for _ in range(n + n % 2)]
        children = np.empty((n, space.dim))
        for j in range(0, n, 2):
            rng = stream(seed, it, j)
            a, b = x[parents[j]], x[parents[j + 1]]
            if rng.random() < cfg.crossover_prob:
                a, b = sbx(a, b, lo, hi, cfg.eta_crossover, rng)
            children[j] = gaussian_mutation(a, lo, hi, cfg.mutation_sigma, cfg.mutation_prob, rng)
            if j + 1 < n:
                children[j + 1] = gaussian_mutation(b, lo, hi, cfg.mutation_sigma, cfg.mutation_prob,
                                                    stream(seed, it, j + 1))
        batch = evaluate_batch(objective, space, children, it, "single", executor)
        offset = len(report.evaluations)
        report.evaluations.extend(batch)
        track_best(report, batch, offset)
        fc = np.array([e.value for e in batch])
        elite = int(np.argmax(f))
        worst = int(np.argmin(fc))
        if fc[worst] < f[elite]:
            children[worst] = x[elite]
            fc[worst] = f[elite]
        x, f = children, fc
    return report
