"""Global-best particle swarm optimization (maximization)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .base import Budget, CampaignReport, evaluate_batch, stream, track_best, uniform_population


@dataclass(frozen=True)
class PsoConfig:
    c1: float = 1.5
    c2: float = 1.5
    inertia_w: float = 0.8
    velocity_clamp_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be non-negative")
        if not 0 <= self.inertia_w < 1:
            raise ValueError("inertia_w must lie in [0, 1)")
        if self.velocity_clamp_fraction <= 0:
            raise ValueError("velocity_clamp_fraction must be positive")


def pso(space, objective, budget: Budget | None = None, cfg: PsoConfig | None = None, seed: int = 0, *,
        executor=None) -> CampaignReport:
    """Swarm of ``population`` particles moved for ``iterations`` rounds.

    The initial swarm is round 0 and counts toward the budget. Velocities
    start at zero and are clamped to ``velocity_clamp_fraction`` of each
    dimension's range; positions are clamped to the bounds.
    """
    budget = budget or Budget()
    cfg = cfg or PsoConfig()
    lo, hi = space.lower, space.upper
    vmax = cfg.velocity_clamp_fraction * (hi - lo)
    report = CampaignReport("pso", seed, budget, space.names, "max", config=asdict(cfg))

    x = uniform_population(space, seed, 0, budget.population)
    v = np.zeros_like(x)
    pbest_x = pbest_f = None
    for it in range(budget.iterations):
        if it > 0:
            for j in range(budget.population):
                r1, r2 = stream(seed, it, j).random((2, space.dim))
                v[j] = (
                    cfg.inertia_w * v[j]
                    + cfg.c1 * r1 * (pbest_x[j] - x[j])
                    + cfg.c2 * r2 * (gbest_x - x[j])
                )
            v = np.clip(v, -vmax, vmax)
            x = np.clip(x + v, lo, hi)
        batch = evaluate_batch(objective, space, x, it, "single", executor)
        f = np.array([e.value for e in batch])
        offset = len(report.evaluations)
        report.evaluations.extend(batch)
        track_best(report, batch, offset)
        if pbest_x is None:
            pbest_x, pbest_f = x.copy(), f.copy()
        else:
            better = f > pbest_f
            pbest_x[better] = x[better]
            pbest_f[better] = f[better]
        gbest_x = pbest_x[int(np.argmax(pbest_f))].copy()
    return report
