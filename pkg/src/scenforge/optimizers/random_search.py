"""Uniform random sampling baseline."""

from __future__ import annotations

from .base import Budget, CampaignReport, evaluate_batch, track_best, uniform_population


def random_search(space, objective, budget: Budget | None = None, seed: int = 0, *, executor=None,
                  arity="single") -> CampaignReport:
    """``iterations x population`` independent uniform samples.

    With ``arity`` other than ``single`` the values are kept as vectors and
    no best-so-far history is recorded.
    """
    budget = budget or Budget()
    report = CampaignReport("rs", seed, budget, space.names, "max" if arity == "single" else "min")
    for it in range(budget.iterations):
        xs = uniform_population(space, seed, it, budget.population)
        batch = evaluate_batch(objective, space, xs, it, arity, executor)
        offset = len(report.evaluations)
        report.evaluations.extend(batch)
        if arity == "single":
            track_best(report, batch, offset)
    return report
