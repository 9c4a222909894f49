"""Campaign statistics: critical-scenario ratio and relative time per critical scenario."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from ..criticality import Thresholds, classify_critical
from .base import CampaignReport, Evaluation


@dataclass(frozen=True)
class CampaignStats:
    algorithm: str
    n_evaluations: int
    n_critical: int
    r_critic: float
    evals_per_critical: float
    wall_time: float

    @property
    def time_per_critical(self) -> float:
        return self.wall_time / self.n_critical if self.n_critical else math.inf


def default_classifier(thresholds: Thresholds | None = None) -> Callable[[Evaluation], bool]:
    def classify(e: Evaluation) -> bool:
        if "d_min" in e.info and "v_d" in e.info and "n_collision" in e.info:
            return classify_critical(e.info, thresholds)
        if "critical" in e.info:
            return bool(e.info["critical"])
        raise KeyError("evaluation carries no metrics to classify")

    return classify


def campaign_stats(
    report: CampaignReport,
    thresholds: Thresholds | None = None,
    classify: Callable[[Evaluation], bool] | None = None,
    wall_time: float | None = None,
) -> CampaignStats:
    if not report.evaluations:
        raise ValueError("report has no evaluations")
    classify = classify or default_classifier(thresholds)
    n = len(report.evaluations)
    k = sum(1 for e in report.evaluations if classify(e))
    return CampaignStats(
        algorithm=report.algorithm,
        n_evaluations=n,
        n_critical=k,
        r_critic=k / n,
        evals_per_critical=n / k if k else math.inf,
        wall_time=report.wall_time if wall_time is None else wall_time,
    )


def relative_t_critic(stats: Sequence[CampaignStats]) -> list[float]:
    """Wall time per critical scenario divided by the smallest one (best = 1.0)."""
    per = [s.time_per_critical for s in stats]
    finite = [p for p in per if math.isfinite(p)]
    if not finite:
        return [math.inf] * len(per)
    best = min(finite)
    if best == 0:
        return [1.0 if p == 0 else math.inf for p in per]
    return [p / best for p in per]
