"""Policy search with the clipped PPO surrogate.

Every scenario is a one-step episode: a diagonal Gaussian over the unit
cube proposes a vector, the fitness is the reward, and there is no state.
The discount factor is kept for interface compatibility but has no effect
on single-step returns.

Samples are clipped to the cube. A clipped coordinate is scored with the
probability mass beyond the bound (a censored Gaussian), which keeps the
policy gradient unbiased near the bounds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import log_ndtr

from .base import Budget, CampaignReport, evaluate_batch, stream, track_best


@dataclass(frozen=True)
class PpoConfig:
    k_epochs: int = 32
    gamma: float = 0.99
    lr_actor: float = 3e-4
    lr_critic: float = 1e-3
    clip_epsilon: float = 0.2
    initial_log_std: float = math.log(0.33)
    min_log_std: float = math.log(0.02)
    normalize_advantages: bool = True

    def __post_init__(self) -> None:
        if self.lr_actor <= 0 or self.lr_critic <= 0:
            raise ValueError("learning rates must be positive")
        if not 0 <= self.clip_epsilon < 1:
            raise ValueError("clip_epsilon must lie in [0, 1)")
        if self.k_epochs < 1:
            raise ValueError("k_epochs must be >= 1")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")


_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class GaussianPolicy:
    mean: np.ndarray
    log_std: np.ndarray
    baseline: float = 0.0

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    def terms(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-coordinate log-probability of actions ``u`` in [0, 1] and its
        derivatives with respect to the mean and the log standard deviation."""
        sd = self.std
        k = (u - self.mean) / sd
        logp = -0.5 * k * k - self.log_std - _LOG_SQRT_2PI
        d_mean = k / sd
        d_log_std = k * k - 1.0

        a = (1.0 - self.mean) / sd
        b = -self.mean / sd
        hi = np.broadcast_to(u >= 1.0, k.shape)
        lo = np.broadcast_to(u <= 0.0, k.shape)
        a = np.broadcast_to(a, k.shape)
        b = np.broadcast_to(b, k.shape)
        sd = np.broadcast_to(sd, k.shape)
        # hazard ratios phi(x) / Phi(x) evaluated in log space
        upper_tail = log_ndtr(-a)
        lower_tail = log_ndtr(b)
        h_hi = np.exp(-0.5 * a * a - _LOG_SQRT_2PI - upper_tail)
        h_lo = np.exp(-0.5 * b * b - _LOG_SQRT_2PI - lower_tail)
        logp = np.where(hi, upper_tail, np.where(lo, lower_tail, logp))
        d_mean = np.where(hi, h_hi / sd, np.where(lo, -h_lo / sd, d_mean))
        d_log_std = np.where(hi, a * h_hi, np.where(lo, -b * h_lo, d_log_std))
        return logp, d_mean, d_log_std

    def log_prob(self, u: np.ndarray) -> np.ndarray:
        return self.terms(u)[0].sum(axis=1)


def ppo_update(policy: GaussianPolicy, u: np.ndarray, rewards: np.ndarray, cfg: PpoConfig) -> GaussianPolicy:
    """``k_epochs`` gradient-ascent steps on the clipped surrogate plus baseline regression.

    ``u`` holds the (clipped) actions that were evaluated.
    """
    rewards = np.asarray(rewards, dtype=float)
    old_logp = policy.log_prob(u)
    adv = rewards - policy.baseline
    if cfg.normalize_advantages:
        scale = rewards.std()
        adv = adv / scale if scale > 0 else np.zeros_like(adv)
    mean, log_std, baseline = policy.mean.copy(), policy.log_std.copy(), policy.baseline
    eps = cfg.clip_epsilon
    for _ in range(cfg.k_epochs):
        logp, d_mean, d_log_std = GaussianPolicy(mean, log_std).terms(u)
        ratio = np.exp(logp.sum(axis=1) - old_logp)
        # the unclipped branch carries the gradient only strictly inside the trust region
        live = ((adv > 0) & (ratio < 1 + eps)) | ((adv < 0) & (ratio > 1 - eps))
        w = np.where(live, ratio * adv, 0.0)[:, None]
        mean = mean + cfg.lr_actor * np.mean(w * d_mean, axis=0)
        log_std = np.maximum(log_std + cfg.lr_actor * np.mean(w * d_log_std, axis=0), cfg.min_log_std)
        baseline = baseline + cfg.lr_critic * float(np.mean(rewards - baseline))
    return GaussianPolicy(mean, log_std, baseline)


def ppo_search(space, objective, budget: Budget | None = None, cfg: PpoConfig | None = None, seed: int = 0, *,
               executor=None) -> CampaignReport:
    """Each iteration samples ``population`` vectors from the policy, then updates it.

    The value baseline starts at the mean reward of the first batch. The
    final policy (mean in search-space units) is stored in ``report.extra``.
    """
    budget = budget or Budget()
    cfg = cfg or PpoConfig()
    lo, hi = space.lower, space.upper
    span = hi - lo
    report = CampaignReport("ppo", seed, budget, space.names, "max", config=asdict(cfg))
    policy = GaussianPolicy(np.full(space.dim, 0.5), np.full(space.dim, cfg.initial_log_std))

    for it in range(budget.iterations):
        z = np.array([
            policy.mean + policy.std * stream(seed, it, j).standard_normal(space.dim)
            for j in range(budget.population)
        ])
        u = np.clip(z, 0.0, 1.0)
        xs = lo + u * span
        batch = evaluate_batch(objective, space, xs, it, "single", executor)
        offset = len(report.evaluations)
        report.evaluations.extend(batch)
        track_best(report, batch, offset)
        rewards = np.array([e.value for e in batch])
        if it == 0:
            policy = GaussianPolicy(policy.mean, policy.log_std, float(rewards.mean()))
        policy = ppo_update(policy, u, rewards, cfg)

    report.extra = {
        "policy_mean": (lo + policy.mean * span).tolist(),
        "policy_mean_unit": policy.mean.tolist(),
        "policy_std_unit": policy.std.tolist(),
        "baseline": policy.baseline,
    }
    return report
