"""Variation operators on bounded real vectors."""

from __future__ import annotations

import numpy as np


def sbx(p1: np.ndarray, p2: np.ndarray, lo: np.ndarray, hi: np.ndarray, eta: float,
        rng: np.random.Generator, var_prob: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Bounded simulated binary crossover; each variable crosses with ``var_prob``."""
    c1, c2 = p1.astype(float).copy(), p2.astype(float).copy()
    u = rng.random(p1.size)
    swap = rng.random(p1.size) < var_prob
    for i in range(p1.size):
        if not swap[i] or abs(p1[i] - p2[i]) < 1e-14 or hi[i] <= lo[i]:
            continue
        y1, y2 = min(p1[i], p2[i]), max(p1[i], p2[i])
        span = y2 - y1
        out = []
        for beta_edge in (1.0 + 2.0 * (y1 - lo[i]) / span, 1.0 + 2.0 * (hi[i] - y2) / span):
            alpha = 2.0 - beta_edge ** -(eta + 1.0)
            if u[i] <= 1.0 / alpha:
                betaq = (u[i] * alpha) ** (1.0 / (eta + 1.0))
            else:
                betaq = (1.0 / (2.0 - u[i] * alpha)) ** (1.0 / (eta + 1.0))
            out.append(betaq)
        a = 0.5 * ((y1 + y2) - out[0] * span)
        b = 0.5 * ((y1 + y2) + out[1] * span)
        a, b = min(max(a, lo[i]), hi[i]), min(max(b, lo[i]), hi[i])
        if p1[i] <= p2[i]:
            c1[i], c2[i] = a, b
        else:
            c1[i], c2[i] = b, a
    return c1, c2


def polynomial_mutation(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, eta: float, prob: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Bounded polynomial mutation applied to each variable with probability ``prob``."""
    y = x.astype(float).copy()
    hit = rng.random(x.size) < prob
    u = rng.random(x.size)
    for i in np.flatnonzero(hit):
        span = hi[i] - lo[i]
        if span <= 0:
            continue
        d1 = (y[i] - lo[i]) / span
        d2 = (hi[i] - y[i]) / span
        p = 1.0 / (eta + 1.0)
        if u[i] < 0.5:
            val = 2.0 * u[i] + (1.0 - 2.0 * u[i]) * (1.0 - d1) ** (eta + 1.0)
            dq = val ** p - 1.0
        else:
            val = 2.0 * (1.0 - u[i]) + 2.0 * (u[i] - 0.5) * (1.0 - d2) ** (eta + 1.0)
            dq = 1.0 - val ** p
        y[i] = min(max(y[i] + dq * span, lo[i]), hi[i])
    return y


def gaussian_mutation(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, sigma_fraction: float, prob: float,
                      rng: np.random.Generator) -> np.ndarray:
    hit = rng.random(x.size) < prob
    noise = rng.normal(0.0, 1.0, x.size) * sigma_fraction * (hi - lo)
    return np.clip(np.where(hit, x + noise, x), lo, hi)
