"""Pareto-front machinery. All objectives are minimized."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np


@dataclass(frozen=True)
class ParetoPoint:
    objectives: tuple[float, ...]
    payload: Any = None


def _as_matrix(points) -> np.ndarray:
    if len(points) and isinstance(points[0], ParetoPoint):
        points = [p.objectives for p in points]
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 1)
    return arr


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def non_dominated_sort(points) -> list[list[int]]:
    """Fast non-dominated sorting; returns fronts as lists of indices in input order."""
    f = _as_matrix(points)
    n = len(f)
    if n == 0:
        return []
    le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    fronts = []
    current = [i for i in range(n) if counts[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.flatnonzero(dom[i]):
                counts[j] -= 1
                if counts[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    return fronts


def non_dominated(points) -> list[int]:
    """Indices of the first front."""
    fronts = non_dominated_sort(points)
    return fronts[0] if fronts else []


def crowding_distance(front) -> np.ndarray:
    f = _as_matrix(front)
    n, m = f.shape
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(m):
        order = np.argsort(f[:, k], kind="stable")
        lo, hi = f[order[0], k], f[order[-1], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi == lo:
            continue
        gaps = (f[order[2:], k] - f[order[:-2], k]) / (hi - lo)
        dist[order[1:-1]] += gaps
    return dist


class ReferencePointError(ValueError):
    pass


def hypervolume(front, reference: Sequence[float]) -> float:
    """Volume dominated by ``front`` and bounded by ``reference``."""
    f = _as_matrix(front)
    ref = np.asarray(reference, dtype=float)
    if len(f) == 0:
        return 0.0
    if f.shape[1] != ref.size:
        raise ValueError("reference dimension does not match the front")
    if np.any(f > ref):
        raise ReferencePointError("every point must dominate the reference point")
    if ref.size == 1:
        return float(ref[0] - f[:, 0].min())
    if ref.size == 2:
        return _hv2d(f, ref)
    return _hv_slicing(f, ref)


def _hv2d(f: np.ndarray, ref: np.ndarray) -> float:
    order = np.lexsort((f[:, 1], f[:, 0]))
    total = 0.0
    best_y = ref[1]
    for i in order:
        x, y = f[i]
        if y < best_y:
            total += (ref[0] - x) * (best_y - y)
            best_y = y
    return float(total)


def _hv_slicing(f: np.ndarray, ref: np.ndarray) -> float:
    # slice along the last objective and recurse on the remaining ones
    order = np.argsort(f[:, -1], kind="stable")
    f = f[order]
    total = 0.0
    for i in range(len(f)):
        upper = f[i + 1, -1] if i + 1 < len(f) else ref[-1]
        depth = upper - f[i, -1]
        if depth <= 0:
            continue
        total += depth * hypervolume(f[: i + 1, :-1], ref[:-1])
    return float(total)


def spread(front, extremes: Sequence[Sequence[float]] | None = None) -> float:
    """Distribution non-uniformity of a bi-objective front (0 = perfectly even).

    Points are ordered by the first objective. ``extremes`` optionally gives
    the two boundary points of the true front; by default the front's own
    end points are used, so the boundary terms vanish.
    """
    f = _as_matrix(front)
    if len(f) < 3:
        raise ValueError("spread needs at least 3 points")
    if f.shape[1] != 2:
        raise ValueError("spread is defined for two objectives")
    f = f[np.lexsort((f[:, 1], f[:, 0]))]
    gaps = np.linalg.norm(np.diff(f, axis=0), axis=1)
    mean = gaps.mean()
    if extremes is None:
        d_f = d_l = 0.0
    else:
        first, last = (np.asarray(e, dtype=float) for e in extremes)
        d_f = float(np.linalg.norm(f[0] - first))
        d_l = float(np.linalg.norm(f[-1] - last))
    denom = d_f + d_l + (len(f) - 1) * mean
    if denom == 0:
        return 0.0
    return float((d_f + d_l + np.abs(gaps - mean).sum()) / denom)
