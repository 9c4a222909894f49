"""Planar geometry helpers: polylines, segment intersection, oriented boxes.

Box routines are vectorized over a leading time axis so a whole trace is
processed in one call.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-9


def segment_intersection(p, p2, q, q2, tol: float = EPS):
    """Intersection of segments ``p-p2`` and ``q-q2``.

    Returns ``(t, point)`` with ``t`` the fraction along the first segment, or
    ``None``. For collinear overlapping segments the overlap point closest to
    ``p`` is returned.
    """
    p, p2, q, q2 = (np.asarray(a, dtype=float) for a in (p, p2, q, q2))
    r = p2 - p
    s = q2 - q
    denom = r[0] * s[1] - r[1] * s[0]
    qp = q - p
    rr = float(r @ r)
    if abs(denom) <= tol * max(rr, float(s @ s), 1.0):
        # parallel; intersect only if collinear
        if abs(qp[0] * r[1] - qp[1] * r[0]) > tol * max(np.sqrt(rr), 1.0):
            return None
        if rr == 0.0:
            return None
        t0 = float(qp @ r) / rr
        t1 = t0 + float(s @ r) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        if hi < -tol or lo > 1 + tol:
            return None
        t = max(lo, 0.0)
        return t, p + t * r
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    u = (qp[0] * r[1] - qp[1] * r[0]) / denom
    if -tol <= t <= 1 + tol and -tol <= u <= 1 + tol:
        t = min(max(t, 0.0), 1.0)
        return t, p + t * r
    return None


def polyline_lengths(points: np.ndarray) -> np.ndarray:
    """Cumulative arc length at each vertex."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def first_polyline_intersection(a: np.ndarray, b: np.ndarray):
    """First point of ``b`` met while walking along ``a``, or ``None``."""
    best = None
    for i in range(len(a) - 1):
        for j in range(len(b) - 1):
            hit = segment_intersection(a[i], a[i + 1], b[j], b[j + 1])
            if hit is not None and (best is None or hit[0] < best[0]):
                best = hit
        if best is not None:
            return best[1]
    return None


def box_corners(center: np.ndarray, heading: np.ndarray, length: float, width: float) -> np.ndarray:
    """Corners of oriented boxes, shape ``(T, 4, 2)``, counterclockwise."""
    center = np.atleast_2d(center)
    heading = np.atleast_1d(heading)
    c, s = np.cos(heading), np.sin(heading)
    fwd = np.stack([c, s], axis=-1) * (length / 2)
    left = np.stack([-s, c], axis=-1) * (width / 2)
    return np.stack(
        [center + fwd - left, center + fwd + left, center - fwd + left, center - fwd - left],
        axis=1,
    )


def boxes_overlap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Separating-axis test for batches of rectangles given by corners."""
    result = np.ones(a.shape[0], dtype=bool)
    for poly in (a, b):
        for k in range(2):
            edge = poly[:, k + 1] - poly[:, k]
            axis = np.stack([-edge[:, 1], edge[:, 0]], axis=-1)
            pa = np.einsum("tij,tj->ti", a, axis)
            pb = np.einsum("tij,tj->ti", b, axis)
            separated = (pa.max(axis=1) < pb.min(axis=1)) | (pb.max(axis=1) < pa.min(axis=1))
            result &= ~separated
    return result


def _point_segment_distance(p: np.ndarray, s0: np.ndarray, s1: np.ndarray) -> np.ndarray:
    d = s1 - s0
    dd = np.einsum("...j,...j->...", d, d)
    t = np.einsum("...j,...j->...", p - s0, d) / np.where(dd > 0, dd, 1.0)
    t = np.clip(t, 0.0, 1.0)
    proj = s0 + t[..., None] * d
    return np.linalg.norm(p - proj, axis=-1)


def box_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean gap between batches of rectangles; 0 where they overlap."""
    gap = np.full(a.shape[0], np.inf)
    for p_poly, e_poly in ((a, b), (b, a)):
        for k in range(4):
            s0 = e_poly[:, k][:, None, :]
            s1 = e_poly[:, (k + 1) % 4][:, None, :]
            dist = _point_segment_distance(p_poly, s0, s1)
            gap = np.minimum(gap, dist.min(axis=1))
    return np.where(boxes_overlap(a, b), 0.0, gap)
