"""Detection-quality metrics over externally supplied detections.

Boxes are axis-aligned ``(x1, y1, x2, y2)`` with ``x1 < x2`` and ``y1 < y2``.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DegenerateBoxError(ValueError):
    pass


def _check(box) -> tuple[float, float, float, float]:
    x1, y1, x2, y2 = (float(v) for v in box)
    if not (x2 > x1 and y2 > y1):
        raise DegenerateBoxError(f"box {box} has no area")
    return x1, y1, x2, y2


def iou(box_a, box_b) -> float:
    ax1, ay1, ax2, ay2 = _check(box_a)
    bx1, by1, bx2, by2 = _check(box_b)
    iw = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    ih = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def position_error(det_center, gt_center) -> float:
    return math.dist(det_center, gt_center)


@dataclass(frozen=True)
class Detection:
    cls: str
    box: tuple[float, float, float, float]
    confidence: float = 1.0
    frame: str = "0"


def _parse(entries, with_confidence: bool) -> list[Detection]:
    out = []
    for e in entries:
        out.append(
            Detection(
                cls=str(e["class"]),
                box=tuple(float(v) for v in e["box"]),
                confidence=float(e.get("confidence", 1.0)) if with_confidence else 1.0,
                frame=str(e.get("frame", "0")),
            )
        )
    return out


def load_detections(path: str | Path) -> list[Detection]:
    """Read a JSON array of ``{class, confidence, box[, frame]}`` objects."""
    return _parse(json.loads(Path(path).read_text()), with_confidence=True)


def _average_precision(recall: np.ndarray, precision: np.ndarray) -> float:
    # all-point interpolation: area under the monotone precision envelope
    r = np.concatenate([[0.0], recall, [1.0]])
    p = np.concatenate([[0.0], precision, [0.0]])
    for i in range(len(p) - 2, -1, -1):
        p[i] = max(p[i], p[i + 1])
    idx = np.flatnonzero(r[1:] != r[:-1])
    return float(np.sum((r[idx + 1] - r[idx]) * p[idx + 1]))


def mean_average_precision(
    detections: Sequence[Detection | dict],
    ground_truth: Sequence[Detection | dict],
    iou_threshold: float = 0.5,
) -> float:
    """mAP over the classes present in the ground truth.

    Detections are matched greedily in descending confidence order to the
    unmatched ground-truth box of the same class and frame with highest IoU.
    """
    dets = [d if isinstance(d, Detection) else _parse([d], True)[0] for d in detections]
    gts = [g if isinstance(g, Detection) else _parse([g], False)[0] for g in ground_truth]
    if not gts:
        raise ValueError("ground truth is empty")

    aps = []
    for cls in sorted({g.cls for g in gts}):
        truth = defaultdict(list)
        for g in gts:
            if g.cls == cls:
                truth[g.frame].append(g)
        used = {frame: [False] * len(boxes) for frame, boxes in truth.items()}
        n_truth = sum(len(v) for v in truth.values())
        # stable sort keeps input order among equal confidences
        ranked = sorted((d for d in dets if d.cls == cls), key=lambda d: -d.confidence)
        tp = np.zeros(len(ranked))
        for i, d in enumerate(ranked):
            best, best_j = 0.0, -1
            for j, g in enumerate(truth.get(d.frame, [])):
                if used[d.frame][j]:
                    continue
                o = iou(d.box, g.box)
                if o > best:
                    best, best_j = o, j
            if best_j >= 0 and best >= iou_threshold:
                used[d.frame][best_j] = True
                tp[i] = 1.0
        if not ranked:
            aps.append(0.0)
            continue
        ctp = np.cumsum(tp)
        recall = ctp / n_truth
        precision = ctp / np.arange(1, len(ranked) + 1)
        aps.append(_average_precision(recall, precision))
    return float(np.mean(aps))
