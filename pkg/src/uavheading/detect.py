"""Detector oracle, IoU and single-class average precision."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

FRAME_PX = 640.0


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        vals = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box {vals}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"box corners out of order: {vals}")
        if self.x1 < 0 or self.y1 < 0:
            raise ValueError(f"box leaves the frame: {vals}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    confidence: float
    frame: int = 0
    # index of the ground-truth object that produced it, -1 for clutter
    source: int = -1

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectorNoise:
    corner_sigma: float = 0.0
    miss_prob: float = 0.0
    false_positive_rate: float = 0.0
    conf_range: tuple[float, float] = (0.9, 0.9)

    def __post_init__(self):
        lo, hi = self.conf_range
        if self.corner_sigma < 0:
            raise ValueError("corner_sigma must be >= 0")
        if not 0.0 <= self.miss_prob <= 1.0:
            raise ValueError("miss_prob must be in [0, 1]")
        if self.false_positive_rate < 0:
            raise ValueError("false_positive_rate must be >= 0")
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("conf_range must satisfy 0 <= lo <= hi <= 1")
        object.__setattr__(self, "conf_range", (float(lo), float(hi)))


def _clipped_box(xs, ys, width: float, height: float, min_px: float) -> BBox | None:
    x1, x2 = sorted(min(max(float(v), 0.0), width) for v in xs)
    y1, y2 = sorted(min(max(float(v), 0.0), height) for v in ys)
    if x2 - x1 < min_px or y2 - y1 < min_px:
        return None
    return BBox(x1, y1, x2, y2)


def simulate_detections(
    true_boxes: Sequence[BBox],
    noise: DetectorNoise,
    rng: np.random.Generator,
    *,
    frame: int = 0,
    width: float = FRAME_PX,
    height: float = FRAME_PX,
    min_px: float = 1.0,
) -> list[Detection]:
    """Turn ground-truth boxes into noisy scored detections.

    Every true box survives with probability 1 - miss_prob, gets i.i.d.
    Gaussian noise on its four coordinates and a uniform confidence; then
    Poisson(false_positive_rate) clutter boxes are added. The draw order is
    fixed so the output depends only on the generator state.
    """
    lo, hi = noise.conf_range
    out = []
    for i, b in enumerate(true_boxes):
        if rng.random() < noise.miss_prob:
            continue
        conf = float(rng.uniform(lo, hi)) if hi > lo else lo
        if noise.corner_sigma > 0:
            d = rng.normal(0.0, noise.corner_sigma, size=4)
            box = _clipped_box(
                (b.x1 + d[0], b.x2 + d[2]), (b.y1 + d[1], b.y2 + d[3]), width, height, min_px
            )
        else:
            box = b
        if box is not None:
            out.append(Detection(box, conf, frame, i))
    for _ in range(int(rng.poisson(noise.false_positive_rate)) if noise.false_positive_rate > 0 else 0):
        bw, bh = rng.uniform(16.0, min(160.0, width), size=2)
        x1 = rng.uniform(0.0, width - bw)
        y1 = rng.uniform(0.0, height - bh)
        conf = float(rng.uniform(lo, hi)) if hi > lo else lo
        out.append(Detection(BBox(x1, y1, x1 + bw, y1 + bh), conf, frame, -1))
    return out


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def _group_gts(gts) -> dict[int, list[BBox]]:
    if isinstance(gts, Mapping):
        return {int(k): list(v) for k, v in gts.items()}
    return {0: list(gts)}


def match_detections(dets: Sequence[Detection], gts, iou_thresh: float = 0.5):
    """Greedy one-to-one matching in ranked order.

    Ranking is descending confidence, then higher best-IoU, then input order.
    Returns (order, is_tp) where order indexes into dets.
    """
    by_frame = _group_gts(gts)

    def best_iou(d: Detection) -> float:
        return max((iou(d.bbox, g) for g in by_frame.get(d.frame, ())), default=0.0)

    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, -best_iou(dets[i]), i))
    taken = {f: [False] * len(v) for f, v in by_frame.items()}
    is_tp = []
    for i in order:
        d = dets[i]
        cands = by_frame.get(d.frame, [])
        best, best_j = -1.0, -1
        for j, g in enumerate(cands):
            if taken[d.frame][j]:
                continue
            o = iou(d.bbox, g)
            if o >= iou_thresh and o > best:
                best, best_j = o, j
        if best_j >= 0:
            taken[d.frame][best_j] = True
        is_tp.append(best_j >= 0)
    return order, is_tp


def average_precision(dets: Sequence[Detection], gts, iou_thresh: float = 0.5) -> float:
    """AP = sum_n (R_n - R_{n-1}) P_n over the confidence-ranked list.

    Precision/recall points are taken at each distinct confidence level, so
    tied detections enter together and AP only depends on score ordering.
    `gts` is either a list of boxes (all in frame 0) or a frame -> boxes map.
    """
    if not 0.0 < iou_thresh < 1.0:
        raise ValueError("iou_thresh must lie in (0, 1)")
    n_gt = sum(len(v) for v in _group_gts(gts).values())
    if n_gt == 0:
        return 1.0 if len(dets) == 0 else 0.0
    if len(dets) == 0:
        return 0.0
    order, is_tp = match_detections(dets, gts, iou_thresh)
    ap = 0.0
    tp = 0
    prev_recall = 0.0
    for k, (i, hit) in enumerate(zip(order, is_tp)):
        tp += hit
        last_of_level = k + 1 == len(order) or dets[order[k + 1]].confidence != dets[i].confidence
        if not last_of_level:
            continue
        recall = tp / n_gt
        ap += (recall - prev_recall) * (tp / (k + 1))
        prev_recall = recall
    return ap


def select_target(dets: Sequence[Detection], conf_threshold: float = 0.25,
                  width: float = FRAME_PX) -> Detection | None:
    """Largest-area detection above threshold; ties go to the most central, then first."""
    best = None
    best_key = None
    for i, d in enumerate(dets):
        if d.confidence < conf_threshold:
            continue
        off = abs((d.bbox.x1 + d.bbox.x2) / (2.0 * width) - 0.5)
        key = (-d.bbox.area, off, i)
        if best_key is None or key < best_key:
            best, best_key = d, key
    return best
