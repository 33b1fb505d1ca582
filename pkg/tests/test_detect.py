import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uavheading.detect import (
    BBox,
    Detection,
    DetectorNoise,
    average_precision,
    iou,
    select_target,
    simulate_detections,
)

BOX = BBox(200.0, 250.0, 300.0, 330.0)


def test_noiseless_identity():
    noise = DetectorNoise(conf_range=(0.6, 0.8))
    dets = simulate_detections([BOX], noise, np.random.default_rng(0))
    assert len(dets) == 1
    assert dets[0].bbox == BOX
    assert 0.6 <= dets[0].confidence <= 0.8


def test_always_missed():
    dets = simulate_detections([BOX] * 5, DetectorNoise(miss_prob=1.0), np.random.default_rng(0))
    assert dets == []


def test_corner_noise_magnitude():
    # folded Gaussian: E|N(0, s^2)| = s sqrt(2/pi)
    noise = DetectorNoise(corner_sigma=2.0)
    rng = np.random.default_rng(11)
    disp = []
    for _ in range(10_000):
        (d,) = simulate_detections([BOX], noise, rng)
        disp.append(np.abs(np.subtract(d.bbox.as_tuple(), BOX.as_tuple())))
    mean = np.mean(disp, axis=0)
    assert mean == pytest.approx(np.full(4, 2.0 * math.sqrt(2 / math.pi)), rel=0.05)


def test_clipping_keeps_invariants():
    edge = BBox(0.0, 0.0, 3.0, 3.0)
    rng = np.random.default_rng(2)
    for _ in range(500):
        for d in simulate_detections([edge], DetectorNoise(corner_sigma=3.0), rng):
            b = d.bbox
            assert 0 <= b.x1 < b.x2 <= 640 and 0 <= b.y1 < b.y2 <= 640
            assert b.width >= 1 and b.height >= 1


def test_false_positives_rate():
    rng = np.random.default_rng(5)
    n = [len(simulate_detections([], DetectorNoise(false_positive_rate=1.5), rng)) for _ in range(4000)]
    assert np.mean(n) == pytest.approx(1.5, rel=0.05)


def test_deterministic_per_stream():
    noise = DetectorNoise(2.0, 0.3, 0.5, (0.2, 0.9))
    a = simulate_detections([BOX, BBox(10, 10, 50, 60)], noise, np.random.default_rng(9))
    b = simulate_detections([BOX, BBox(10, 10, 50, 60)], noise, np.random.default_rng(9))
    assert a == b


def test_noise_validation():
    with pytest.raises(ValueError):
        DetectorNoise(corner_sigma=-1)
    with pytest.raises(ValueError):
        DetectorNoise(miss_prob=1.5)
    with pytest.raises(ValueError):
        DetectorNoise(conf_range=(0.8, 0.2))


def test_iou_examples():
    assert iou(BOX, BOX) == 1.0
    assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)) == 0.0
    assert iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)) == pytest.approx(1 / 3)


# quarter-pixel grid: sub-ulp offsets would round IoU back to exactly 1
quarter = st.integers(0, 2000).map(lambda k: k / 4)
extent = st.integers(4, 480).map(lambda k: k / 4)
boxes = st.builds(lambda x, y, w, h: BBox(x, y, x + w, y + h), quarter, quarter, extent, extent)


@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    assert iou(a, b) == iou(b, a)
    assert 0.0 <= iou(a, b) <= 1.0
    if a != b:
        assert iou(a, b) < 1.0


@given(boxes, boxes, st.floats(0, 0.9))
def test_shrinking_never_grows_intersection(a, b, frac):
    def inter(p, q):
        return max(0.0, min(p.x2, q.x2) - max(p.x1, q.x1)) * max(0.0, min(p.y2, q.y2) - max(p.y1, q.y1))

    s = BBox(a.x1, a.y1, a.x1 + max(a.width * (1 - frac), 1e-6), a.y2)
    assert inter(s, b) <= inter(a, b) + 1e-9


def test_ap_examples():
    gt = BBox(0, 0, 10, 10)
    tp = Detection(BBox(0, 0, 10, 6), 0.9)  # IoU 0.6
    assert iou(tp.bbox, gt) == pytest.approx(0.6)
    assert average_precision([tp], [gt], 0.5) == 1.0

    fp = Detection(BBox(50, 50, 60, 60), 0.9)
    tp2 = Detection(BBox(0, 0, 10, 8), 0.5)  # IoU 0.8
    assert average_precision([fp, tp2], [gt], 0.5) == 0.5

    assert average_precision([], [], 0.5) == 1.0
    assert average_precision([tp], [], 0.5) == 0.0
    assert average_precision([], [gt], 0.5) == 0.0


# -- brute-force oracle ---------------------------------------------------------
# Integer boxes on a small grid; IoU by counting covered pixels.

def _mask(b, n=48):
    m = np.zeros((n, n), dtype=bool)
    m[int(b.y1):int(b.y2), int(b.x1):int(b.x2)] = True
    return m


def _pixel_iou(a, b):
    ma, mb = _mask(a), _mask(b)
    return int((ma & mb).sum()) / int((ma | mb).sum())


def _greedy_tp(subset, gts_by_frame, thr):
    def best(d):
        return max((_pixel_iou(d.bbox, g) for g in gts_by_frame.get(d.frame, [])), default=0.0)

    ranked = sorted(subset, key=lambda t: (-t[1].confidence, -best(t[1]), t[0]))
    used = set()
    tp = 0
    for _, d in ranked:
        cands = [(_pixel_iou(d.bbox, g), j) for j, g in enumerate(gts_by_frame.get(d.frame, []))
                 if (d.frame, j) not in used]
        cands = [c for c in cands if c[0] >= thr]
        if cands:
            top = max(c[0] for c in cands)
            j = min(j for o, j in cands if o == top)
            used.add((d.frame, j))
            tp += 1
    return tp


def brute_force_ap(dets, gts_by_frame, thr):
    n_gt = sum(len(v) for v in gts_by_frame.values())
    if n_gt == 0:
        return 1.0 if not dets else 0.0
    if not dets:
        return 0.0
    ap, prev_r = 0.0, 0.0
    for tau in sorted({d.confidence for d in dets}, reverse=True):
        subset = [(i, d) for i, d in enumerate(dets) if d.confidence >= tau]
        tp = _greedy_tp(subset, gts_by_frame, thr)
        r = tp / n_gt
        ap += (r - prev_r) * (tp / len(subset))
        prev_r = r
    return ap


def random_scene(rng, max_boxes=10):
    def rbox():
        x, y = rng.integers(0, 36, size=2)
        w, h = rng.integers(2, 13, size=2)
        return BBox(float(x), float(y), float(min(x + w, 48)), float(min(y + h, 48)))

    n_frames = int(rng.integers(1, 4))
    gts = {f: [] for f in range(n_frames)}
    n_gt = int(rng.integers(0, max_boxes + 1))
    for _ in range(n_gt):
        gts[int(rng.integers(n_frames))].append(rbox())
    dets = []
    for _ in range(int(rng.integers(0, max_boxes + 1))):
        f = int(rng.integers(n_frames))
        if gts[f] and rng.random() < 0.7:
            g = gts[f][int(rng.integers(len(gts[f])))]
            dx, dy = rng.integers(-2, 3, size=2)
            x1, y1 = max(g.x1 + dx, 0), max(g.y1 + dy, 0)
            b = BBox(x1, y1, min(max(g.x2 + dx, x1 + 1), 48), min(max(g.y2 + dy, y1 + 1), 48))
        else:
            b = rbox()
        # a coarse confidence grid provokes ties
        dets.append(Detection(b, float(rng.integers(1, 6)) / 5, frame=f))
    return dets, gts


def test_ap_matches_brute_force():
    rng = np.random.default_rng(1234)
    for _ in range(200):
        dets, gts = random_scene(rng)
        for thr in (0.5, 0.3):
            assert average_precision(dets, gts, thr) == brute_force_ap(dets, gts, thr)


def test_ap_invariant_to_monotone_confidence_map():
    rng = np.random.default_rng(77)
    for _ in range(100):
        dets, gts = random_scene(rng)
        mapped = [Detection(d.bbox, d.confidence**3, d.frame) for d in dets]
        assert average_precision(mapped, gts) == average_precision(dets, gts)


def test_ap_degrades_with_misses():
    gt = [BBox(100, 100, 160, 150), BBox(400, 300, 470, 380)]
    clean, missy = [], []
    for seed in range(200):
        for mp, acc in ((0.0, clean), (0.5, missy)):
            noise = DetectorNoise(corner_sigma=2.0, miss_prob=mp, false_positive_rate=0.3, conf_range=(0.3, 1.0))
            dets = simulate_detections(gt, noise, np.random.default_rng(seed))
            acc.append(average_precision(dets, gt))
    assert np.mean(clean) >= np.mean(missy)


def test_select_target():
    assert select_target([]) is None
    small = Detection(BBox(0, 0, 64, 64), 0.9)
    big = Detection(BBox(300, 300, 400, 400), 0.9)
    assert select_target([small, big]) is big
    # equal areas: the one nearer the image centre wins (c_x 0.45 vs 0.3)
    a = Detection(BBox(160, 0, 224, 64), 0.9)  # c_x = 0.3
    b = Detection(BBox(256, 0, 320, 64), 0.9)  # c_x = 0.45
    assert select_target([a, b]) is b
    assert select_target([big], conf_threshold=0.95) is None
    # full tie: first wins
    c = Detection(BBox(256, 100, 320, 164), 0.9)
    assert select_target([b, c]) is b
