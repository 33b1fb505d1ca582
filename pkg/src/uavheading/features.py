"""Bounding-box features fed to the heading regressor.

    c_x = (x1 + x2) / (2 W)      c_y = (y1 + y2) / (2 H)
    A   = (x2 - x1)(y2 - y1) / (W H)
    alpha = (y2 - y1) / (x2 - x1)

with W = H = 640 for the default camera.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .detect import BBox
from .geom import CameraModel

N_FEATURES = 4


class DegenerateBoxError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVec:
    c_x: float
    c_y: float
    area: float
    aspect: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


def extract_features(b: BBox, cam: CameraModel | None = None) -> FeatureVec:
    w = 640.0 if cam is None else cam.width_px
    h = 640.0 if cam is None else cam.height_px
    bw = b.x2 - b.x1
    bh = b.y2 - b.y1
    if bw <= 0 or bh <= 0:
        raise DegenerateBoxError(f"zero-size box {b.as_tuple()}")
    return FeatureVec(
        c_x=(b.x1 + b.x2) / (2 * w),
        c_y=(b.y1 + b.y2) / (2 * h),
        area=bw * bh / (w * h),
        aspect=bh / bw,
    )


def stack_features(feats) -> np.ndarray:
    """(n, 4) design matrix from a sequence of FeatureVec."""
    return np.array([astuple(f) for f in feats], dtype=float).reshape(-1, N_FEATURES)
