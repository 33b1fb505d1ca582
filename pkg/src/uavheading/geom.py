"""World-frame poses, angle arithmetic and the forward pinhole camera.

World frame: x forward/east, y left/north, z up; yaw is measured about +z
from the +x axis. The camera sits at the UAV position, looks along the UAV
yaw and may be pitched down. Image u grows to the UAV's right and v grows
downward, so a target at positive relative bearing (to the left) lands at
u < cx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EPS_DEPTH = 1e-6
MIN_BOX_PX = 1.0


class DegenerateGeometryError(ValueError):
    """Raised when a heading is requested between coincident positions."""


def wrap_angle(theta: float) -> float:
    """Wrap an angle in radians to the half-open interval (-pi, pi]."""
    if not math.isfinite(theta):
        raise ValueError(f"cannot wrap non-finite angle {theta!r}")
    w = math.remainder(theta, 2.0 * math.pi)  # [-pi, pi]
    if w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z", "yaw"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Pose.{name} must be finite")
        if self.z < 0.0:
            raise ValueError(f"Pose.z must be >= 0 (floor at z=0), got {self.z}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def with_yaw(self, yaw: float) -> Pose:
        return Pose(self.x, self.y, self.z, yaw)


@dataclass(frozen=True)
class CameraModel:
    focal_px: float = 320.0
    cx_px: float = 320.0
    cy_px: float = 320.0
    width_px: float = 640.0
    height_px: float = 640.0
    pitch: float = 0.0

    def __post_init__(self):
        if not self.focal_px > 0:
            raise ValueError("focal_px must be positive")
        if not (0 <= self.cx_px <= self.width_px and 0 <= self.cy_px <= self.height_px):
            raise ValueError("principal point must lie inside the image")

    @property
    def hfov(self) -> float:
        """Full horizontal field of view in radians."""
        return math.atan2(self.cx_px, self.focal_px) + math.atan2(
            self.width_px - self.cx_px, self.focal_px
        )


@dataclass(frozen=True)
class UgvShape:
    length: float = 0.99
    width: float = 0.67
    height: float = 0.39

    def __post_init__(self):
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError("UGV dimensions must be strictly positive")


def heading_true(uav: Pose, ugv: Pose) -> float:
    """World-frame bearing from the UAV to the UGV, atan2 of the planar offset."""
    dx = ugv.x - uav.x
    dy = ugv.y - uav.y
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometryError("UAV and UGV share the same planar position")
    return math.atan2(dy, dx)


def relative_heading(uav: Pose, ugv: Pose) -> float:
    """Bearing of the UGV in the UAV body frame; 0 is dead ahead, + is left."""
    return wrap_angle(heading_true(uav, ugv) - uav.yaw)


def camera_axes(cam: CameraModel, uav: Pose) -> np.ndarray:
    """Rows are the camera forward, right and image-down unit vectors."""
    cy, sy = math.cos(uav.yaw), math.sin(uav.yaw)
    cp, sp = math.cos(cam.pitch), math.sin(cam.pitch)
    fwd = np.array([cy * cp, sy * cp, -sp])
    right = np.array([sy, -cy, 0.0])
    down = np.cross(fwd, right)
    return np.stack([fwd, right, down])


def project_points(cam: CameraModel, uav: Pose, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project an (n, 3) array of world points.

    Returns (uv, visible): pixel coordinates (n, 2), NaN where the point is
    at or behind the image plane, and the boolean visibility mask.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    rel = pts - np.array([uav.x, uav.y, uav.z])
    cam_xyz = rel @ camera_axes(cam, uav).T
    depth = cam_xyz[:, 0]
    visible = depth > EPS_DEPTH
    uv = np.full((len(pts), 2), np.nan)
    d = depth[visible]
    uv[visible, 0] = cam.cx_px + cam.focal_px * cam_xyz[visible, 1] / d
    uv[visible, 1] = cam.cy_px + cam.focal_px * cam_xyz[visible, 2] / d
    return uv, visible


def project_point(cam: CameraModel, uav: Pose, p_world) -> tuple[float, float] | None:
    uv, visible = project_points(cam, uav, np.asarray(p_world, dtype=float))
    if not visible[0]:
        return None
    return float(uv[0, 0]), float(uv[0, 1])


def ugv_corners(ugv: Pose, shape: UgvShape) -> np.ndarray:
    """The 8 corners of the yaw-oriented UGV box resting at height ugv.z."""
    c, s = math.cos(ugv.yaw), math.sin(ugv.yaw)
    hl, hw = shape.length / 2.0, shape.width / 2.0
    out = np.empty((8, 3))
    i = 0
    for a in (-hl, hl):
        for b in (-hw, hw):
            for h in (0.0, shape.height):
                out[i] = (ugv.x + a * c - b * s, ugv.y + a * s + b * c, ugv.z + h)
                i += 1
    return out


def project_ugv_bbox(cam: CameraModel, uav: Pose, ugv: Pose, shape: UgvShape):
    """Axis-aligned image hull of the UGV box, clipped to the frame.

    Returns None when fewer than 4 corners are in front of the camera or
    the clipped box is thinner than one pixel.
    """
    from .detect import BBox

    uv, visible = project_points(cam, uav, ugv_corners(ugv, shape))
    if visible.sum() < 4:
        return None
    uv = uv[visible]
    x1 = min(max(float(uv[:, 0].min()), 0.0), cam.width_px)
    x2 = min(max(float(uv[:, 0].max()), 0.0), cam.width_px)
    y1 = min(max(float(uv[:, 1].min()), 0.0), cam.height_px)
    y2 = min(max(float(uv[:, 1].max()), 0.0), cam.height_px)
    if x2 - x1 < MIN_BOX_PX or y2 - y1 < MIN_BOX_PX:
        return None
    return BBox(x1, y1, x2, y2)


def mirror_pose(ugv: Pose, uav: Pose) -> Pose:
    """Reflect a pose across the UAV's forward axis (vertical plane through it)."""
    c, s = math.cos(uav.yaw), math.sin(uav.yaw)
    dx, dy = ugv.x - uav.x, ugv.y - uav.y
    fwd = dx * c + dy * s
    left = -dx * s + dy * c
    x = uav.x + fwd * c + left * s
    y = uav.y + fwd * s - left * c
    return Pose(x, y, ugv.z, 2.0 * uav.yaw - ugv.yaw)
