"""Closed-loop yaw alignment: perceive, predict heading, turn, repeat."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from .data import Trajectory, trajectory_array
from .detect import BBox, Detection, DetectorNoise, select_target, simulate_detections
from .features import FeatureVec, extract_features
from .geom import CameraModel, Pose, UgvShape, project_ugv_bbox, relative_heading, wrap_angle
from .net import MlpParams, predict_one
from .seeding import substream

__all__ = [
    "ControlConfig", "SimWorld", "SimState", "FrameRecord", "EpisodeResult", "CampaignConfig",
    "CampaignResult", "MlpPredictor", "OraclePredictor", "ConstantPredictor", "select_target",
    "step", "run_episode", "run_campaign", "episode_success", "sample_episode_world",
]


class Predictor(Protocol):
    def __call__(self, feat: FeatureVec, det: Detection, uav: Pose, ugvs: list[Pose]) -> float: ...


@dataclass(frozen=True)
class MlpPredictor:
    params: MlpParams

    def __call__(self, feat, det, uav, ugvs) -> float:
        return predict_one(self.params, feat.as_array())


@dataclass(frozen=True)
class OraclePredictor:
    """Analytic heading from the true pose of the UGV that produced the box.

    Clutter boxes have no owner; for those the bearing is read off the box
    centre with the inverse pinhole model.
    """

    camera: CameraModel = field(default_factory=CameraModel)

    def __call__(self, feat, det, uav, ugvs) -> float:
        if 0 <= det.source < len(ugvs):
            return relative_heading(uav, ugvs[det.source])
        u = feat.c_x * self.camera.width_px
        return math.atan2(self.camera.cx_px - u, self.camera.focal_px)


@dataclass(frozen=True)
class ConstantPredictor:
    value: float = 0.0

    def __call__(self, feat, det, uav, ugvs) -> float:
        return self.value


@dataclass(frozen=True)
class ControlConfig:
    gain: float = 0.5
    max_yaw_rate: float = 2.0  # rad/s
    dt: float = 1.0 / 30.0
    success_band: float = 1.0  # degrees
    majority_fraction: float = 0.5
    conf_threshold: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.gain < 2.0:
            raise ValueError("gain must lie in (0, 2)")
        if not self.max_yaw_rate > 0 or not self.dt > 0 or not self.success_band > 0:
            raise ValueError("max_yaw_rate, dt and success_band must be positive")


@dataclass(frozen=True)
class SimWorld:
    """One episode's scene; ugvs[0] is the vehicle the UAV must align with."""

    camera: CameraModel = field(default_factory=CameraModel)
    uav: Pose = field(default_factory=lambda: Pose(0.0, 0.0, 1.0, 0.0))
    shape: UgvShape = field(default_factory=UgvShape)
    ugvs: tuple[Trajectory, ...] = (Trajectory("line", 1, start=(5.0, 0.0)),)
    noise: DetectorNoise = field(default_factory=DetectorNoise)


@dataclass(frozen=True)
class SimState:
    frame: int
    uav: Pose


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    uav: Pose
    ugv: Pose
    bbox: BBox | None
    theta_hat: float | None
    error_deg: float
    yaw_change: float


def step(state: SimState, world: SimWorld, ugvs: list[Pose], cfg: ControlConfig,
         predictor: Predictor, rng: np.random.Generator) -> tuple[SimState, FrameRecord]:
    """One control frame. `ugvs` are the UGV poses at this frame.

    The alignment error is the true bearing of ugvs[0] as seen before the yaw
    update. Perception failures leave the yaw unchanged.
    """
    boxes, owners = [], []
    for j, g in enumerate(ugvs):
        b = project_ugv_bbox(world.camera, state.uav, g, world.shape)
        if b is not None:
            boxes.append(b)
            owners.append(j)
    dets = simulate_detections(boxes, world.noise, rng, frame=state.frame,
                               width=world.camera.width_px, height=world.camera.height_px)
    dets = [d if d.source < 0 else replace(d, source=owners[d.source]) for d in dets]
    sel = select_target(dets, cfg.conf_threshold, world.camera.width_px)
    err = math.degrees(relative_heading(state.uav, ugvs[0]))
    theta_hat = None
    dyaw = 0.0
    uav = state.uav
    if sel is not None:
        feat = extract_features(sel.bbox, world.camera)
        theta_hat = float(predictor(feat, sel, state.uav, ugvs))
        if not math.isfinite(theta_hat):
            raise FloatingPointError(f"predictor returned {theta_hat} at frame {state.frame}")
        lim = cfg.max_yaw_rate * cfg.dt
        dyaw = min(max(cfg.gain * theta_hat, -lim), lim)
        uav = state.uav.with_yaw(wrap_angle(state.uav.yaw + dyaw))
    rec = FrameRecord(state.frame, state.uav, ugvs[0], None if sel is None else sel.bbox,
                      theta_hat, err, dyaw)
    return SimState(state.frame + 1, uav), rec


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    reason: str
    mean_abs_alignment_error: float
    max_abs_alignment_error: float
    frames: int
    lock_frame: int | None
    trace: tuple[FrameRecord, ...]

    @property
    def post_lock_errors(self) -> np.ndarray:
        start = 0 if self.lock_frame is None else self.lock_frame
        return np.abs([r.error_deg for r in self.trace[start:]])


def episode_success(errors_deg, band: float = 1.0, majority: float = 0.5,
                    acquired: bool = True) -> tuple[bool, str, int | None]:
    """Success iff, from the first in-band frame on, more than `majority` of frames are in band."""
    e = np.abs(np.asarray(errors_deg, dtype=float))
    if not acquired:
        return False, "no-acquisition", None
    inband = e < band
    if not inband.any():
        return False, "no-lock", None
    lock = int(np.argmax(inband))
    frac = float(inband[lock:].mean())
    if frac > majority:
        return True, "ok", lock
    return False, "majority-out-of-band", lock


def ugv_tracks(world: SimWorld, frames: int, seed: int) -> list[list[Pose]]:
    tracks = []
    for j, t in enumerate(world.ugvs):
        arr = trajectory_array(replace(t, duration_steps=max(frames, t.duration_steps)),
                               substream(seed, "episode-ugv", j))
        tracks.append([Pose(float(x), float(y), 0.0, float(yaw)) for x, y, yaw in arr[:frames]])
    return tracks


def run_episode(world: SimWorld, cfg: ControlConfig, predictor: Predictor,
                frames: int = 300, seed: int = 0) -> EpisodeResult:
    if frames < 10:
        raise ValueError("an episode needs at least 10 frames")
    tracks = ugv_tracks(world, frames, seed)
    state = SimState(0, world.uav)
    trace = []
    for k in range(frames):
        state, rec = step(state, world, [tr[k] for tr in tracks], cfg, predictor,
                          substream(seed, "detector", k))
        trace.append(rec)
    acquired = any(r.bbox is not None for r in trace)
    errs = [r.error_deg for r in trace]
    ok, reason, lock = episode_success(errs, cfg.success_band, cfg.majority_fraction, acquired)
    post = np.abs(errs[lock or 0:])
    return EpisodeResult(ok, reason, float(post.mean()), float(post.max()), frames, lock, tuple(trace))


@dataclass(frozen=True)
class CampaignConfig:
    """Randomised episode scenes: the UGV is placed in the UAV's view at a random
    spot of the training arena (expressed in the UAV frame), with random UAV
    and UGV yaw."""

    camera: CameraModel = field(default_factory=CameraModel)
    uav_position: tuple[float, float, float] = (0.0, 0.0, 1.0)
    shape: UgvShape = field(default_factory=UgvShape)
    noise: DetectorNoise = field(default_factory=DetectorNoise)
    forward_range: tuple[float, float] = (3.5, 7.5)
    lateral_range: tuple[float, float] = (-1.8, 1.8)
    ugv_speed: float = 0.0  # m/s, straight line along the UGV yaw
    frames: int = 300
    dt: float = 1.0 / 30.0


def sample_episode_world(cc: CampaignConfig, rng: np.random.Generator) -> SimWorld:
    uav_yaw = rng.uniform(-math.pi, math.pi)
    fwd = rng.uniform(*cc.forward_range)
    lat = rng.uniform(*cc.lateral_range)
    ugv_yaw = rng.uniform(-math.pi, math.pi)
    c, s = math.cos(uav_yaw), math.sin(uav_yaw)
    x0, y0, z0 = cc.uav_position
    gx, gy = x0 + fwd * c - lat * s, y0 + fwd * s + lat * c
    v = (cc.ugv_speed * math.cos(ugv_yaw), cc.ugv_speed * math.sin(ugv_yaw))
    traj = Trajectory("line", cc.frames, dt=cc.dt, start=(gx, gy), velocity=v, yaw0=ugv_yaw,
                      arena=(-math.inf, math.inf, -math.inf, math.inf))
    return SimWorld(cc.camera, Pose(x0, y0, z0, uav_yaw), cc.shape, (traj,), cc.noise)


@dataclass(frozen=True)
class CampaignResult:
    episodes: tuple[EpisodeResult, ...]
    success_rate: float
    mean_abs_alignment_error: float
    max_abs_alignment_error: float


def run_campaign(cc: CampaignConfig, cfg: ControlConfig, predictor: Predictor,
                 n_episodes: int = 100, seed: int = 0, keep_traces: bool = True) -> CampaignResult:
    """Independent seeded episodes; error stats pool the post-lock frames of all episodes."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    eps, post = [], []
    for i in range(n_episodes):
        world = sample_episode_world(cc, substream(seed, "episode", i))
        ep_seed = int(substream(seed, "episode-seed", i).integers(2**63))
        ep = run_episode(world, cfg, predictor, cc.frames, ep_seed)
        post.append(ep.post_lock_errors)
        eps.append(ep if keep_traces else replace(ep, trace=()))
    pooled = np.concatenate(post)
    return CampaignResult(tuple(eps), sum(e.success for e in eps) / n_episodes,
                          float(pooled.mean()), float(max(e.max_abs_alignment_error for e in eps)))
