"""Synthetic heading dataset: UGV trajectories, frame assembly, splits, I/O.

Each usable frame runs the same chain the deployed system would see:
project the UGV box into the stationary UAV camera, pass it through the
detector oracle, pick the target, extract box features and label the frame
with the true relative heading.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .detect import BBox, DetectorNoise, select_target, simulate_detections
from .features import FeatureVec, extract_features, stack_features
from .geom import CameraModel, Pose, UgvShape, mirror_pose, project_ugv_bbox, relative_heading
from .seeding import substream

FORMAT_NAME = "uavheading-dataset"
FORMAT_VERSION = 1
SPLITS = ("train", "val", "test")
TRAJECTORY_KINDS = ("line", "arc", "lissajous", "random_walk")


class GenerationError(RuntimeError):
    pass


class DatasetFormatError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class DatasetValidationError(ValueError):
    def __init__(self, line: int, fld: str, msg: str):
        super().__init__(f"line {line}: field {fld!r}: {msg}")
        self.line = line
        self.field = fld


@dataclass(frozen=True)
class Trajectory:
    """Planar UGV path. Only the parameters of `kind` are used.

    line:        start + velocity * t
    arc:         center + radius * (cos, sin)(phase + angular_rate * t)
    lissajous:   center + amplitude * (sin(fx t + phase), sin(fy t))
    random_walk: start + cumulative N(0, step_std^2) steps per axis
    """

    kind: str
    duration_steps: int
    dt: float = 1.0 / 30.0
    start: tuple[float, float] = (5.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    center: tuple[float, float] = (5.5, 0.0)
    radius: float = 1.0
    angular_rate: float = 0.5
    phase: float = 0.0
    amplitude: tuple[float, float] = (2.0, 1.5)
    frequency: tuple[float, float] = (0.3, 0.5)
    step_std: float = 0.01
    yaw0: float = 0.0
    arena: tuple[float, float, float, float] = (3.0, 8.0, -2.0, 2.0)

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.duration_steps < 1:
            raise ValueError("duration_steps must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for name in ("start", "velocity", "center", "amplitude", "frequency"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "arena", tuple(float(v) for v in self.arena))


def _headings(vx: np.ndarray, vy: np.ndarray, yaw0: float) -> np.ndarray:
    """Direction of motion; held from the previous step while stopped."""
    yaw = np.empty(len(vx))
    last = yaw0
    moving = np.hypot(vx, vy) > 1e-12
    raw = np.arctan2(vy, vx)
    for i in range(len(vx)):
        if moving[i]:
            last = raw[i]
        yaw[i] = last
    return yaw


def trajectory_array(t: Trajectory, rng: np.random.Generator | None = None,
                     check_arena: bool = True) -> np.ndarray:
    """(n, 3) array of x, y, yaw for every step of the trajectory."""
    n = t.duration_steps
    ts = np.arange(n) * t.dt
    if t.kind == "line":
        x = t.start[0] + t.velocity[0] * ts
        y = t.start[1] + t.velocity[1] * ts
        vx = np.full(n, t.velocity[0])
        vy = np.full(n, t.velocity[1])
    elif t.kind == "arc":
        ang = t.phase + t.angular_rate * ts
        x = t.center[0] + t.radius * np.cos(ang)
        y = t.center[1] + t.radius * np.sin(ang)
        vx = -t.radius * t.angular_rate * np.sin(ang)
        vy = t.radius * t.angular_rate * np.cos(ang)
    elif t.kind == "lissajous":
        (ax, ay), (fx, fy) = t.amplitude, t.frequency
        x = t.center[0] + ax * np.sin(fx * ts + t.phase)
        y = t.center[1] + ay * np.sin(fy * ts)
        vx = ax * fx * np.cos(fx * ts + t.phase)
        vy = ay * fy * np.cos(fy * ts)
    else:
        if rng is None:
            raise ValueError("random_walk needs a random generator")
        steps = rng.normal(0.0, t.step_std, size=(n - 1, 2))
        xy = np.vstack([[t.start], t.start + np.cumsum(steps, axis=0)])
        x, y = xy[:, 0], xy[:, 1]
        vx = np.diff(x, append=x[-1])
        vy = np.diff(y, append=y[-1])
        # final step keeps the heading of the last move
        if n > 1:
            vx[-1], vy[-1] = vx[-2], vy[-2]
    out = np.column_stack([x, y, _headings(vx, vy, t.yaw0)])
    if check_arena:
        xmin, xmax, ymin, ymax = t.arena
        bad = (x < xmin) | (x > xmax) | (y < ymin) | (y > ymax)
        if bad.any():
            k = int(np.argmax(bad))
            raise GenerationError(
                f"{t.kind} trajectory leaves the arena at step {k}: ({x[k]:.3f}, {y[k]:.3f})"
            )
    return out


def gen_trajectory(t: Trajectory, rng: np.random.Generator | None = None) -> list[Pose]:
    return [Pose(float(x), float(y), 0.0, float(yaw)) for x, y, yaw in trajectory_array(t, rng)]


def default_trajectories(steps: int = 1800) -> tuple[Trajectory, ...]:
    """Runs covering the default arena with every UGV orientation."""
    return (
        Trajectory("lissajous", steps, center=(5.5, 0.0), amplitude=(2.3, 1.8), frequency=(0.31, 0.47)),
        Trajectory("arc", steps, center=(5.5, 0.0), radius=1.6, angular_rate=0.35),
        Trajectory("lissajous", steps, center=(5.5, 0.0), amplitude=(2.2, 1.7), frequency=(0.53, 0.29),
                   phase=1.0),
        Trajectory("arc", steps, center=(4.6, 0.6), radius=1.0, angular_rate=-0.55, phase=2.0),
        Trajectory("lissajous", steps, center=(5.6, 0.1), amplitude=(2.3, 1.8), frequency=(0.23, 0.71),
                   phase=2.5),
        Trajectory("arc", steps, center=(6.3, -0.5), radius=1.3, angular_rate=0.45, phase=4.0),
        Trajectory("line", 260, start=(3.4, -1.6), velocity=(0.5, 0.4)),
    )


@dataclass(frozen=True)
class WorldConfig:
    camera: CameraModel = field(default_factory=CameraModel)
    uav: Pose = field(default_factory=lambda: Pose(0.0, 0.0, 1.0, 0.0))
    shape: UgvShape = field(default_factory=UgvShape)
    trajectories: tuple[Trajectory, ...] = field(default_factory=default_trajectories)
    # extra UGVs stepped in lockstep with every run (multi-UGV scenes)
    distractors: tuple[Trajectory, ...] = ()
    noise: DetectorNoise = field(default_factory=DetectorNoise)
    conf_threshold: float = 0.25
    static_threshold: float = 1e-3
    mirror_augment: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> WorldConfig:
        d = dict(d)
        kw = {}
        if "camera" in d:
            kw["camera"] = CameraModel(**d.pop("camera"))
        if "uav" in d:
            kw["uav"] = Pose(**d.pop("uav"))
        if "shape" in d:
            kw["shape"] = UgvShape(**d.pop("shape"))
        if "noise" in d:
            kw["noise"] = DetectorNoise(**d.pop("noise"))
        for name in ("trajectories", "distractors"):
            if name in d:
                kw[name] = tuple(Trajectory(**t) for t in d.pop(name))
        unknown = set(d) - {"conf_threshold", "static_threshold", "mirror_augment"}
        if unknown:
            raise ValueError(f"unknown world config keys: {sorted(unknown)}")
        return cls(**kw, **d)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fingerprint(world: WorldConfig, target_count: int, seed: int) -> str:
    blob = _canonical({"world": world.to_dict(), "count": target_count, "seed": seed})
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class Sample:
    frame_index: int
    uav: Pose
    ugv: Pose
    bbox: BBox
    feat: FeatureVec
    theta: float
    split: str = "train"


@dataclass
class Dataset:
    samples: list[Sample]
    fingerprint: str
    camera: CameraModel = field(default_factory=CameraModel)
    header: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def split_counts(self) -> dict[str, int]:
        c = Counter(s.split for s in self.samples)
        return {k: c.get(k, 0) for k in SPLITS}

    def subset(self, split: str) -> list[Sample]:
        return [s for s in self.samples if s.split == split]

    def arrays(self, split: str) -> tuple[np.ndarray, np.ndarray]:
        """Feature matrix (n, 4) and targets (n,) of one split."""
        sub = self.subset(split)
        return stack_features(s.feat for s in sub), np.array([s.theta for s in sub], dtype=float)


def split_counts_for(n: int) -> dict[str, int]:
    n_val = n * 10 // 100
    n_test = n * 10 // 100
    return {"train": n - n_val - n_test, "val": n_val, "test": n_test}


def split_assign(n: int, seed: int) -> list[str]:
    """80/10/10 labels: floor counts for val and test, the rest is train."""
    if n < 10:
        raise ValueError("need at least 10 samples to split")
    counts = split_counts_for(n)
    perm = substream(seed, "split").permutation(n)
    labels = ["train"] * n
    for i in perm[: counts["val"]]:
        labels[i] = "val"
    for i in perm[counts["val"]: counts["val"] + counts["test"]]:
        labels[i] = "test"
    return labels


def _mirror_sample(s: Sample, cam: CameraModel, frame_index: int) -> Sample:
    b = s.bbox
    mb = BBox(cam.width_px - b.x2, b.y1, cam.width_px - b.x1, b.y2)
    ugv = mirror_pose(s.ugv, s.uav)
    return Sample(frame_index, s.uav, ugv, mb, extract_features(mb, cam), relative_heading(s.uav, ugv))


def build_dataset(world: WorldConfig, target_count: int = 9000, seed: int = 0) -> Dataset:
    if target_count < 10:
        raise ValueError("target_count must be >= 10")
    cam = world.camera
    runs = []
    for r, traj in enumerate(world.trajectories):
        main = trajectory_array(traj, substream(seed, "trajectory", r))
        extra = [trajectory_array(replace(d, duration_steps=max(d.duration_steps, traj.duration_steps)),
                                  substream(seed, "distractor", r, j))
                 for j, d in enumerate(world.distractors)]
        runs.append((main, extra))

    samples: list[Sample] = []
    frame_index = 0
    examined = static = lost = 0
    done = False
    for main, extra in runs:
        prev = None
        for k in range(len(main)):
            fi = frame_index
            frame_index += 1
            x, y, yaw = main[k]
            if prev is not None and math.hypot(x - prev[0], y - prev[1]) < world.static_threshold:
                static += 1
                continue
            prev = (x, y)
            examined += 1
            ugvs = [Pose(float(x), float(y), 0.0, float(yaw))]
            ugvs += [Pose(float(e[k, 0]), float(e[k, 1]), 0.0, float(e[k, 2])) for e in extra]
            boxes, owners = [], []
            for j, ugv in enumerate(ugvs):
                b = project_ugv_bbox(cam, world.uav, ugv, world.shape)
                if b is not None:
                    boxes.append(b)
                    owners.append(j)
            dets = simulate_detections(boxes, world.noise, substream(seed, "detector", fi), frame=fi,
                                       width=cam.width_px, height=cam.height_px)
            sel = select_target(dets, world.conf_threshold, cam.width_px)
            if sel is None or sel.source < 0:
                lost += 1
                continue
            ugv = ugvs[owners[sel.source]]
            samples.append(Sample(fi, world.uav, ugv, sel.bbox, extract_features(sel.bbox, cam),
                                  relative_heading(world.uav, ugv)))
            if world.mirror_augment and len(samples) < target_count:
                samples.append(_mirror_sample(samples[-1], cam, -1))
            if len(samples) >= target_count:
                done = True
                break
        if done:
            break

    usable = len(samples)
    stats = {"frames": frame_index, "examined": examined, "static_dropped": static,
             "lost": lost, "usable": usable,
             "yield": (examined - lost) / examined if examined else 0.0}
    if usable < target_count:
        raise GenerationError(
            f"only {usable} usable frames for a target of {target_count} "
            f"(yield {stats['yield']:.1%} over {examined} examined frames)"
        )
    if world.mirror_augment:
        # mirrored frames get indices after every simulated frame
        nxt = frame_index
        fixed = []
        for s in samples:
            if s.frame_index < 0:
                s = replace(s, frame_index=nxt)
                nxt += 1
            fixed.append(s)
        samples = fixed
    labels = split_assign(len(samples), seed)
    samples = [replace(s, split=lab) for s, lab in zip(samples, labels)]
    fp = fingerprint(world, target_count, seed)
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "fingerprint": fp, "seed": seed,
              "count": len(samples), "camera": asdict(cam), "world": world.to_dict()}
    return Dataset(samples, fp, cam, header, stats)


# -- persistence -------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def sample_to_record(s: Sample) -> dict:
    return {
        "frame": s.frame_index,
        "uav": [s.uav.x, s.uav.y, s.uav.z, s.uav.yaw],
        "ugv": [s.ugv.x, s.ugv.y, s.ugv.z, s.ugv.yaw],
        "bbox": list(s.bbox.as_tuple()),
        "feat": [s.feat.c_x, s.feat.c_y, s.feat.area, s.feat.aspect],
        "theta": s.theta,
        "split": s.split,
    }


def dumps_dataset(ds: Dataset) -> str:
    lines = [_dumps(ds.header)]
    lines += [_dumps(sample_to_record(s)) for s in ds.samples]
    return "\n".join(lines) + "\n"


def save_dataset(ds: Dataset, path) -> None:
    Path(path).write_text(dumps_dataset(ds))


_RECORD_KEYS = ("frame", "uav", "ugv", "bbox", "feat", "theta", "split")


def _parse_record(rec, lineno: int, cam: CameraModel) -> Sample:
    if not isinstance(rec, dict) or tuple(rec) != _RECORD_KEYS:
        raise DatasetFormatError(lineno, f"expected keys {list(_RECORD_KEYS)}")

    def vec(name, n):
        v = rec[name]
        if not (isinstance(v, list) and len(v) == n and all(isinstance(a, (int, float)) for a in v)):
            raise DatasetFormatError(lineno, f"{name} must be a list of {n} numbers")
        return [float(a) for a in v]

    if not isinstance(rec["frame"], int):
        raise DatasetFormatError(lineno, "frame must be an integer")
    if not isinstance(rec["theta"], (int, float)):
        raise DatasetFormatError(lineno, "theta must be a number")
    uav_v, ugv_v, box_v, feat_v = vec("uav", 4), vec("ugv", 4), vec("bbox", 4), vec("feat", 4)
    try:
        uav = Pose(*uav_v)
    except ValueError as e:
        raise DatasetValidationError(lineno, "uav", str(e)) from None
    try:
        ugv = Pose(*ugv_v)
    except ValueError as e:
        raise DatasetValidationError(lineno, "ugv", str(e)) from None
    if uav.yaw != uav_v[3]:
        raise DatasetValidationError(lineno, "uav", "yaw not wrapped to (-pi, pi]")
    if ugv.yaw != ugv_v[3]:
        raise DatasetValidationError(lineno, "ugv", "yaw not wrapped to (-pi, pi]")
    try:
        bbox = BBox(*box_v)
    except ValueError as e:
        raise DatasetValidationError(lineno, "bbox", str(e)) from None
    if bbox.x2 > cam.width_px or bbox.y2 > cam.height_px:
        raise DatasetValidationError(lineno, "bbox", "box extends past the image")
    feat = FeatureVec(*feat_v)
    if feat != extract_features(bbox, cam):
        raise DatasetValidationError(lineno, "feat", "does not match features recomputed from bbox")
    theta = float(rec["theta"])
    try:
        expected = relative_heading(uav, ugv)
    except ValueError as e:
        raise DatasetValidationError(lineno, "ugv", str(e)) from None
    if theta != expected:
        raise DatasetValidationError(lineno, "theta", f"{theta!r} != relative heading {expected!r}")
    if rec["split"] not in SPLITS:
        raise DatasetValidationError(lineno, "split", f"unknown split {rec['split']!r}")
    return Sample(rec["frame"], uav, ugv, bbox, feat, theta, rec["split"])


def loads_dataset(text: str) -> Dataset:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetFormatError(1, "empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise DatasetFormatError(1, f"bad header: {e.msg}") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
        raise DatasetFormatError(1, "not a uavheading dataset")
    if header.get("version") != FORMAT_VERSION:
        raise DatasetFormatError(1, f"unsupported version {header.get('version')!r}")
    try:
        cam = CameraModel(**header["camera"])
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetFormatError(1, f"bad camera block: {e}") from None
    samples = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(lineno, e.msg) from None
        s = _parse_record(rec, lineno, cam)
        if s.frame_index in seen:
            raise DatasetValidationError(lineno, "frame", f"duplicate frame {s.frame_index}")
        seen.add(s.frame_index)
        samples.append(s)
    ds = Dataset(samples, header.get("fingerprint", ""), cam, header)
    if len(samples) >= 10:
        want = split_counts_for(len(samples))
        got = ds.split_counts()
        for k in SPLITS:
            if abs(got[k] - want[k]) > 1:
                raise DatasetValidationError(
                    len(lines), "split", f"{k} has {got[k]} samples, expected {want[k]} +/- 1"
                )
    return ds


def load_dataset(path) -> Dataset:
    return loads_dataset(Path(path).read_text())
