import json
import math
from dataclasses import replace

import numpy as np
import pytest

from uavheading.data import (
    Dataset,
    DatasetFormatError,
    DatasetValidationError,
    GenerationError,
    Trajectory,
    WorldConfig,
    build_dataset,
    dumps_dataset,
    fingerprint,
    gen_trajectory,
    load_dataset,
    loads_dataset,
    save_dataset,
    split_assign,
    trajectory_array,
)
from uavheading.detect import DetectorNoise
from uavheading.features import extract_features
from uavheading.geom import mirror_pose, project_ugv_bbox, relative_heading
from uavheading.seeding import substream


def test_line_at_rest():
    poses = gen_trajectory(Trajectory("line", 50, start=(4.0, 1.0), yaw0=0.3))
    assert all((p.x, p.y, p.yaw) == (4.0, 1.0, 0.3) for p in poses)


def test_arc_closes():
    n = 301
    rate = 2 * math.pi / ((n - 1) * (1 / 30))
    xy = trajectory_array(Trajectory("arc", n, center=(5.5, 0.0), radius=1.5, angular_rate=rate))
    assert np.hypot(*(xy[0, :2] - xy[-1, :2])) < 1e-9


def test_heading_follows_motion():
    xy = trajectory_array(Trajectory("line", 10, start=(4.0, 0.0), velocity=(0.0, 0.3)))
    assert np.allclose(xy[:, 2], math.pi / 2)
    arc = trajectory_array(Trajectory("arc", 100, center=(5.5, 0.0), radius=1.0, angular_rate=0.5))
    # counter-clockwise circle: heading leads the radial angle by 90 degrees
    ang = np.arctan2(arc[:, 1], arc[:, 0] - 5.5)
    assert np.allclose(np.cos(arc[:, 2] - ang - math.pi / 2), 1.0)


def test_random_walk_msd():
    n, sigma = 10_000, 0.1
    t = Trajectory("random_walk", n, start=(0.0, 0.0), step_std=sigma, arena=(-1e9, 1e9, -1e9, 1e9))
    ends = np.array([trajectory_array(t, substream(0, "walk", i))[-1, :2] for i in range(1000)])
    # n - 1 increments separate first and last pose
    msd = (ends**2).mean(axis=0)
    assert msd == pytest.approx(np.full(2, sigma**2 * (n - 1)), rel=0.10)


def test_random_walk_deterministic():
    t = Trajectory("random_walk", 200, step_std=0.01)
    a = trajectory_array(t, substream(5, "x"))
    b = trajectory_array(t, substream(5, "x"))
    np.testing.assert_array_equal(a, b)


def test_arena_exit_names_step():
    t = Trajectory("line", 100, start=(7.5, 0.0), velocity=(3.0, 0.0))
    with pytest.raises(GenerationError, match="step 6"):
        trajectory_array(t)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory("spiral", 10)
    with pytest.raises(ValueError):
        Trajectory("line", 0)


def test_split_examples():
    for n, want in ((10, (8, 1, 1)), (9000, (7200, 900, 900)), (11, (9, 1, 1))):
        lab = split_assign(n, 0)
        assert (lab.count("train"), lab.count("val"), lab.count("test")) == want
    assert split_assign(50, 1) == split_assign(50, 1)
    assert split_assign(50, 1) != split_assign(50, 2)


def test_noiseless_yield_and_split(small_dataset):
    ds = small_dataset
    assert ds.stats["yield"] == 1.0
    assert ds.split_counts() == {"train": 320, "val": 40, "test": 40}
    assert len({s.frame_index for s in ds.samples}) == len(ds.samples)


def test_binomial_yield():
    world = WorldConfig(noise=DetectorNoise(miss_prob=0.5))
    ds = build_dataset(world, 5000, seed=1)
    assert ds.stats["examined"] >= 9000
    assert abs(ds.stats["yield"] - 0.5) <= 0.03


def test_too_few_frames():
    world = WorldConfig(trajectories=(Trajectory("line", 30, start=(5.0, 0.0), velocity=(0.1, 0.0)),))
    with pytest.raises(GenerationError, match="yield"):
        build_dataset(world, 100, seed=0)


def test_static_frames_dropped():
    world = WorldConfig(trajectories=(Trajectory("line", 40, start=(5.0, 0.0)),
                                      Trajectory("line", 40, start=(5.0, 0.5), velocity=(0.1, 0.0))))
    ds = build_dataset(world, 41, seed=0)
    assert ds.stats["static_dropped"] == 39


def test_self_consistent(small_dataset):
    for s in small_dataset.samples:
        assert s.feat == extract_features(s.bbox)
        assert s.theta == relative_heading(s.uav, s.ugv)


def test_mirror_property(small_dataset):
    world = WorldConfig()
    for s in small_dataset.samples[::7]:
        m = mirror_pose(s.ugv, s.uav)
        f = extract_features(project_ugv_bbox(world.camera, s.uav, m, world.shape))
        assert f.c_x == pytest.approx(1 - s.feat.c_x, abs=1e-9)
        assert relative_heading(s.uav, m) == pytest.approx(-s.theta, abs=1e-12)


def test_mirror_augmentation():
    ds = build_dataset(WorldConfig(mirror_augment=True), 200, seed=2)
    assert len(ds.samples) == 200
    sims = [s for s in ds.samples if s.frame_index < ds.stats["frames"]]
    mirrored = [s for s in ds.samples if s.frame_index >= ds.stats["frames"]]
    assert len(sims) == len(mirrored) == 100
    for a, b in zip(sims, mirrored):
        assert b.feat.c_x == pytest.approx(1 - a.feat.c_x, abs=1e-12)
        assert b.theta == pytest.approx(-a.theta, abs=1e-12)
    loads_dataset(dumps_dataset(ds))


def test_bytes_deterministic():
    a = dumps_dataset(build_dataset(WorldConfig(), 120, seed=9))
    b = dumps_dataset(build_dataset(WorldConfig(), 120, seed=9))
    assert a == b
    assert a != dumps_dataset(build_dataset(WorldConfig(), 120, seed=10))


def test_fingerprint():
    w = WorldConfig()
    assert fingerprint(w, 100, 0) == fingerprint(WorldConfig(), 100, 0)
    assert fingerprint(w, 100, 0) != fingerprint(w, 100, 1)
    assert fingerprint(w, 100, 0) != fingerprint(replace(w, conf_threshold=0.3), 100, 0)


def test_world_dict_round_trip():
    w = WorldConfig(noise=DetectorNoise(1.0, 0.1, 0.2, (0.4, 0.9)), mirror_augment=True)
    assert WorldConfig.from_dict(json.loads(json.dumps(w.to_dict()))) == w
    with pytest.raises(ValueError):
        WorldConfig.from_dict({"bogus": 1})


def test_save_load_save(tmp_path, small_dataset):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_dataset(small_dataset, p1)
    ds = load_dataset(p1)
    save_dataset(ds, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert ds.samples == small_dataset.samples


def _edit_line(text, k, fn):
    lines = text.split("\n")
    rec = json.loads(lines[k])
    fn(rec)
    lines[k] = json.dumps(rec, separators=(",", ":"))
    return "\n".join(lines)


def test_corrupted_theta(small_dataset):
    text = dumps_dataset(small_dataset)
    # list index 5 is file line 6 (1-based)
    bad = _edit_line(text, 5, lambda r: r.__setitem__("theta", r["theta"] + 1e-12))
    with pytest.raises(DatasetValidationError) as e:
        loads_dataset(bad)
    assert e.value.line == 6 and e.value.field == "theta"


def test_corrupted_feat_and_parse_errors(small_dataset):
    text = dumps_dataset(small_dataset)
    bad = _edit_line(text, 3, lambda r: r["feat"].__setitem__(0, 0.5))
    with pytest.raises(DatasetValidationError, match="feat"):
        loads_dataset(bad)
    lines = text.split("\n")
    lines[7] = lines[7][:-3]
    with pytest.raises(DatasetFormatError) as e:
        loads_dataset("\n".join(lines))
    assert e.value.line == 8
    with pytest.raises(DatasetFormatError):
        loads_dataset('{"format":"other"}\n')


def _with_counts(ds, train, val, test):
    labels = ["train"] * train + ["val"] * val + ["test"] * test
    return Dataset([replace(s, split=lab) for s, lab in zip(ds.samples, labels)], ds.fingerprint,
                   ds.camera, ds.header)


def test_split_tolerance():
    ds = build_dataset(WorldConfig(), 100, seed=4)
    loads_dataset(dumps_dataset(_with_counts(ds, 81, 10, 9)))
    with pytest.raises(DatasetValidationError, match="split"):
        loads_dataset(dumps_dataset(_with_counts(ds, 70, 20, 10)))
