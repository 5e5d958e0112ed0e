"""Windowed joint motion, resting baseline, activity level and self-touch."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cogload.kinematics import (
    SIGMA_FLOOR,
    InsufficientHistory,
    MotionBaseline,
    MotionTracker,
    SegmentTooShort,
    SelfTouchDetector,
    activity_level,
    calibrate_baseline,
    detect_self_touch,
    windowed_motion,
)
from cogload.records import UPPER_BODY_JOINTS, SkeletonSample

from oracles import path_length_oracle


def _skeleton(t, moves=None, **override):
    joints = {j: (0.1 * i, 1.0, 2.0) for i, j in enumerate(UPPER_BODY_JOINTS)}
    joints["head"] = (0.0, 1.6, 2.0)
    joints["neck"] = (0.0, 1.45, 2.0)
    joints["left_wrist"] = (-0.3, 1.0, 1.8)
    joints["right_wrist"] = (0.3, 1.0, 1.8)
    if moves:
        for j, p in moves.items():
            joints[j] = p
    joints.update(override)
    return SkeletonSample(t, joints)


def test_stationary_joint_has_zero_motion():
    hist = [(k / 10, (0.0, 0.0, 0.0)) for k in range(20)]
    assert windowed_motion(hist, 1.9, 1.0) == 0.0


def test_constant_speed_motion():
    # 0.1 m/s at 10 Hz: ten 1 cm segments in a 1 s window
    hist = [(k / 10, (0.01 * k, 0.0, 0.0)) for k in range(30)]
    assert windowed_motion(hist, 2.9, 1.0) == pytest.approx(0.1, abs=1e-12)


def test_single_sample_is_insufficient():
    with pytest.raises(InsufficientHistory):
        windowed_motion([(0.0, (0, 0, 0))], 0.0, 1.0)
    with pytest.raises(InsufficientHistory):
        windowed_motion([(0.0, (0, 0, 0)), (5.0, (1, 0, 0))], 5.0, 1.0)


paths = st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=40)


@settings(max_examples=100, deadline=None)
@given(paths, st.floats(0.2, 2.0))
def test_motion_matches_oracle_and_tracker(points, window):
    times = [k / 15 for k in range(len(points))]
    t_now = times[-1]
    hist = list(zip(times, points))
    try:
        want = path_length_oracle(times, points, t_now, window)
    except ValueError:
        with pytest.raises(InsufficientHistory):
            windowed_motion(hist, t_now, window)
        return
    assert windowed_motion(hist, t_now, window) == pytest.approx(want, abs=1e-9)
    tracker = MotionTracker(window, joints=("head",))
    for t, p in hist:
        tracker.add(SkeletonSample(t, {"head": p}))
    assert tracker.motion(t_now)["head"] == pytest.approx(want, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(paths, st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5)), st.integers(0, 10_000))
def test_motion_rigid_invariance(points, shift, seed):
    rot = Rotation.random(random_state=seed)
    moved = [tuple(rot.apply(p) + np.asarray(shift)) for p in points]
    times = [k / 15 for k in range(len(points))]
    a = windowed_motion(list(zip(times, points)), times[-1], 10.0)
    b = windowed_motion(list(zip(times, moved)), times[-1], 10.0)
    assert b == pytest.approx(a, abs=1e-9)


def test_streaming_tracker_over_long_run():
    rng = np.random.default_rng(3)
    pts = np.cumsum(rng.normal(0, 0.01, (600, 3)), axis=0)
    times = np.arange(600) / 15
    tracker = MotionTracker(1.0, joints=("neck",))
    for k, (t, p) in enumerate(zip(times, pts)):
        tracker.add(SkeletonSample(float(t), {"neck": tuple(p)}))
        if k >= 1:
            got = tracker.motion(float(t))["neck"]
            assert got == pytest.approx(path_length_oracle(times[: k + 1], pts[: k + 1], t, 1.0), abs=1e-9)


def test_still_skeleton_baseline_is_floored():
    samples = [_skeleton(k / 15) for k in range(15 * 31)]
    base = calibrate_baseline(samples)
    assert all(v == 0.0 for v in base.mean.values())
    assert all(v == SIGMA_FLOOR for v in base.std.values())
    assert set(base.mean) == set(UPPER_BODY_JOINTS)


def test_baseline_of_known_window_sums():
    # step sizes chosen so each 1 s window (at 1 Hz sampling: one segment) sums to 0.01, 0.02, 0.03 repeating
    steps = [0.01, 0.02, 0.03] * 12
    x = np.concatenate([[0.0], np.cumsum(steps)])
    samples = [SkeletonSample(float(k), {j: (float(x[k]), 0.0, 0.0) for j in UPPER_BODY_JOINTS}) for k in range(len(x))]
    base = calibrate_baseline(samples, window=1.0, loop_rate=1.0)
    sums = steps  # one segment per loop after the first
    assert base.mean["neck"] == pytest.approx(np.mean(sums), abs=1e-12)
    assert base.std["neck"] == pytest.approx(max(np.std(sums, ddof=1), SIGMA_FLOOR), abs=1e-12)


def test_short_segment_rejected():
    with pytest.raises(SegmentTooShort):
        calibrate_baseline([_skeleton(k / 15) for k in range(150)])


BASE = MotionBaseline({"a": 0.02, "b": 0.03}, {"a": 0.004, "b": 0.005}, 30.0)


def test_activity_examples():
    assert activity_level({"a": 0.02, "b": 0.03}, BASE).level == 0.0
    single = MotionBaseline({"a": 0.02}, {"a": 0.004}, 30.0)
    s = activity_level({"a": 0.02 + 2 * 0.004}, single)
    assert s.per_joint["a"] == pytest.approx(1.0, abs=1e-12) and s.level == pytest.approx(1.0, abs=1e-12)
    two = activity_level({"a": 0.02 + 1.5 * 0.004, "b": 0.03}, BASE)
    assert two.level == pytest.approx(0.25, abs=1e-12)
    capped = activity_level({"a": 1.0, "b": 1.0}, BASE)
    assert capped.level == 1.0 and capped.per_joint["a"] > 1.0


def test_activity_skips_missing_motion():
    s = activity_level({"a": None, "b": 0.03 + 3 * 0.005}, BASE)
    assert s.per_joint == {"b": pytest.approx(2.0)}
    with pytest.raises(InsufficientHistory):
        activity_level({"a": None, "b": None}, BASE)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.floats(0, 0.1), st.floats(1e-3, 0.1))
def test_activity_bounds_and_zero_joint(motions, mu, sigma):
    names = [f"j{i}" for i in range(len(motions))]
    base = MotionBaseline({n: mu for n in names + ["still"]}, {n: sigma for n in names + ["still"]}, 30)
    s = activity_level(dict(zip(names, motions)), base)
    assert 0.0 <= s.level <= 1.0
    assert all(v >= 0 for v in s.per_joint.values())
    with_still = activity_level({**dict(zip(names, motions)), "still": mu}, base)
    assert with_still.level <= s.level


def test_activity_continuous_at_trigger():
    single = MotionBaseline({"a": 0.02}, {"a": 0.004}, 30.0)
    s = activity_level({"a": 0.02 + 0.004 * (1 + 1e-9)}, single)
    assert 0.0 <= s.level < 1e-8


def test_self_touch_examples():
    det = SelfTouchDetector(0.15, 2.0)
    ev = detect_self_touch(_skeleton(0.0, left_wrist=(0.0, 1.6, 2.0)), det)
    assert ev is not None and ev.hand == "left" and ev.t == 0.0
    det = SelfTouchDetector(0.15, 2.0)
    assert detect_self_touch(_skeleton(0.0, left_wrist=(0.0, 1.1, 2.0)), det) is None


def test_self_touch_debounce_oscillation():
    det = SelfTouchDetector(0.15, 2.0)
    events = []
    # 5 Hz in/out for 1 s, sampled at 30 Hz
    for k in range(31):
        t = k / 30
        inside = math.sin(2 * math.pi * 5 * t + 0.1) > 0
        wrist = (0.0, 1.55, 2.0) if inside else (0.4, 1.0, 1.8)
        events.extend(det.update(_skeleton(t, right_wrist=wrist)))
    assert len(events) == 1 and events[0].hand == "right"


def test_self_touch_refires_after_debounce():
    det = SelfTouchDetector(0.15, 2.0)
    near, far = (0.0, 1.5, 2.0), (0.5, 1.0, 1.8)
    out = []
    for t, w in [(0.0, near), (1.0, far), (1.5, near), (2.0, far), (2.5, near), (3.0, near)]:
        out.extend(det.update(_skeleton(t, left_wrist=w)))
    assert [e.t for e in out] == [0.0, 2.5]
