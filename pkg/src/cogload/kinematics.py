"""Upper-body kinematics: windowed joint motion, resting baseline, activity
level and self-touch detection from the skeleton stream."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .records import UPPER_BODY_JOINTS, SkeletonSample, Vec3

SIGMA_FLOOR = 1e-3  # metres per window
MIN_CALIBRATION = 30.0  # seconds
_EPS = 1e-9

HANDS = {"left": "left_wrist", "right": "right_wrist"}
TOUCH_TARGETS = ("head", "neck")


class InsufficientHistory(ValueError):
    pass


class SegmentTooShort(ValueError):
    pass


@dataclass(frozen=True)
class MotionBaseline:
    mean: dict[str, float]
    std: dict[str, float]
    duration: float


@dataclass(slots=True)
class ActivitySample:
    t: float
    per_joint: dict[str, float]
    level: float


@dataclass(frozen=True)
class SelfTouchEvent:
    t: float
    hand: str


def windowed_motion(history: Sequence[tuple[float, Vec3]], t_now: float, window: float) -> float:
    """Path length travelled by one joint over ``[t_now - window, t_now]``.

    ``history`` holds ``(t, position)`` pairs in time order.
    """
    pts = [p for t, p in history if t_now - window - _EPS <= t <= t_now]
    if len(pts) < 2:
        raise InsufficientHistory(f"{len(pts)} sample(s) in the motion window ending at t={t_now}")
    return sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))


class MotionTracker:
    """Streaming version of :func:`windowed_motion` for every tracked joint.

    Keeps, per joint, the segments between consecutive samples; a segment
    counts toward the window when its first endpoint lies inside it.
    """

    def __init__(self, window: float, joints: Iterable[str] = UPPER_BODY_JOINTS):
        self.window = window
        self.joints = tuple(joints)
        self._last: dict[str, tuple[float, Vec3]] = {}
        self._segments: dict[str, deque] = {j: deque() for j in self.joints}
        self._totals: dict[str, float] = {j: 0.0 for j in self.joints}

    def add(self, sample: SkeletonSample) -> None:
        t = sample.t
        last, segments, totals = self._last, self._segments, self._totals
        for j, p in sample.joints.items():
            if j not in totals:
                continue
            prev = last.get(j)
            if prev is not None:
                d = math.dist(prev[1], p)
                segments[j].append((prev[0], d))
                totals[j] += d
            last[j] = (t, p)

    def motion(self, t_now: float) -> dict[str, Optional[float]]:
        """Per-joint motion in the window ending at ``t_now``; ``None`` where
        fewer than two samples fall inside it."""
        start = t_now - self.window - _EPS
        out: dict[str, Optional[float]] = {}
        totals = self._totals
        for j, segs in self._segments.items():
            while segs and segs[0][0] < start:
                totals[j] -= segs.popleft()[1]
            if not segs:
                totals[j] = 0.0
                out[j] = None
            else:
                out[j] = max(totals[j], 0.0)
        return out


def baseline_from_motion(motion: Mapping[str, Sequence[float]], duration: float) -> MotionBaseline:
    mean, std = {}, {}
    for j, values in motion.items():
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            continue
        mean[j] = float(arr.mean())
        sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        std[j] = max(sd, SIGMA_FLOOR)
    return MotionBaseline(mean, std, duration)


def calibrate_baseline(
    samples: Sequence[SkeletonSample],
    window: float = 1.0,
    loop_rate: float = 15.0,
    min_duration: float = MIN_CALIBRATION,
) -> MotionBaseline:
    """Per-joint mean and sample standard deviation of the windowed motion,
    evaluated at every engine loop covered by ``samples``."""
    if not samples:
        raise SegmentTooShort("no skeleton samples in the calibration segment")
    t0, t1 = samples[0].t, samples[-1].t
    if t1 - t0 < min_duration:
        raise SegmentTooShort(f"calibration segment spans {t1 - t0:.3f} s, need {min_duration:g} s")
    tracker = MotionTracker(window)
    collected: dict[str, list[float]] = {j: [] for j in tracker.joints}
    i = 0
    k = math.ceil(t0 * loop_rate - _EPS)
    while k / loop_rate <= t1 + _EPS:
        t = k / loop_rate
        while i < len(samples) and samples[i].t <= t:
            tracker.add(samples[i])
            i += 1
        for j, m in tracker.motion(t).items():
            if m is not None:
                collected[j].append(m)
        k += 1
    return baseline_from_motion(collected, t1 - t0)


def activity_level(
    motion: Mapping[str, Optional[float]], baseline: MotionBaseline, t: float = 0.0
) -> ActivitySample:
    """Hyperactivity of one loop.

    A joint contributes ``delta / sigma - 1`` when its motion exceeds the
    resting mean by more than one standard deviation, else 0. Joints with no
    motion value or no baseline are left out of the mean.
    """
    per_joint: dict[str, float] = {}
    mean, std = baseline.mean, baseline.std
    for j, m in motion.items():
        if m is None or j not in mean:
            continue
        delta = m - mean[j]
        sigma = std[j]
        per_joint[j] = delta / sigma - 1.0 if delta > sigma else 0.0
    if not per_joint:
        raise InsufficientHistory("no joint has a motion value this loop")
    level = min(sum(per_joint.values()) / len(per_joint), 1.0)
    return ActivitySample(t, per_joint, level)


class SelfTouchDetector:
    """Wrist-to-head/neck proximity with a per-hand refractory period.

    An event fires when a wrist moves into range, unless the same hand fired
    less than ``debounce`` seconds before. Staying in range does not re-fire.
    """

    def __init__(self, distance: float = 0.15, debounce: float = 2.0):
        self.distance = distance
        self.debounce = debounce
        self._inside = {h: False for h in HANDS}
        self._last: dict[str, Optional[float]] = {h: None for h in HANDS}

    def update(self, sample: SkeletonSample) -> list[SelfTouchEvent]:
        out = []
        joints = sample.joints
        targets = [joints[n] for n in TOUCH_TARGETS if n in joints]
        if not targets:
            return out
        for hand, wrist_name in HANDS.items():
            wrist = joints.get(wrist_name)
            if wrist is None:
                continue
            inside = min(math.dist(wrist, p) for p in targets) <= self.distance
            if inside and not self._inside[hand]:
                last = self._last[hand]
                if last is None or sample.t - last >= self.debounce:
                    out.append(SelfTouchEvent(sample.t, hand))
                    self._last[hand] = sample.t
            self._inside[hand] = inside
        return out


def detect_self_touch(sample: SkeletonSample, detector: SelfTouchDetector) -> Optional[SelfTouchEvent]:
    """Single-event convenience wrapper; returns the first hand that fired."""
    events = detector.update(sample)
    return events[0] if events else None
