"""The online assessment loop.

Records are consumed in time order; every ``1 / loop_rate`` seconds the
engine samples the latest (smoothed) head pose and skeleton state, updates
focus, transitions, kinematics and the assistant machine, then evaluates the
factors and scores. Loop ``k`` runs at ``t = k / loop_rate`` (k >= 1) after
all records with ``t_record <= t`` have been applied.

The first ``calibration_duration`` seconds of skeleton data are the resting
baseline; hyperactivity is reported as missing until it is available.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .attention import (
    AttentionTransition,
    PoseFilter,
    TransitionDetector,
    MIN_DISTANCE,
    DegenerateGeometry,
    gaze_to_matrix,
    membership,
)
from .config import EngineConfig
from .factors import FactorState, FactorVector, ScorePair, accumulate, factor_vector, scores
from .attention import FocusState
from .interaction import AssistantRunner, InvalidInput, TaskProgress, apply_instruction_event
from .kinematics import (
    InsufficientHistory,
    MotionBaseline,
    MotionTracker,
    SegmentTooShort,
    SelfTouchDetector,
    SelfTouchEvent,
    activity_level,
    baseline_from_motion,
    MIN_CALIBRATION,
)
from .records import HeadPoseSample, InteractionEvent, Record, SkeletonSample

log = logging.getLogger(__name__)

TRANSITION_TO_EVENT = {
    "attention_loss": "attention_loss",
    "not_required_instruction_switch": "not_required_switch",
    "assistant_check": "assistant_check",
}


@dataclass
class LoopOutput:
    loop: int
    t: float
    levels: tuple[float, ...]
    focus: Optional[int]
    factors: FactorVector
    scores: ScorePair
    assistant_state: str
    activity: Optional[dict[str, float]]
    transitions: list[AttentionTransition]
    touches: list[SelfTouchEvent]
    new_events: list[tuple[str, float]]


@dataclass
class EngineSummary:
    loops: int = 0
    event_counts: dict[str, int] = field(default_factory=dict)
    transition_counts: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    filter_resets: int = 0
    skeleton_samples: int = 0
    head_samples: int = 0
    feedback: list[tuple[float, str]] = field(default_factory=list)
    recorded_feedback: list[tuple[float, str]] = field(default_factory=list)
    steps_completed: int = 0


class Engine:
    def __init__(self, config: EngineConfig):
        self.config = config
        self.rate = config.loop_rate
        self.pose_filter = PoseFilter(config.kalman.process_noise, config.kalman.measurement_noise)
        self.detector = TransitionDetector(config.min_attention_loss_duration, config.not_required_switch_grace)
        self.tracker = MotionTracker(config.motion_window)
        self.touch = SelfTouchDetector(config.self_touch_distance, config.self_touch_debounce)
        self.assistant = AssistantRunner(config.phase_durations)
        self.progress = TaskProgress()
        self.state = FactorState(config.loop_rate)
        self.baseline: Optional[MotionBaseline] = None
        self.summary = EngineSummary()
        self._calibration: dict[str, list[float]] = {j: [] for j in self.tracker.joints}
        self._calibration_done = False
        self._skeleton_first: Optional[float] = None
        self._skeleton_last: Optional[float] = None
        self._pose: Optional[tuple[float, ...]] = None  # smoothed x, y, z, yaw, pitch, roll
        self._ids = [ws.id for ws in config.workstations]
        self._geometry = [
            (ws.position, ws.azimuth_window, ws.elevation_window, ws.id) for ws in config.workstations
        ]
        self._pending_events: list[tuple[str, float]] = []
        self._pending_touches: list[SelfTouchEvent] = []
        self._transitions: list[AttentionTransition] = []

    # -- record handling ---------------------------------------------------

    def _warn(self, msg: str) -> None:
        log.warning(msg)
        self.summary.warnings.append(msg)

    def _add_event(self, kind: str, t: float) -> None:
        self.state.add_event(kind, t)
        self._pending_events.append((kind, t))
        self.summary.event_counts[kind] = self.summary.event_counts.get(kind, 0) + 1

    def _assistant(self, t: float, kind: str, arg: Optional[str] = None) -> None:
        try:
            self.assistant.command(t, kind, arg)
        except InvalidInput as exc:
            self._warn(f"assistant input rejected: {exc}")

    def apply(self, rec: Record) -> None:
        if isinstance(rec, HeadPoseSample):
            self.summary.head_samples += 1
            self._pose, reset = self.pose_filter.filter(rec.t, rec.position, rec.orientation)
            if reset:
                self.summary.filter_resets += 1
                self._warn(f"head pose gap before t={rec.t:g}; pose filter restarted")
        elif isinstance(rec, SkeletonSample):
            self.summary.skeleton_samples += 1
            if self._skeleton_first is None:
                self._skeleton_first = rec.t
            self._skeleton_last = rec.t
            self.tracker.add(rec)
            for ev in self.touch.update(rec):
                self._pending_touches.append(ev)
                self._add_event("self_touch", ev.t)
        elif isinstance(rec, InteractionEvent):
            self.detector.event(rec)
            kind = rec.kind
            if kind in ("instruction_next", "instruction_back"):
                self.progress = apply_instruction_event(self.progress, kind, rec.t)
                if kind == "instruction_back":
                    self._add_event("check_back", rec.t)
                elif rec.arg:
                    self._assistant(rec.t, "request", rec.arg)
            elif kind == "request_component":
                self._assistant(rec.t, "request", rec.arg)
            elif kind in ("pause", "resume", "reset"):
                self._assistant(rec.t, kind)
            elif kind == "fsm_feedback":
                self.summary.recorded_feedback.append((rec.t, rec.arg or ""))
        else:
            raise TypeError(f"unsupported record {rec!r}")

    # -- loop ----------------------------------------------------------------

    def _finish_calibration(self) -> None:
        self._calibration_done = True
        first, last = self._skeleton_first, self._skeleton_last
        span = 0.0 if first is None else last - first
        if span < MIN_CALIBRATION:
            exc = SegmentTooShort(
                f"calibration segment spans {span:.3f} s, need {MIN_CALIBRATION:g} s; hyperactivity disabled"
            )
            self._warn(str(exc))
            return
        self.baseline = baseline_from_motion(self._calibration, span)

    def _focus(self, t: float) -> tuple[tuple[float, ...], Optional[int]]:
        # inlined bearing + membership; this runs every loop
        pose = self._pose
        if pose is None:
            return tuple(0.0 for _ in self._ids), None
        hx0, hy0, hz0, yaw, pitch, roll = pose
        r = gaze_to_matrix(yaw, pitch, roll)
        levels = []
        best, target = -1.0, None
        for (px, py, pz), az_win, el_win, wid in self._geometry:
            vx, vy, vz = px - hx0, py - hy0, pz - hz0
            if vx * vx + vy * vy + vz * vz < MIN_DISTANCE * MIN_DISTANCE:
                raise DegenerateGeometry(f"workstation {wid} coincides with the head position")
            hx = r[0][0] * vx + r[1][0] * vy + r[2][0] * vz
            hy = r[0][1] * vx + r[1][1] * vy + r[2][1] * vz
            hz = r[0][2] * vx + r[1][2] * vy + r[2][2] * vz
            az = math.degrees(math.atan2(hx, hz))
            level = membership(az, az_win)
            if level > 0.0:
                level *= membership(math.degrees(math.atan2(hy, math.hypot(hx, hz))), el_win)
            levels.append(level)
            if level > best:
                best, target = level, wid
        if best < self.config.attention_threshold:
            target = None
        return tuple(levels), target

    def tick(self, k: int) -> LoopOutput:
        t = k / self.rate
        self.assistant.advance(t)

        motion = self.tracker.motion(t)
        in_calibration = t <= self.config.calibration_duration
        if in_calibration:
            for j, m in motion.items():
                if m is not None:
                    self._calibration[j].append(m)
        elif not self._calibration_done:
            self._finish_calibration()

        levels, target = self._focus(t)
        focus = FocusState(t, target)
        transitions = self.detector.tick(focus)
        for tr in transitions:
            self._record_transition(tr)
        accumulate(self.state, focus)

        activity = None
        hyper = None
        if self.baseline is not None:
            try:
                sample = activity_level(motion, self.baseline, t)
            except InsufficientHistory:
                pass
            else:
                activity, hyper = sample.per_joint, sample.level

        fv = factor_vector(self.state, hyper, t)
        sc = scores(fv, self.config.weights, self.config.thresholds)
        st = self.assistant.state
        label = st.state + (":paused" if st.paused else "")
        out = LoopOutput(
            k, t, levels, target, fv, sc, label, activity, transitions,
            self._pending_touches, self._pending_events,
        )
        self._pending_events = []
        self._pending_touches = []
        return out

    def _record_transition(self, tr: AttentionTransition) -> None:
        self._transitions.append(tr)
        counts = self.summary.transition_counts
        counts[tr.kind] = counts.get(tr.kind, 0) + 1
        kind = TRANSITION_TO_EVENT.get(tr.kind)
        if kind is not None:
            self._add_event(kind, tr.t)

    def run(self, records: Iterable[Record]) -> Iterator[LoopOutput]:
        """Stream time-ordered ``records`` through the loop, yielding one
        output per loop. Loops continue until the last record is covered."""
        it = iter(records)
        nxt = next(it, None)
        if nxt is None:
            return
        k = 1
        last_t = nxt.t
        while True:
            t = k / self.rate
            while nxt is not None and nxt.t <= t:
                if nxt.t < last_t:
                    raise ValueError(f"records out of time order at t={nxt.t}")
                last_t = nxt.t
                self.apply(nxt)
                nxt = next(it, None)
            yield self.tick(k)
            self.summary.loops = k
            if nxt is None and t >= last_t:
                break
            k += 1
        self.finish()

    def finish(self) -> None:
        for tr in self.detector.finish():
            self._record_transition(tr)
        if not self._calibration_done and self.summary.skeleton_samples:
            self._finish_calibration()
        if self.summary.skeleton_samples == 0:
            self._warn("session has no skeleton records; hyperactivity and self-touch not assessed")
        if self.summary.head_samples == 0:
            self._warn("session has no head pose records; focus is undefined throughout")
        self.summary.feedback = [(fb.t, fb.state) for fb in self.assistant.trace]
        self.summary.steps_completed = self.progress.steps_completed

    @property
    def transitions(self) -> list[AttentionTransition]:
        return self._transitions


def run_engine(config: EngineConfig, records: Iterable[Record]) -> tuple[list[LoopOutput], EngineSummary]:
    engine = Engine(config)
    outputs = list(engine.run(records))
    return outputs, engine.summary
