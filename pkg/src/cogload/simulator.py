"""Deterministic synthetic assembly sessions.

A session is scripted first (who looks where, when the worker browses the
instructions, asks for parts, touches their face or fidgets) and then
rendered into head-pose, skeleton and event records at 15 Hz with sensor
noise. The script doubles as ground truth.

Each part of the script draws from its own random stream derived from the
seed, so changing e.g. the distraction rate leaves the rest of the task
untouched. Distraction and self-touch instants are taken from a fixed,
seed-dependent permutation of candidate slots, so a session with a higher
rate contains every event of a lower-rate session with the same seed.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .attention import ASSEMBLY, ASSISTANT, INSTRUCTIONS, FocusState
from .config import DEFAULT_PHASE_DURATIONS, EngineConfig, config_from_dict
from .factors import FactorState, accumulate, factor_vector, scores
from .interaction import DELIVERING, GRASPING, HANDING_OVER, HOMING, LABELS, REACHING, run_scripted_assistant
from .physio import BLOCK_LENGTH, EdaSeries, block_count, segment_blocks
from .records import HeadPoseSample, InteractionEvent, Record, SkeletonSample, UPPER_BODY_JOINTS

ARCHETYPES = ("hhc", "hri", "hrc")
RATE = 15.0
SLEW = 0.4
HEAD_ANGLE_NOISE = 2.0  # degrees
HEAD_POS_NOISE = 0.003  # metres
JOINT_NOISE = 0.005  # metres
CALIBRATION = 30.0
SLOT_SPACING = 10.0

HEAD = (0.0, 0.0, 1.2)

# (yaw, elevation) in degrees as seen from the head, distance in metres
LAYOUT = {
    ASSEMBLY: ("assembly", 0.0, -40.0, 0.6),
    INSTRUCTIONS: ("instructions", 50.0, 0.0, 0.8),
    ASSISTANT: ("assistant", -55.0, -5.0, 1.2),
}
WINDOW = (15.0, 35.0)

# glances at the assistant per minute, chance that a W2 visit is a check back,
# not-required W2 visits per minute
ARCHETYPE_BEHAVIOUR = {
    "hhc": {"glance_rate": 0.6, "check_back_p": 0.10, "idle_visit_rate": 0.3},
    "hri": {"glance_rate": 1.4, "check_back_p": 0.15, "idle_visit_rate": 0.5},
    "hrc": {"glance_rate": 0.8, "check_back_p": 0.10, "idle_visit_rate": 0.3},
}

REST_OFFSETS = {
    "head": (0.0, 0.0, 0.0),
    "neck": (0.0, -0.18, 0.02),
    "left_shoulder": (-0.18, -0.25, 0.03),
    "right_shoulder": (0.18, -0.25, 0.03),
    "left_elbow": (-0.25, -0.50, 0.12),
    "right_elbow": (0.25, -0.50, 0.12),
    "left_wrist": (-0.15, -0.55, 0.35),
    "right_wrist": (0.15, -0.55, 0.35),
}
TOUCH_OFFSETS = {"left": (-0.05, -0.06, 0.06), "right": (0.05, -0.06, 0.06)}
REACH, HOLD = 0.35, 1.2
EPISODE_LENGTH = 20.0


@dataclass
class ScenarioSpec:
    archetype: str = "hrc"
    duration: float = 600.0
    handovers: int = 5
    distraction_rate: float = 1.0  # events per minute
    self_touch_rate: float = 0.5
    hyperactivity_episodes: int = 2
    seed: int = 0

    def validate(self) -> None:
        if self.archetype not in ARCHETYPES:
            raise ValueError(f"unknown archetype {self.archetype!r}; choose from {ARCHETYPES}")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.distraction_rate < 0 or self.self_touch_rate < 0:
            raise ValueError("rates must be non-negative")
        if self.handovers < 0 or self.hyperactivity_episodes < 0:
            raise ValueError("counts must be non-negative")


@dataclass
class Segment:
    start: float
    end: float
    target: Optional[int]
    yaw: float
    elevation: float
    tag: str = ""


@dataclass
class GroundTruth:
    spec: dict
    segments: list[Segment]
    events: dict[str, list[float]]
    block_intensity: list[float]
    load_profile: dict[str, list[float]] = field(default_factory=dict)
    hyperactivity_episodes: list[tuple[float, float]] = field(default_factory=list)
    feedback: list[tuple[float, str]] = field(default_factory=list)

    @cached_property
    def _starts(self) -> list[float]:
        return [s.start for s in self.segments]

    def focus_at(self, t: float) -> Optional[int]:
        """Scripted focus; during a slew the label flips at its midpoint."""
        i = max(bisect.bisect_right(self._starts, t) - 1, 0)
        if i > 0 and t < self.segments[i].start + SLEW / 2:
            return self.segments[i - 1].target
        return self.segments[i].target

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "segments": [asdict(s) for s in self.segments],
            "events": self.events,
            "block_intensity": self.block_intensity,
            "load_profile": self.load_profile,
            "hyperactivity_episodes": [list(e) for e in self.hyperactivity_episodes],
            "feedback": [list(f) for f in self.feedback],
        }


def _direction(yaw: float, el: float) -> tuple[float, float, float]:
    y, e = math.radians(yaw), math.radians(el)
    return (math.sin(y) * math.cos(e), math.sin(e), math.cos(y) * math.cos(e))


def workstation_position(wid: int) -> tuple[float, float, float]:
    _, yaw, el, dist = LAYOUT[wid]
    d = _direction(yaw, el)
    return tuple(round(HEAD[i] + dist * d[i], 6) for i in range(3))  # type: ignore[return-value]


def scenario_config(spec: Optional[ScenarioSpec] = None) -> dict:
    """Engine configuration matching the simulated workplace.

    Event-factor thresholds are set near the largest values these scripts
    produce, so scores do not saturate early in a session.
    """
    return {
        "workstations": [
            {
                "id": wid,
                "name": name,
                "position": list(workstation_position(wid)),
                "azimuth_window": list(WINDOW),
                "elevation_window": list(WINDOW),
            }
            for wid, (name, *_rest) in LAYOUT.items()
        ],
        "attention_threshold": 0.5,
        "loop_rate": RATE,
        "calibration_duration": CALIBRATION,
        "thresholds": {
            "concentration_loss": 1.0,
            "learning_delay": 1.0,
            "concentration_demand": 25.0,
            "instruction_cost": 6.0,
            "task_difficulty": 6.0,
            "collaboration_burden": 1.0,
            "wariness_for_assistant": 12.0,
            "self_touching": 1.0,
            "hyperactivity": 1.0,
        },
        "phase_durations": dict(DEFAULT_PHASE_DURATIONS),
    }


# -- scripting --------------------------------------------------------------


class _Timeline:
    """Gaze segments in time order; inserts split assembly dwells."""

    MARGIN = 1.5

    def __init__(self, segments: list[Segment]):
        self.segments = segments

    def insert(self, t: float, length: float, seg: Segment, search: float = 30.0) -> Optional[float]:
        """Place ``seg`` (of ``length`` s) inside an assembly dwell as close as
        possible after ``t``; returns its start or ``None`` if nothing fits."""
        need = length + 2 * self.MARGIN
        for i, s in enumerate(self.segments):
            if s.target != ASSEMBLY or s.tag or s.end - s.start < need or s.end - self.MARGIN - length < t:
                continue
            start = max(t, s.start + self.MARGIN)
            if start - t > search:
                return None
            end = start + length
            before = Segment(s.start, start, s.target, s.yaw, s.elevation)
            after = Segment(end, s.end, s.target, s.yaw, s.elevation)
            seg.start, seg.end = start, end
            self.segments[i : i + 1] = [before, seg, after]
            return start
        return None


def _ws_segment(wid: int, start: float, end: float, tag: str = "") -> Segment:
    _, yaw, el, _ = LAYOUT[wid]
    return Segment(start, end, wid, yaw, el, tag)


def _block_intensity(spec: ScenarioSpec, n_blocks: int) -> list[float]:
    rng = np.random.default_rng([spec.seed, 1])
    return [float(x) for x in rng.uniform(0.4, 1.6, size=n_blocks)]


def _slots(spec: ScenarioSpec, stream: int, rate: float, intensity: list[float]) -> list[float]:
    """Event instants: per block, the first ``n`` of a seeded slot permutation."""
    rng = np.random.default_rng([spec.seed, stream])
    out = []
    for b, level in enumerate(intensity):
        lo = max(b * BLOCK_LENGTH, CALIBRATION + 5.0)
        hi = min((b + 1) * BLOCK_LENGTH, spec.duration - 10.0)
        slots = np.arange(lo, hi - SLOT_SPACING / 2, SLOT_SPACING)
        order = rng.permutation(slots.size)
        jitter = rng.uniform(0.0, SLOT_SPACING * 0.5, size=slots.size)
        if hi <= lo or slots.size == 0:
            continue
        minutes = (hi - lo) / 60.0
        n = min(int(round(rate * minutes * level)), slots.size)
        out.extend(float(slots[i] + jitter[i]) for i in order[:n])
    return sorted(out)


def _task_script(spec: ScenarioSpec):
    """Base alternation of instruction reading and assembly work."""
    rng = np.random.default_rng([spec.seed, 2])
    beh = ARCHETYPE_BEHAVIOUR[spec.archetype]
    segments: list[Segment] = []
    events: list[InteractionEvent] = []
    t = 0.0
    first = True
    while t < spec.duration:
        read = float(rng.uniform(2.5, 4.0))
        end = min(t + read, spec.duration)
        segments.append(_ws_segment(INSTRUCTIONS, t, end))
        if end - t > 2.0:
            if not first and rng.random() < beh["check_back_p"]:
                events.append(InteractionEvent(t + 0.8, "instruction_back"))
                if end - t > 2.5:
                    events.append(InteractionEvent(t + 1.8, "instruction_next"))
            else:
                events.append(InteractionEvent(t + float(rng.uniform(0.6, 1.4)), "instruction_next"))
        first = False
        t = end
        if t >= spec.duration:
            break
        work = float(rng.uniform(10.0, 18.0))
        end = min(t + work, spec.duration)
        segments.append(_ws_segment(ASSEMBLY, t, end))
        t = end
    return segments, events


def generate_script(spec: ScenarioSpec) -> tuple[GroundTruth, list[InteractionEvent]]:
    spec.validate()
    n_blocks = max(block_count(spec.duration), 1)
    intensity = _block_intensity(spec, n_blocks)
    beh = ARCHETYPE_BEHAVIOUR[spec.archetype]
    segments, events = _task_script(spec)
    tl = _Timeline(segments)
    rng = np.random.default_rng([spec.seed, 3])

    # assistant requests and the resulting handovers
    requests: list[tuple[float, str]] = []
    for i in range(spec.handovers):
        target = spec.duration * (i + 0.5) / spec.handovers + float(rng.uniform(-5.0, 5.0))
        requests.append((max(target, 1.0), f"profile_{i + 1}"))

    # a request must wait for the previous cycle (plus a possible pause)
    cycle = sum(DEFAULT_PHASE_DURATIONS[s] for s in (REACHING, GRASPING, DELIVERING, HANDING_OVER, HOMING)) + 4.0
    free_at = 0.0
    commands: list[tuple[float, str, Optional[str]]] = []
    if spec.archetype == "hrc":
        # the robot is triggered by moving on in the instructions
        nexts = [e for e in events if e.kind == "instruction_next"]
        used = set()
        for target, comp in requests:
            cand = [e for e in nexts if e.t >= max(target, free_at) and id(e) not in used]
            if not cand:
                continue
            ev = cand[0]
            used.add(id(ev))
            idx = events.index(ev)
            events[idx] = InteractionEvent(ev.t, "instruction_next", comp)
            commands.append((ev.t, "request", comp))
            free_at = ev.t + cycle
    else:
        for target, comp in requests:
            target = max(target, free_at)
            if target >= spec.duration:
                break
            events.append(InteractionEvent(target, "request_component", comp))
            commands.append((target, "request", comp))
            free_at = target + cycle
    commands.sort(key=lambda c: c[0])
    if spec.archetype == "hrc" and len(commands) >= 3:
        # one supervised pause during the third delivery
        t_req = commands[2][0]
        d = DEFAULT_PHASE_DURATIONS
        t_pause = t_req + d["ReachingComponent"] + d["Grasping"] + 1.0
        commands += [(t_pause, "pause", None), (t_pause + 3.0, "resume", None)]
        events += [InteractionEvent(t_pause, "pause"), InteractionEvent(t_pause + 3.0, "resume")]
        commands.sort(key=lambda c: c[0])
    trace = run_scripted_assistant(commands, dict(DEFAULT_PHASE_DURATIONS))
    if spec.archetype == "hrc":
        events += [InteractionEvent(fb.t, "fsm_feedback", LABELS[fb.state]) for fb in trace[1:]]

    for fb in trace:
        if fb.state == HANDING_OVER and fb.t < spec.duration - 6.0:
            tl.insert(fb.t - 0.5, float(rng.uniform(3.0, 4.5)), _ws_segment(ASSISTANT, 0, 0, "handover"))

    # glances at the assistant and idle looks at the instructions
    glance_n = int(round(beh["glance_rate"] * spec.duration / 60.0))
    for t in np.sort(rng.uniform(5.0, spec.duration - 5.0, size=glance_n)):
        tl.insert(float(t), float(rng.uniform(1.2, 2.5)), _ws_segment(ASSISTANT, 0, 0, "glance"))
    idle_n = int(round(beh["idle_visit_rate"] * spec.duration / 60.0))
    for t in np.sort(rng.uniform(5.0, spec.duration - 5.0, size=idle_n)):
        tl.insert(float(t), float(rng.uniform(1.5, 2.5)), _ws_segment(INSTRUCTIONS, 0, 0, "idle"))

    # distractions: 2-4 s looking up, away from every workstation; a sideways
    # look would sweep through the instruction or assistant window on the way
    drng = np.random.default_rng([spec.seed, 4])
    for t in _slots(spec, 5, spec.distraction_rate, intensity):
        length = float(drng.uniform(2.0, 4.0))
        yaw, el = float(drng.uniform(-20.0, 20.0)), float(drng.uniform(32.0, 45.0))
        tl.insert(t, length, Segment(0, 0, None, yaw, el, "distraction"))

    touches = _slots(spec, 6, spec.self_touch_rate, intensity)
    hrng = np.random.default_rng([spec.seed, 7])
    episodes = _episodes(spec, hrng, intensity)

    segs = tl.segments
    truth_events: dict[str, list[float]] = {
        "attention_loss": [s.start + SLEW / 2 for s in segs if s.tag == "distraction"],
        "assistant_check": [],
        "not_required_switch": [],
        "check_back": sorted(e.t for e in events if e.kind == "instruction_back"),
        "self_touch": [t + REACH * 0.8 for t in touches],
        "request": [c[0] for c in commands if c[1] == "request"],
    }
    browse = sorted(e.t for e in events if e.kind in ("instruction_next", "instruction_back"))
    prev_ws = None
    for s in segs:
        if s.target is None:
            continue
        if s.target != prev_ws and prev_ws is not None:
            if s.target == ASSISTANT:
                truth_events["assistant_check"].append(s.start + SLEW / 2)
            elif s.target == INSTRUCTIONS and not any(s.start <= b <= s.start + 3.0 for b in browse):
                truth_events["not_required_switch"].append(s.start + SLEW / 2)
        prev_ws = s.target

    truth = GroundTruth(
        spec=asdict(spec),
        segments=segs,
        events=truth_events,
        block_intensity=intensity,
        hyperactivity_episodes=episodes,
        feedback=[(fb.t, fb.state) for fb in trace],
    )
    events.sort(key=lambda e: e.t)
    return truth, events


def _episodes(spec: ScenarioSpec, rng: np.random.Generator, intensity: list[float]) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    weights = np.asarray(intensity) / np.sum(intensity)
    for _ in range(spec.hyperactivity_episodes):
        for _attempt in range(20):
            b = int(rng.choice(len(intensity), p=weights))
            lo = max(b * BLOCK_LENGTH, CALIBRATION + 10.0)
            hi = min((b + 1) * BLOCK_LENGTH, spec.duration) - EPISODE_LENGTH
            if hi <= lo:
                continue
            start = float(rng.uniform(lo, hi))
            if all(start >= e + 5.0 or start + EPISODE_LENGTH + 5.0 <= s for s, e in out):
                out.append((start, start + EPISODE_LENGTH))
                break
    return sorted(out)


# -- rendering --------------------------------------------------------------


def _gaze_angles(truth: GroundTruth, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    segs = truth.segments
    starts = np.array([s.start for s in segs])
    yaw_t = np.array([s.yaw for s in segs])
    el_t = np.array([s.elevation for s in segs])
    idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(segs) - 1)
    yaw = yaw_t[idx].copy()
    el = el_t[idx].copy()
    prev = np.maximum(idx - 1, 0)
    frac = np.clip((times - starts[idx]) / SLEW, 0.0, 1.0)
    slewing = (idx > 0) & (frac < 1.0)
    yaw[slewing] = yaw_t[prev][slewing] + (yaw_t[idx][slewing] - yaw_t[prev][slewing]) * frac[slewing]
    el[slewing] = el_t[prev][slewing] + (el_t[idx][slewing] - el_t[prev][slewing]) * frac[slewing]
    return yaw, el


def _ease(x: np.ndarray) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(np.pi * np.clip(x, 0.0, 1.0))


def _touch_profile(times: np.ndarray, touches: list[float]) -> dict[str, np.ndarray]:
    """Per hand, how far the wrist is along its way to the face (0..1)."""
    out = {"left": np.zeros(times.size), "right": np.zeros(times.size)}
    for i, t0 in enumerate(touches):
        hand = "left" if i % 2 == 0 else "right"
        x = times - t0
        up = _ease(x / REACH)
        down = 1.0 - _ease((x - REACH - HOLD) / REACH)
        prof = np.where(x < 0, 0.0, np.where(x < REACH + HOLD, up, np.clip(down, 0.0, 1.0)))
        out[hand] = np.maximum(out[hand], prof)
    return out


def render_session(truth: GroundTruth, events: list[InteractionEvent], seed: int) -> list[Record]:
    duration = truth.spec["duration"]
    n = int(math.floor(duration * RATE + 1e-9)) + 1
    times = np.arange(n) / RATE
    rng_head = np.random.default_rng([seed, 10])
    rng_skel = np.random.default_rng([seed, 11])

    yaw, el = _gaze_angles(truth, times)
    yaw = np.radians(yaw + rng_head.normal(0.0, HEAD_ANGLE_NOISE, n))
    pitch = -np.radians(el + rng_head.normal(0.0, HEAD_ANGLE_NOISE, n))
    roll = np.radians(rng_head.normal(0.0, 1.0, n))
    head_pos = np.asarray(HEAD) + rng_head.normal(0.0, HEAD_POS_NOISE, (n, 3))

    # skeleton
    sway_phase = rng_skel.uniform(0, 2 * np.pi, (len(UPPER_BODY_JOINTS), 3))
    sway_freq = rng_skel.uniform(0.1, 0.4, (len(UPPER_BODY_JOINTS), 3))
    fidget = np.zeros(n)
    for s, e in truth.hyperactivity_episodes:
        fidget = np.maximum(fidget, ((times >= s) & (times < e)).astype(float))
    fid_freq = rng_skel.uniform(1.5, 2.5, (len(UPPER_BODY_JOINTS), 3))
    fid_phase = rng_skel.uniform(0, 2 * np.pi, (len(UPPER_BODY_JOINTS), 3))
    touch_starts = [t - REACH * 0.8 for t in truth.events["self_touch"]]
    reach = _touch_profile(times, touch_starts)

    joints = {}
    for j, name in enumerate(UPPER_BODY_JOINTS):
        base = np.asarray(HEAD) + np.asarray(REST_OFFSETS[name])
        sway = 0.003 * np.sin(2 * np.pi * sway_freq[j] * times[:, None] + sway_phase[j])
        amp = 0.01 if name in ("head", "neck") else 0.03
        wiggle = amp * fidget[:, None] * np.sin(2 * np.pi * fid_freq[j] * times[:, None] + fid_phase[j])
        pos = base + sway + wiggle + rng_skel.normal(0.0, JOINT_NOISE, (n, 3))
        for hand in ("left", "right"):
            if name == f"{hand}_wrist" or name == f"{hand}_elbow":
                goal = np.asarray(HEAD) + np.asarray(TOUCH_OFFSETS[hand])
                if name.endswith("elbow"):
                    goal = base + 0.5 * (goal - base) * np.array([0.3, 1.0, 0.3])
                pos = pos + reach[hand][:, None] * (goal - base)
        joints[name] = pos

    quats = np.round(_gaze_to_quat_array(yaw, pitch, roll), 9).tolist()
    head_rows = np.round(head_pos, 6).tolist()
    joint_rows = [np.round(joints[name], 6).tolist() for name in UPPER_BODY_JOINTS]
    t_list = times.tolist()
    records: list[Record] = []
    for k in range(n):
        t = t_list[k]
        records.append(HeadPoseSample(t, tuple(head_rows[k]), tuple(quats[k])))
        records.append(
            SkeletonSample(t, {name: tuple(rows[k]) for name, rows in zip(UPPER_BODY_JOINTS, joint_rows)})
        )
    ev_records = [InteractionEvent(round(e.t, 6), e.kind, e.arg) for e in events if e.t <= duration]
    records.extend(ev_records)
    records.sort(key=lambda r: r.t)
    return records


def _gaze_to_quat_array(yaw: np.ndarray, pitch: np.ndarray, roll: np.ndarray) -> np.ndarray:
    """Vectorised :func:`gaze_to_quat`; rows are (w, x, y, z)."""
    cy, sy = np.cos(yaw / 2), np.sin(yaw / 2)
    cp, sp = np.cos(pitch / 2), np.sin(pitch / 2)
    cr, sr = np.cos(roll / 2), np.sin(roll / 2)
    w1, x1, y1, z1 = cy * cp, cy * sp, sy * cp, -sy * sp
    return np.stack([w1 * cr - z1 * sr, x1 * cr + y1 * sr, y1 * cr - x1 * sr, w1 * sr + z1 * cr], axis=1)


# -- ground-truth load -------------------------------------------------------


def truth_scores(truth: GroundTruth, config: EngineConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Score series obtained by running the factor model on the script itself
    (noise-free focus and event instants)."""
    rate = config.loop_rate
    duration = truth.spec["duration"]
    loops = int(math.ceil(duration * rate - 1e-9))
    state = FactorState(rate)
    pending = sorted(
        (t, kind)
        for kind in ("attention_loss", "not_required_switch", "check_back", "assistant_check", "self_touch")
        for t in truth.events[kind]
    )
    i = 0
    t_out, me, sl = [], [], []
    for k in range(1, loops + 1):
        t = k / rate
        while i < len(pending) and pending[i][0] <= t:
            state.add_event(pending[i][1], pending[i][0])
            i += 1
        accumulate(state, FocusState(t, truth.focus_at(t)))
        hyper = None
        if t > config.calibration_duration:
            hyper = 1.0 if any(s <= t < e + config.motion_window for s, e in truth.hyperactivity_episodes) else 0.0
        sc = scores(factor_vector(state, hyper, t), config.weights, config.thresholds)
        t_out.append(t)
        me.append(sc.mental_effort)
        sl.append(sc.stress_level)
    return np.asarray(t_out), np.asarray(me), np.asarray(sl)


def _block_means(t: np.ndarray, x: np.ndarray, duration: float) -> list[float]:
    return [b.means["x"] for b in segment_blocks(t, {"x": x}, duration=duration)]


def generate_session(spec: ScenarioSpec) -> tuple[list[Record], GroundTruth]:
    truth, events = generate_script(spec)
    records = render_session(truth, events, spec.seed)
    cfg = config_from_dict(scenario_config(spec))
    t, me, sl = truth_scores(truth, cfg)
    if t.size:
        truth.load_profile = {
            "mental_effort": _block_means(t, me, spec.duration),
            "stress_level": _block_means(t, sl, spec.duration),
        }
    return records, truth


# -- physiology ---------------------------------------------------------------


def normalise_profile(profile) -> list[float]:
    """Min-max scale a per-block profile into [0, 1] (flat profiles map to 0.5)."""
    p = np.asarray(profile, dtype=float)
    if p.size == 0:
        return []
    lo, hi = float(p.min()), float(p.max())
    if hi - lo < 1e-12:
        return [0.5] * p.size
    return [float(v) for v in (p - lo) / (hi - lo)]


def generate_physio(
    load_profile,
    seed: int,
    eda_profile=None,
    block_length: float = BLOCK_LENGTH,
    eda_rate: float = 16.0,
) -> tuple[np.ndarray, EdaSeries]:
    """Synthetic RR intervals and skin conductance driven by per-block load.

    Higher load moves RR variability power from 0.25 Hz to 0.1 Hz, raises
    the tonic level and brings more and larger SCR bumps. ``eda_profile``
    defaults to ``load_profile``.
    """
    load = np.clip(np.asarray(load_profile, dtype=float), 0.0, 1.0)
    eda_load = load if eda_profile is None else np.clip(np.asarray(eda_profile, dtype=float), 0.0, 1.0)
    duration = load.size * block_length
    rng = np.random.default_rng([seed, 20])
    if load.size == 0:
        return np.zeros(0), EdaSeries(np.zeros(0), eda_rate)

    f_lf = float(rng.uniform(0.09, 0.11))
    f_hf = float(rng.uniform(0.22, 0.28))
    ph_lf, ph_hf = rng.uniform(0, 2 * np.pi, 2)
    rr = []
    t = 0.0
    while t < duration:
        b = min(int(t // block_length), load.size - 1)
        w = 0.15 + 0.7 * load[b]
        base = 0.85 - 0.08 * load[b]
        x = (
            base
            + 0.05 * math.sqrt(w) * math.sin(2 * math.pi * f_lf * t + ph_lf)
            + 0.05 * math.sqrt(1 - w) * math.sin(2 * math.pi * f_hf * t + ph_hf)
            + rng.normal(0.0, 0.004)
        )
        rr.append(x)
        t += x

    erng = np.random.default_rng([seed, 21])
    n = int(round(duration * eda_rate))
    times = np.arange(n) / eda_rate
    blk = np.minimum((times // block_length).astype(int), eda_load.size - 1)
    level = 2.0 + 1.0 * eda_load[blk]
    # slow (60 s) tonic transitions; a median baseline cannot follow sharp steps
    kernel = np.hanning(int(60 * eda_rate))
    kernel /= kernel.sum()
    level = np.convolve(np.pad(level, (kernel.size // 2, kernel.size - 1 - kernel.size // 2), mode="edge"), kernel, "valid")
    eda = level + 0.03 * np.sin(2 * np.pi * times / 400.0)
    for b, l in enumerate(eda_load):
        count = 2 + int(round(8 * l))
        centres = b * block_length + (np.arange(count) + erng.uniform(0.2, 0.8, count)) * block_length / count
        for c in centres:
            amp = 0.1 + 0.5 * l + erng.uniform(-0.02, 0.02)
            sd = erng.uniform(1.5, 2.5) / 2.3548
            eda += amp * np.exp(-((times - c) ** 2) / (2 * sd * sd))
    eda += erng.normal(0.0, 0.001, n)
    return np.asarray(rr), EdaSeries(np.clip(eda, 0.0, None), eda_rate)
