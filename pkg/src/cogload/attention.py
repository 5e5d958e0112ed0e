"""Head-pose attention tracking.

Pipeline per loop: smooth the raw head pose, express each workstation in the
head frame as (azimuth, elevation, distance), turn both angles into a fuzzy
membership level with a raised-cosine roll-off, multiply them into one
attention level per workstation, then pick the focused workstation.

Angle conventions: the head looks along its own +z axis. Azimuth is the
angle of the target in the head's horizontal (x-z) plane, positive toward
the head's +x axis; elevation is the angle above that plane, positive
toward +y. All angles in degrees.

The membership roll-off is ``0.5 * (1 + cos(pi * (|a| - a_min) / (a_max - a_min)))``,
which is 1 at the inner bound and 0 at the outer one. The variant with a
minus sign is discontinuous at both bounds and is not used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .config import EngineConfig, WorkstationConfig
from .records import HeadPoseSample, InteractionEvent

ASSEMBLY = 1
INSTRUCTIONS = 2
ASSISTANT = 3

BROWSE_EVENTS = frozenset({"instruction_next", "instruction_back"})

POSE_GAP_RESET = 1.0  # seconds without head samples before the filter restarts
MIN_DISTANCE = 1e-3


class DegenerateGeometry(ValueError):
    pass


@dataclass(frozen=True)
class WorkstationBearing:
    workstation: int
    azimuth: float
    elevation: float
    distance: float


@dataclass(frozen=True)
class AttentionVector:
    t: float
    levels: tuple[float, ...]


@dataclass(slots=True)
class FocusState:
    t: float
    target: Optional[int]


@dataclass(frozen=True)
class AttentionTransition:
    t: float
    kind: str  # attention_loss | focus_switch | assistant_check | not_required_instruction_switch
    source: Optional[int]
    target: Optional[int]


# -- rotations -----------------------------------------------------------


def quat_to_matrix(q: Sequence[float]) -> tuple[tuple[float, float, float], ...]:
    w, x, y, z = q
    return (
        (1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)),
        (2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)),
        (2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)),
    )


def gaze_to_matrix(yaw: float, pitch: float, roll: float = 0.0) -> tuple[tuple[float, float, float], ...]:
    """``Ry(yaw) Rx(pitch) Rz(roll)`` without the quaternion round trip."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    return (
        (cy * cr + sy * sp * sr, -cy * sr + sy * sp * cr, sy * cp),
        (cp * sr, cp * cr, -sp),
        (-sy * cr + cy * sp * sr, sy * sr + cy * sp * cr, cy * cp),
    )


def quat_to_gaze(q: Sequence[float]) -> tuple[float, float, float]:
    """Decompose ``R = Ry(yaw) Rx(pitch) Rz(roll)``; radians.

    Yaw and pitch fix the viewing axis; roll spins the head around it.
    """
    w, x, y, z = q
    yaw = math.atan2(2 * (x * z + w * y), 1 - 2 * (x * x + y * y))
    pitch = math.asin(max(-1.0, min(1.0, -2 * (y * z - w * x))))
    roll = math.atan2(2 * (x * y + w * z), 1 - 2 * (x * x + z * z))
    return yaw, pitch, roll


def gaze_to_quat(yaw: float, pitch: float, roll: float = 0.0) -> tuple[float, float, float, float]:
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    # qy * qx
    w1, x1, y1, z1 = cy * cp, cy * sp, sy * cp, -sy * sp
    # (qy * qx) * qz
    return (
        w1 * cr - z1 * sr,
        x1 * cr + y1 * sr,
        y1 * cr - x1 * sr,
        w1 * sr + z1 * cr,
    )


def look_at(head: Sequence[float], target: Sequence[float]) -> tuple[float, float]:
    """Yaw and pitch (radians) that point the head's +z axis at ``target``."""
    dx, dy, dz = (target[i] - head[i] for i in range(3))
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    return math.atan2(dx, dz), -math.asin(dy / n)


# -- smoothing -----------------------------------------------------------


class PoseFilter:
    """Stabilises a head-pose stream.

    Position and the two gaze angles (yaw, pitch) are filtered independently
    with a constant-velocity Kalman model; roll is passed through. A gap
    longer than ``POSE_GAP_RESET`` restarts the filter from the next sample.

    All five channels share the noise parameters, the initial covariance and
    the sample times, so their covariances (and gains) are identical; only one
    covariance is propagated.
    """

    def __init__(self, process_noise: float = 20.0, measurement_noise: float = 1e-3):
        self.process_noise = process_noise
        self.measurement_noise = measurement_noise
        self._x: Optional[list[float]] = None
        self._v: list[float] = []
        self._p = (0.0, 0.0, 0.0)
        self._last_t: Optional[float] = None
        self.resets = 0

    def reset(self) -> None:
        self._x = None
        self._last_t = None

    def filter(self, t: float, position, orientation) -> tuple[tuple[float, ...], bool]:
        """Smoothed ``(x, y, z, yaw, pitch, roll)`` for one raw sample and
        whether the filter was restarted because of a gap."""
        yaw, pitch, roll = quat_to_gaze(orientation)
        z = (position[0], position[1], position[2], yaw, pitch)
        gap = self._last_t is not None and t - self._last_t > POSE_GAP_RESET
        if gap:
            self.resets += 1
        xs = self._x
        if xs is None or gap:
            q, r = self.process_noise, self.measurement_noise
            self._x = list(z)
            self._v = [0.0] * 5
            self._p = (r, 0.0, 1e3 * r + q)
            self._last_t = t
            return (*z, roll), gap
        dt = t - self._last_t
        self._last_t = t
        if dt <= 0:
            return (*xs, roll), gap

        q, r = self.process_noise, self.measurement_noise
        p00, p01, p11 = self._p
        p00 = p00 + 2 * dt * p01 + dt * dt * p11 + q * dt**3 / 3
        p01 = p01 + dt * p11 + q * dt * dt / 2
        p11 = p11 + q * dt
        s = p00 + r
        k0, k1 = p00 / s, p01 / s
        self._p = ((1 - k0) * p00, (1 - k0) * p01, p11 - k1 * p01)

        vs = self._v
        for i in range(5):
            pred = xs[i] + dt * vs[i]
            innov = z[i] - pred
            if i == 3:
                innov = (innov + math.pi) % (2 * math.pi) - math.pi
            xs[i] = pred + k0 * innov
            vs[i] += k1 * innov
        xs[3] = (xs[3] + math.pi) % (2 * math.pi) - math.pi
        return (xs[0], xs[1], xs[2], xs[3], xs[4], roll), gap

    def update(self, raw: HeadPoseSample) -> tuple[HeadPoseSample, bool]:
        """Return the smoothed sample and whether the filter was (re)started
        because of a gap; the very first sample does not count as a reset."""
        out, gap = self.filter(raw.t, raw.position, raw.orientation)
        quat = gaze_to_quat(out[3], out[4], out[5])
        return HeadPoseSample(raw.t, (out[0], out[1], out[2]), quat), gap


def smooth_pose(raw: HeadPoseSample, state: PoseFilter) -> HeadPoseSample:
    return state.update(raw)[0]


# -- geometry and fuzzy scoring ------------------------------------------


def _bearing(rot, head_pos, ws: WorkstationConfig) -> WorkstationBearing:
    vx = ws.position[0] - head_pos[0]
    vy = ws.position[1] - head_pos[1]
    vz = ws.position[2] - head_pos[2]
    dist = math.sqrt(vx * vx + vy * vy + vz * vz)
    if dist < MIN_DISTANCE:
        raise DegenerateGeometry(f"workstation {ws.id} coincides with the head position")
    # R^T v: workstation in head coordinates
    hx = rot[0][0] * vx + rot[1][0] * vy + rot[2][0] * vz
    hy = rot[0][1] * vx + rot[1][1] * vy + rot[2][1] * vz
    hz = rot[0][2] * vx + rot[1][2] * vy + rot[2][2] * vz
    az = math.degrees(math.atan2(hx, hz))
    el = math.degrees(math.atan2(hy, math.hypot(hx, hz)))
    return WorkstationBearing(ws.id, az, el, dist)


def bearing(head: HeadPoseSample, workstation: WorkstationConfig) -> WorkstationBearing:
    return _bearing(quat_to_matrix(head.orientation), head.position, workstation)


def bearings(head: HeadPoseSample, workstations: Iterable[WorkstationConfig]) -> list[WorkstationBearing]:
    rot = quat_to_matrix(head.orientation)
    return [_bearing(rot, head.position, ws) for ws in workstations]


def membership(alpha: float, window: tuple[float, float]) -> float:
    """Raised-cosine membership of an angle (degrees) in ``window``."""
    a = abs(alpha)
    lo, hi = window
    if a <= lo:
        return 1.0
    if a > hi:
        return 0.0
    return 0.5 * (1.0 + math.cos(math.pi * (a - lo) / (hi - lo)))


def attention_levels(
    bearings_: Sequence[WorkstationBearing], config: EngineConfig, t: float = 0.0
) -> AttentionVector:
    if len(bearings_) != len(config.workstations):
        raise ValueError("need exactly one bearing per configured workstation")
    levels = []
    for b, ws in zip(bearings_, config.workstations):
        levels.append(membership(b.azimuth, ws.azimuth_window) * membership(b.elevation, ws.elevation_window))
    return AttentionVector(t, tuple(levels))


def classify_focus(
    levels: AttentionVector, threshold: float, ids: Optional[Sequence[int]] = None
) -> FocusState:
    """Focused workstation is the arg-max level if it reaches ``threshold``.

    ``ids`` maps level positions to workstation ids (default 1..M); ties go
    to the lowest id.
    """
    values = levels.levels
    if ids is None:
        ids = range(1, len(values) + 1)
    best, best_id = -1.0, None
    for v, wid in sorted(zip(values, ids), key=lambda p: p[1]):
        if v > best:
            best, best_id = v, wid
    if best < threshold:
        return FocusState(levels.t, None)
    return FocusState(levels.t, best_id)


# -- transitions ---------------------------------------------------------

_UNSET = object()


class TransitionDetector:
    """Turns the per-loop focus sequence into attention transition events.

    * A run of ``None`` focus lasting at least ``min_loss`` seconds is one
      ``attention_loss``, stamped at the first ``None`` loop. Shorter gaps are
      bridged: returning to the same workstation is not a new entry.
    * Entering the assistant workstation is an ``assistant_check``.
    * Entering the instructions workstation is held for ``grace`` seconds; if
      no browse event (next/back) lands in ``[entry, entry + grace]`` it is a
      ``not_required_instruction_switch``, otherwise a ``focus_switch``.
    * Any other entry is a ``focus_switch``.

    The focus before the first workstation is seen is not scored. Events are
    returned by :meth:`tick` once they are final; instruction entries are
    therefore reported up to ``grace`` seconds late, stamped at the entry.
    """

    def __init__(self, min_loss: float = 1.0, grace: float = 3.0):
        self.min_loss = min_loss
        self.grace = grace
        self._anchor = _UNSET
        self._current = _UNSET
        self._none_start: Optional[float] = None
        self._loss_done = False
        self._pending: list[tuple[float, Optional[int]]] = []
        self._browses: list[float] = []

    def event(self, ev: InteractionEvent) -> None:
        if ev.kind in BROWSE_EVENTS:
            self._browses.append(ev.t)

    def _resolve(self, entry_t: float, source) -> AttentionTransition:
        limit = entry_t + self.grace
        browsed = any(entry_t <= b <= limit for b in self._browses)
        kind = "focus_switch" if browsed else "not_required_instruction_switch"
        return AttentionTransition(entry_t, kind, source, INSTRUCTIONS)

    def tick(self, focus: FocusState) -> list[AttentionTransition]:
        out: list[AttentionTransition] = []
        t, target = focus.t, focus.target
        if target is None:
            if self._current is not None:
                self._none_start = t
                self._loss_done = False
            if (
                not self._loss_done
                and self._anchor is not _UNSET
                and self._anchor is not None
                and t - self._none_start >= self.min_loss
            ):
                out.append(AttentionTransition(self._none_start, "attention_loss", self._anchor, None))
                self._loss_done = True
                self._anchor = None
        else:
            if self._anchor is _UNSET:
                self._anchor = target
            elif target != self._anchor:
                if target == ASSISTANT:
                    out.append(AttentionTransition(t, "assistant_check", self._anchor, target))
                elif target == INSTRUCTIONS:
                    self._pending.append((t, self._anchor))
                else:
                    out.append(AttentionTransition(t, "focus_switch", self._anchor, target))
                self._anchor = target
        self._current = target

        while self._pending and t >= self._pending[0][0] + self.grace:
            out.append(self._resolve(*self._pending.pop(0)))
        if not self._pending:
            self._browses.clear()
        return out

    def finish(self) -> list[AttentionTransition]:
        """Resolve instruction entries whose grace window outlives the session."""
        out = [self._resolve(*p) for p in self._pending]
        self._pending.clear()
        return out


def detect_transitions(
    focus: Iterable[FocusState], events: Iterable[InteractionEvent], config: EngineConfig
) -> list[AttentionTransition]:
    """Batch wrapper over :class:`TransitionDetector`.

    Events are delivered before the focus sample of the same or a later time,
    as the engine loop does.
    """
    det = TransitionDetector(config.min_attention_loss_duration, config.not_required_switch_grace)
    pending = sorted(events, key=lambda e: e.t)
    i = 0
    out: list[AttentionTransition] = []
    for fs in focus:
        while i < len(pending) and pending[i].t <= fs.t:
            det.event(pending[i])
            i += 1
        out.extend(det.tick(fs))
    for ev in pending[i:]:
        det.event(ev)
    out.extend(det.finish())
    return out
