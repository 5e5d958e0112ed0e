"""Session record formats and the line-delimited session stream.

Every line of a session file is one JSON object with a ``t`` field (seconds
since session start), a ``type`` field and a payload:

    {"t": 0.0, "type": "head_pose", "pos": [x, y, z], "quat": [w, x, y, z]}
    {"t": 0.0, "type": "skeleton", "joints": {"neck": [x, y, z], ...}}
    {"t": 0.0, "type": "event", "kind": "instruction_next", "arg": "profile_3"}

Coordinates are in the camera frame: x right, y up, z toward the scene.
Streams recorded with another convention must be rotated before ingestion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

Vec3 = tuple[float, float, float]

UPPER_BODY_JOINTS = (
    "neck",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
)

EVENT_KINDS = frozenset(
    {
        "instruction_next",
        "instruction_back",
        "request_component",
        "pause",
        "resume",
        "reset",
        "fsm_feedback",
    }
)

QUAT_NORM_TOL = 1e-6


class RecordError(ValueError):
    """Base class for session record problems; carries the 1-based line number."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class MalformedRecord(RecordError):
    pass


class OutOfOrder(RecordError):
    pass


class NonFiniteValue(RecordError):
    pass


class MissingJoint(RecordError):
    pass


@dataclass(frozen=True)
class HeadPoseSample:
    t: float
    position: Vec3
    orientation: tuple[float, float, float, float]  # (w, x, y, z)


@dataclass(frozen=True)
class SkeletonSample:
    t: float
    joints: dict[str, Vec3] = field(hash=False)


@dataclass(frozen=True)
class InteractionEvent:
    t: float
    kind: str
    arg: Optional[str] = None


Record = Union[HeadPoseSample, SkeletonSample, InteractionEvent]


@dataclass
class ParseResult:
    records: list[Record]
    errors: list[RecordError]
    lines: int

    @property
    def ok(self) -> bool:
        return not self.errors


def _time(obj: dict, lineno: Optional[int]) -> float:
    if "t" not in obj:
        raise MalformedRecord("missing field 't'", lineno)
    t = obj["t"]
    if isinstance(t, bool) or not isinstance(t, (int, float)):
        raise MalformedRecord(f"field 't' must be a number, got {t!r}", lineno)
    t = float(t)
    if not math.isfinite(t):
        raise NonFiniteValue("non-finite timestamp", lineno)
    if t < 0:
        raise MalformedRecord(f"negative timestamp {t}", lineno)
    return t


_NUMBER_TYPES = (float, int)


def _vector(value, n: int, name: str, lineno: Optional[int]) -> tuple[float, ...]:
    # fast path for the common case: a list of finite JSON numbers
    if type(value) is list and len(value) == n:
        for v in value:
            if type(v) not in _NUMBER_TYPES:
                break
        else:
            out = tuple(map(float, value))
            if math.isfinite(sum(out)):
                return out
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise MalformedRecord(f"field '{name}' must be a list of {n} numbers", lineno)
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MalformedRecord(f"field '{name}' holds a non-number {v!r}", lineno)
        v = float(v)
        if not math.isfinite(v):
            raise NonFiniteValue(f"non-finite value in '{name}'", lineno)
        out.append(v)
    return tuple(out)


def record_from_dict(obj: dict, lineno: Optional[int] = None) -> Record:
    """Validate one decoded record and build the matching sample/event."""
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not an object", lineno)
    t = _time(obj, lineno)
    kind = obj.get("type")
    if kind == "head_pose":
        pos = _vector(obj.get("pos"), 3, "pos", lineno)
        quat = _vector(obj.get("quat"), 4, "quat", lineno)
        norm = math.sqrt(sum(q * q for q in quat))
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise MalformedRecord(f"quaternion norm {norm:.9f} is not 1", lineno)
        return HeadPoseSample(t, pos, quat)  # type: ignore[arg-type]
    if kind == "skeleton":
        joints_in = obj.get("joints")
        if not isinstance(joints_in, dict):
            raise MalformedRecord("field 'joints' must be an object", lineno)
        joints: dict[str, Vec3] = {}
        for name in UPPER_BODY_JOINTS:
            if name not in joints_in:
                raise MissingJoint(f"skeleton record lacks joint '{name}'", lineno)
            joints[name] = _vector(joints_in[name], 3, f"joints.{name}", lineno)  # type: ignore[assignment]
        return SkeletonSample(t, joints)
    if kind == "event":
        ev = obj.get("kind")
        if ev not in EVENT_KINDS:
            raise MalformedRecord(f"unknown event kind {ev!r}", lineno)
        arg = obj.get("arg")
        if arg is not None and not isinstance(arg, str):
            raise MalformedRecord("field 'arg' must be a string", lineno)
        if ev == "request_component" and not arg:
            raise MalformedRecord("request_component needs a component id in 'arg'", lineno)
        return InteractionEvent(t, ev, arg or None)
    raise MalformedRecord(f"unknown record type {kind!r}", lineno)


def parse_session(lines: Iterable[str]) -> ParseResult:
    """Parse line-delimited records and merge them onto one clock.

    Blank lines are ignored. Every other line ends up either in ``records``
    or in ``errors``; records are sorted by time, ties keep file order.
    """
    records: list[Record] = []
    errors: list[RecordError] = []
    count = 0
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        count += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(MalformedRecord(f"invalid JSON ({exc.msg})", lineno))
            continue
        try:
            records.append(record_from_dict(obj, lineno))
        except RecordError as exc:
            errors.append(exc)
    records.sort(key=lambda r: r.t)
    return ParseResult(records, errors, count)


def read_session(path) -> ParseResult:
    with open(path, encoding="utf-8") as fh:
        return parse_session(fh)


def record_to_dict(rec: Record) -> dict:
    if isinstance(rec, HeadPoseSample):
        return {"t": rec.t, "type": "head_pose", "pos": list(rec.position), "quat": list(rec.orientation)}
    if isinstance(rec, SkeletonSample):
        return {"t": rec.t, "type": "skeleton", "joints": {k: list(v) for k, v in rec.joints.items()}}
    if isinstance(rec, InteractionEvent):
        out = {"t": rec.t, "type": "event", "kind": rec.kind}
        if rec.arg is not None:
            out["arg"] = rec.arg
        return out
    raise TypeError(f"not a session record: {rec!r}")


def serialize_record(rec: Record) -> str:
    # json uses repr() for floats, i.e. the shortest round-trip form
    return json.dumps(record_to_dict(rec), separators=(",", ":"))


def serialize_session(records: Iterable[Record]) -> Iterator[str]:
    for rec in records:
        yield serialize_record(rec) + "\n"


def write_session(path, records: Iterable[Record]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(serialize_session(records))


def iter_session(path) -> Iterator[Record]:
    """Stream records from a session file without holding it in memory.

    Raises the first :class:`RecordError` met, including
    :class:`OutOfOrder` when timestamps decrease (use :func:`read_session`
    to load and sort such a file).
    """
    last = -math.inf
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON ({exc.msg})", lineno) from None
            rec = record_from_dict(obj, lineno)
            if rec.t < last:
                raise OutOfOrder(f"timestamp {rec.t} precedes {last}", lineno)
            last = rec.t
            yield rec
