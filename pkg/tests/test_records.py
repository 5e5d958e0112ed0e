"""Session records: parsing, ordering, errors and round trips."""

from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogload.records import (
    UPPER_BODY_JOINTS,
    HeadPoseSample,
    InteractionEvent,
    MalformedRecord,
    MissingJoint,
    NonFiniteValue,
    OutOfOrder,
    SkeletonSample,
    iter_session,
    parse_session,
    read_session,
    record_to_dict,
    serialize_session,
    write_session,
)


def _joints(offset: float = 0.0) -> dict:
    return {name: [i * 0.1 + offset, 1.0, 2.0] for i, name in enumerate(UPPER_BODY_JOINTS)}


def test_identity_head_pose():
    res = parse_session(['{"t": 0.0, "type": "head_pose", "pos": [0,0,0], "quat": [1,0,0,0]}'])
    assert res.ok and res.lines == 1
    assert res.records == [HeadPoseSample(0.0, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))]


def test_records_sorted_by_time_stably():
    lines = [
        '{"t": 5.0, "type": "event", "kind": "pause"}',
        '{"t": 3.0, "type": "event", "kind": "resume"}',
        '{"t": 3.0, "type": "event", "kind": "reset"}',
    ]
    res = parse_session(lines)
    assert [r.t for r in res.records] == [3.0, 3.0, 5.0]
    assert [r.kind for r in res.records] == ["resume", "reset", "pause"]


def test_missing_joint_names_line():
    joints = _joints()
    del joints["left_wrist"]
    lines = ['{"t": 0, "type": "event", "kind": "pause"}', json.dumps({"t": 1.0, "type": "skeleton", "joints": joints})]
    res = parse_session(lines)
    assert len(res.records) == 1
    (err,) = res.errors
    assert isinstance(err, MissingJoint)
    assert err.lineno == 2 and "left_wrist" in str(err) and "line 2" in str(err)


@pytest.mark.parametrize(
    "line, error",
    [
        ('{"type": "event", "kind": "pause"}', MalformedRecord),
        ('{"t": "x", "type": "event", "kind": "pause"}', MalformedRecord),
        ('{"t": -1, "type": "event", "kind": "pause"}', MalformedRecord),
        ('{"t": 1, "type": "event", "kind": "dance"}', MalformedRecord),
        ('{"t": 1, "type": "event", "kind": "request_component"}', MalformedRecord),
        ('{"t": 1, "type": "gizmo"}', MalformedRecord),
        ('{"t": 1, "type": "head_pose", "pos": [0,0], "quat": [1,0,0,0]}', MalformedRecord),
        ('{"t": 1, "type": "head_pose", "pos": [0,0,0], "quat": [2,0,0,0]}', MalformedRecord),
        ('{"t": 1, "type": "head_pose", "pos": [0,0,NaN], "quat": [1,0,0,0]}', NonFiniteValue),
        ('{"t": Infinity, "type": "event", "kind": "pause"}', NonFiniteValue),
        ("not json", MalformedRecord),
    ],
)
def test_bad_lines_are_reported(line, error):
    res = parse_session([line])
    assert not res.records
    assert len(res.errors) == 1 and isinstance(res.errors[0], error)
    assert res.errors[0].lineno == 1


def test_valid_plus_errors_equals_lines():
    lines = [
        '{"t": 1, "type": "event", "kind": "pause"}',
        "garbage",
        "",
        '{"t": 0.5, "type": "event", "kind": "instruction_next", "arg": "profile_1"}',
        '{"t": 2, "type": "skeleton", "joints": {}}',
    ]
    res = parse_session(lines)
    assert len(res.records) + len(res.errors) == res.lines == 4


def test_quaternion_norm_tolerance():
    q = [1 + 5e-7, 0, 0, 0]
    ok = parse_session([json.dumps({"t": 0, "type": "head_pose", "pos": [0, 0, 0], "quat": q})])
    assert ok.ok
    q = [1 + 5e-6, 0, 0, 0]
    bad = parse_session([json.dumps({"t": 0, "type": "head_pose", "pos": [0, 0, 0], "quat": q})])
    assert not bad.ok


finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
times = st.floats(min_value=0, max_value=1e4, allow_nan=False, allow_infinity=False)


@st.composite
def records(draw):
    t = draw(times)
    kind = draw(st.sampled_from(["head_pose", "skeleton", "event"]))
    if kind == "head_pose":
        q = draw(st.tuples(finite, finite, finite, finite).filter(lambda v: sum(x * x for x in v) > 1e-3))
        n = math.sqrt(sum(x * x for x in q))
        quat = tuple(x / n for x in q)
        return HeadPoseSample(t, draw(st.tuples(finite, finite, finite)), quat)
    if kind == "skeleton":
        return SkeletonSample(t, {j: draw(st.tuples(finite, finite, finite)) for j in UPPER_BODY_JOINTS})
    ev = draw(st.sampled_from(["instruction_next", "instruction_back", "request_component", "pause", "fsm_feedback"]))
    arg = draw(st.text(alphabet="abc_123", min_size=1, max_size=8)) if ev in ("request_component", "fsm_feedback") else None
    return InteractionEvent(t, ev, arg)


@settings(max_examples=60, deadline=None)
@given(st.lists(records(), max_size=20))
def test_round_trip(recs):
    res = parse_session(list(serialize_session(recs)))
    assert res.ok
    assert res.records == sorted(recs, key=lambda r: r.t)
    assert [record_to_dict(r) for r in res.records] == [record_to_dict(r) for r in sorted(recs, key=lambda r: r.t)]


@settings(max_examples=60, deadline=None)
@given(st.lists(records(), max_size=20))
def test_output_is_time_ordered_permutation(recs):
    lines = list(serialize_session(recs))
    res = parse_session(reversed(lines))
    assert all(a.t <= b.t for a, b in zip(res.records, res.records[1:]))
    assert sorted(map(repr, res.records)) == sorted(map(repr, recs))


def test_file_round_trip_and_streaming(tmp_path):
    recs = [
        HeadPoseSample(0.1, (0.0, 0.1, 1.2), (1.0, 0.0, 0.0, 0.0)),
        SkeletonSample(0.2, {j: (0.1, 0.2, 0.3) for j in UPPER_BODY_JOINTS}),
        InteractionEvent(0.3, "request_component", "profile_1"),
    ]
    path = tmp_path / "s.jsonl"
    write_session(path, recs)
    assert read_session(path).records == recs
    assert list(iter_session(path)) == recs


def test_streaming_rejects_out_of_order(tmp_path):
    path = tmp_path / "s.jsonl"
    write_session(path, [InteractionEvent(2.0, "pause"), InteractionEvent(1.0, "resume")])
    with pytest.raises(OutOfOrder) as exc:
        list(iter_session(path))
    assert exc.value.lineno == 2
    assert [r.t for r in read_session(path).records] == [1.0, 2.0]
