"""Cognitive-load factors and the mental effort / stress level scores.

Dwell times are kept as integer loop counts so that every dwell fraction is
an exact ``count / loops`` ratio. The event-based factors divide the *sum of
event instants* by the elapsed time, so later events weigh more and the raw
values are unbounded; they are brought to [0, 1] only after dividing by the
factor threshold.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, fields
from typing import Mapping, Optional

from .attention import ASSEMBLY, ASSISTANT, FocusState
from .config import MENTAL_EFFORT_FACTORS, STRESS_FACTORS, MissingWeight

SELF_TOUCH_DECAY = 60.0  # seconds

EVENT_KINDS = ("attention_loss", "not_required_switch", "check_back", "assistant_check", "self_touch")


class ZeroElapsed(ValueError):
    pass


@dataclass
class FactorState:
    loop_rate: float
    loops: int = 0
    dwell_loops: dict[int, int] = field(default_factory=dict)
    events: dict[str, list[float]] = field(default_factory=lambda: {k: [] for k in EVENT_KINDS})
    event_sums: dict[str, float] = field(default_factory=lambda: {k: 0.0 for k in EVENT_KINDS})
    _recent_touches: deque = field(default_factory=deque, repr=False)

    @property
    def elapsed(self) -> float:
        return self.loops / self.loop_rate

    def attention_time(self, wid: int) -> float:
        return self.dwell_loops.get(wid, 0) / self.loop_rate

    def add_event(self, kind: str, t: float) -> None:
        self.events[kind].append(t)
        self.event_sums[kind] += t
        if kind == "self_touch":
            self._recent_touches.append(t)

    def self_touch_sum(self, t: float) -> float:
        recent = self._recent_touches
        while recent and recent[0] + SELF_TOUCH_DECAY - t <= 0:
            recent.popleft()
        total = 0.0
        for ts in recent:
            total += max(0.0, (ts + SELF_TOUCH_DECAY - t) / SELF_TOUCH_DECAY)
        return total


def accumulate(state: FactorState, focus: FocusState) -> FactorState:
    """Advance the state by one loop period spent on ``focus.target``."""
    state.loops += 1
    if focus.target is not None:
        state.dwell_loops[focus.target] = state.dwell_loops.get(focus.target, 0) + 1
    return state


@dataclass(slots=True)
class FactorVector:
    t: float
    concentration_loss: float
    learning_delay: float
    concentration_demand: float
    instruction_cost: float
    task_difficulty: float
    collaboration_burden: float
    wariness_for_assistant: float
    self_touching: float
    hyperactivity: Optional[float]

    def as_dict(self) -> dict[str, Optional[float]]:
        return {name: getattr(self, name) for name in _FACTOR_FIELDS}


def factor_vector(state: FactorState, hyperactivity: Optional[float], t: Optional[float] = None) -> FactorVector:
    """Evaluate all nine factors. ``hyperactivity`` is the current activity
    level (``None`` when it cannot be computed this loop)."""
    if state.loops == 0:
        raise ZeroElapsed("factors are undefined before the first loop")
    elapsed = state.elapsed
    if t is None:
        t = elapsed
    loops = state.loops
    sums = state.event_sums
    return FactorVector(
        t=t,
        concentration_loss=1.0 - sum(state.dwell_loops.values()) / loops,
        learning_delay=state.dwell_loops.get(ASSEMBLY, 0) / loops,
        concentration_demand=sums["attention_loss"] / elapsed,
        instruction_cost=sums["not_required_switch"] / elapsed,
        task_difficulty=sums["check_back"] / elapsed,
        collaboration_burden=state.dwell_loops.get(ASSISTANT, 0) / loops,
        wariness_for_assistant=sums["assistant_check"] / elapsed,
        self_touching=min(state.self_touch_sum(t), 1.0),
        hyperactivity=hyperactivity,
    )


_FACTOR_FIELDS = tuple(f.name for f in fields(FactorVector) if f.name != "t")


@dataclass(slots=True)
class ScorePair:
    t: float
    mental_effort: float
    stress_level: float


def _group_score(factors: FactorVector, group, weights, thresholds) -> float:
    total = 0.0
    for f in group:
        w = weights.get(f)
        if w is None:
            raise MissingWeight(f"no weight for factor '{f}'")
        value = getattr(factors, f)
        if value is None:
            continue
        x = value / thresholds.get(f, 1.0)
        total += w * (0.0 if x < 0.0 else 1.0 if x > 1.0 else x)
    return total


def scores(factors: FactorVector, weights: Mapping[str, float], thresholds: Mapping[str, float]) -> ScorePair:
    """Weighted sums of threshold-normalised, clipped factors.

    Weights are expected to sum to one inside each group (the configuration
    loader guarantees it). A missing hyperactivity value contributes nothing.
    """
    me = _group_score(factors, MENTAL_EFFORT_FACTORS, weights, thresholds)
    sl = _group_score(factors, STRESS_FACTORS, weights, thresholds)
    return ScorePair(factors.t, min(me, 1.0), min(sl, 1.0))
