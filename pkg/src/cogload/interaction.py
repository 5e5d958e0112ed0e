"""Instruction browsing and the assistant state machine.

The assistant cycles InputWaiting -> ReachingComponent -> Grasping ->
Delivering -> HandingOver -> Homing -> InputWaiting, one cycle per requested
component. Phases end on an explicit ``phase_done`` input, so the transition
function stays pure; :class:`AssistantRunner` supplies those inputs from
per-phase timers on the session clock.

A reset sends the part back to storage (ReturningPart) and then homes.
Pause freezes any state except InputWaiting; resume restores it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

INPUT_WAITING = "InputWaiting"
REACHING = "ReachingComponent"
GRASPING = "Grasping"
DELIVERING = "Delivering"
HANDING_OVER = "HandingOver"
HOMING = "Homing"
RETURNING = "ReturningPart"

STATES = (INPUT_WAITING, REACHING, GRASPING, DELIVERING, HANDING_OVER, HOMING, RETURNING)

# what the feedback screen shows on entry
LABELS = {
    INPUT_WAITING: "Input waiting",
    REACHING: "Reaching component",
    GRASPING: "Grasping",
    DELIVERING: "Delivering",
    HANDING_OVER: "Handing over",
    HOMING: "Homing",
    RETURNING: "Returning part",
}

NEXT_PHASE = {
    REACHING: GRASPING,
    GRASPING: DELIVERING,
    DELIVERING: HANDING_OVER,
    HANDING_OVER: HOMING,
    HOMING: INPUT_WAITING,
    RETURNING: HOMING,
}

# states holding a component; a reset is only meaningful here
CARRYING = frozenset({REACHING, GRASPING, DELIVERING, HANDING_OVER})

INPUTS = ("request", "pause", "resume", "reset", "phase_done")


class InvalidInput(ValueError):
    def __init__(self, message: str, t: Optional[float] = None):
        self.t = t
        if t is not None:
            message = f"t={t:g}: {message}"
        super().__init__(message)


@dataclass
class TaskProgress:
    current_step: int = 0
    steps_completed: int = 0
    check_backs: list[float] = field(default_factory=list)
    total_steps: Optional[int] = None


def apply_instruction_event(progress: TaskProgress, kind: str, t: float) -> TaskProgress:
    """Advance or rewind the instruction pointer. Rewinding records a check back
    even when already at the first step."""
    if kind == "instruction_next":
        step = progress.current_step + 1
        if progress.total_steps is not None:
            step = min(step, progress.total_steps)
        return replace(progress, current_step=step, steps_completed=progress.steps_completed + 1)
    if kind == "instruction_back":
        return replace(
            progress,
            current_step=max(progress.current_step - 1, 0),
            check_backs=[*progress.check_backs, t],
        )
    raise ValueError(f"not an instruction event: {kind!r}")


@dataclass(frozen=True)
class AssistantState:
    state: str = INPUT_WAITING
    paused: bool = False
    paused_from: Optional[str] = None
    active_component: Optional[str] = None


@dataclass(frozen=True)
class AssistantFeedback:
    t: float
    state: str

    @property
    def label(self) -> str:
        return LABELS[self.state]


def fsm_step(
    st: AssistantState, kind: str, component: Optional[str] = None, t: float = 0.0
) -> tuple[AssistantState, Optional[AssistantFeedback]]:
    """One transition of the assistant machine.

    Raises :class:`InvalidInput` (leaving the caller's state untouched) for a
    request while busy, a resume while running, a pause while idle or paused,
    a phase_done while paused or idle, and a reset with nothing to return.
    """
    if kind == "request":
        if st.state != INPUT_WAITING:
            raise InvalidInput(f"request while assistant is {st.state}", t)
        if not component:
            raise InvalidInput("request without a component id", t)
        new = AssistantState(REACHING, active_component=component)
        return new, AssistantFeedback(t, REACHING)
    if kind == "pause":
        if st.state == INPUT_WAITING or st.paused:
            raise InvalidInput(f"pause while {'paused' if st.paused else st.state}", t)
        return replace(st, paused=True, paused_from=st.state), None
    if kind == "resume":
        if not st.paused:
            raise InvalidInput("resume while not paused", t)
        return replace(st, state=st.paused_from, paused=False, paused_from=None), None
    if kind == "reset":
        if st.state not in CARRYING:
            raise InvalidInput(f"reset while {st.state}", t)
        new = AssistantState(RETURNING, active_component=st.active_component)
        return new, AssistantFeedback(t, RETURNING)
    if kind == "phase_done":
        if st.paused:
            raise InvalidInput("phase_done while paused", t)
        if st.state == INPUT_WAITING:
            raise InvalidInput("phase_done while waiting for input", t)
        nxt = NEXT_PHASE[st.state]
        component = st.active_component if nxt not in (INPUT_WAITING, HOMING) else None
        return AssistantState(nxt, active_component=component), AssistantFeedback(t, nxt)
    raise InvalidInput(f"unknown input {kind!r}", t)


class AssistantRunner:
    """Drives :func:`fsm_step` on the session clock.

    Each phase lasts ``durations[state]`` seconds of un-paused time; call
    :meth:`advance` with the current time to emit the phase completions that
    have elapsed, and :meth:`command` for external inputs.
    """

    def __init__(self, durations: dict[str, float], t0: float = 0.0):
        self.durations = durations
        self.state = AssistantState()
        self.trace: list[AssistantFeedback] = [AssistantFeedback(t0, INPUT_WAITING)]
        self._remaining: Optional[float] = None
        self._clock = t0

    def _enter(self, fb: Optional[AssistantFeedback]) -> None:
        if fb is not None:
            self.trace.append(fb)
            self._remaining = self.durations.get(fb.state) if fb.state != INPUT_WAITING else None

    def advance(self, t: float) -> list[AssistantFeedback]:
        start = len(self.trace)
        while not self.state.paused and self._remaining is not None and self._clock + self._remaining <= t:
            self._clock += self._remaining
            self.state, fb = fsm_step(self.state, "phase_done", t=self._clock)
            self._enter(fb)
        if not self.state.paused and self._remaining is not None:
            self._remaining -= t - self._clock
        self._clock = max(self._clock, t)
        return self.trace[start:]

    def command(self, t: float, kind: str, component: Optional[str] = None) -> list[AssistantFeedback]:
        out = self.advance(t)
        self.state, fb = fsm_step(self.state, kind, component, t)
        self._enter(fb)
        return out + ([fb] if fb else [])


def run_scripted_assistant(
    commands: Iterable[tuple[float, str, Optional[str]]],
    durations: dict[str, float],
    until: Optional[float] = None,
) -> list[AssistantFeedback]:
    """Replay time-ordered ``(t, input, component)`` commands and return the
    feedback trace, starting with the initial InputWaiting entry.

    Phases still running after the last command are played out (or up to
    ``until``). An invalid command raises :class:`InvalidInput` with its time.
    """
    runner = AssistantRunner(durations)
    last_t = float("-inf")
    for t, kind, component in commands:
        if t < last_t:
            raise InvalidInput("commands are not time-ordered", t)
        last_t = t
        runner.command(t, kind, component)
    runner.advance(until if until is not None else float("inf"))
    return runner.trace


def count_cycles(trace: Iterable[AssistantFeedback]) -> int:
    """Complete handover cycles: Reaching, Grasping, Delivering, HandingOver,
    Homing, InputWaiting entered back to back."""
    cycle = (REACHING, GRASPING, DELIVERING, HANDING_OVER, HOMING, INPUT_WAITING)
    states = [fb.state for fb in trace]
    n, i = 0, 0
    while i <= len(states) - len(cycle):
        if tuple(states[i : i + len(cycle)]) == cycle:
            n += 1
            i += len(cycle)
        else:
            i += 1
    return n
