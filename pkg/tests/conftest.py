"""Shared fixtures: simulated sessions run once per test session and kept in
compact array form, plus the acceptance summary printed at the end."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import pytest

from cogload.config import ALL_FACTORS, config_from_dict
from cogload.engine import Engine, EngineSummary
from cogload.records import InteractionEvent
from cogload.simulator import ARCHETYPES, GroundTruth, ScenarioSpec, generate_session, scenario_config


@dataclass
class SessionRun:
    spec: ScenarioSpec
    truth: GroundTruth
    t: np.ndarray
    focus: np.ndarray  # 0 for no focus
    factors: dict[str, np.ndarray]  # hyperactivity is NaN where missing
    mental_effort: np.ndarray
    stress_level: np.ndarray
    event_log: list[tuple[int, str, float]]
    transitions: list
    browses: list[float]
    summary: EngineSummary
    records: int


def sim_config():
    return config_from_dict(scenario_config())


def spec_for(seed: int, **kw) -> ScenarioSpec:
    return ScenarioSpec(archetype=ARCHETYPES[seed % 3], seed=seed, **kw)


@functools.lru_cache(maxsize=None)
def run_simulated(seed: int, distraction_rate: float = 1.0, self_touch_rate: float = 0.5) -> SessionRun:
    spec = spec_for(seed, distraction_rate=distraction_rate, self_touch_rate=self_touch_rate)
    records, truth = generate_session(spec)
    engine = Engine(sim_config())
    t, focus, me, sl, log = [], [], [], [], []
    cols = {f: [] for f in ALL_FACTORS}
    for out in engine.run(records):
        t.append(out.t)
        focus.append(out.focus or 0)
        fv = out.factors
        for f in ALL_FACTORS:
            v = getattr(fv, f)
            cols[f].append(np.nan if v is None else v)
        me.append(out.scores.mental_effort)
        sl.append(out.scores.stress_level)
        log.extend((out.loop, kind, ts) for kind, ts in out.new_events)
    browses = [
        r.t for r in records if isinstance(r, InteractionEvent) and r.kind in ("instruction_next", "instruction_back")
    ]
    return SessionRun(
        spec,
        truth,
        np.asarray(t),
        np.asarray(focus, dtype=int),
        {f: np.asarray(v, dtype=float) for f, v in cols.items()},
        np.asarray(me),
        np.asarray(sl),
        log,
        list(engine.transitions),
        browses,
        engine.summary,
        len(records),
    )


@pytest.fixture(scope="session")
def simulated():
    return run_simulated


# -- acceptance reporting ---------------------------------------------------

_ACCEPTANCE: dict[str, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and item.name.startswith("test_criterion_"):
        if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
            doc = (item.function.__doc__ or "").strip().splitlines()
            detail = dict(item.user_properties).get("detail", "")
            status = "PASS" if rep.outcome == "passed" else "FAIL"
            _ACCEPTANCE[item.name] = (status, doc[0] if doc else item.name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        status, title, detail = _ACCEPTANCE[name]
        number = int(name.split("_")[2])
        line = f"[{status}] criterion {number:>2}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
