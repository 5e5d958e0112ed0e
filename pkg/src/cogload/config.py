"""Engine configuration: workstation layout, detector parameters, factor weights.

The configuration document is JSON. Only ``workstations`` is required; all
other keys fall back to defaults, and the names of the defaulted keys are kept
in ``EngineConfig.defaults_applied`` so a run report can list them.

Weights are renormalised to sum to one inside each score group. When weights
are given for some factors but not the two assistant-trust factors, those
inherit the weight (and threshold) of ``instruction_cost``, the quantity
measuring the same kind of checks on the instructions workstation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

MENTAL_EFFORT_FACTORS = (
    "concentration_loss",
    "learning_delay",
    "concentration_demand",
    "instruction_cost",
    "task_difficulty",
    "collaboration_burden",
    "wariness_for_assistant",
)
STRESS_FACTORS = ("self_touching", "hyperactivity")
ALL_FACTORS = MENTAL_EFFORT_FACTORS + STRESS_FACTORS

TRUST_FACTORS = ("collaboration_burden", "wariness_for_assistant")
TRUST_SOURCE = "instruction_cost"

# seconds spent in each assistant phase when the replay has to time them itself
DEFAULT_PHASE_DURATIONS = {
    "ReachingComponent": 4.0,
    "Grasping": 2.0,
    "Delivering": 4.0,
    "HandingOver": 3.0,
    "Homing": 4.0,
    "ReturningPart": 5.0,
}


class ConfigError(ValueError):
    pass


class InvalidWindow(ConfigError):
    pass


class NoWorkstations(ConfigError):
    pass


class NegativeWeight(ConfigError):
    pass


class MissingWeight(ConfigError):
    pass


@dataclass(frozen=True)
class WorkstationConfig:
    id: int
    name: str
    position: tuple[float, float, float]
    azimuth_window: tuple[float, float]
    elevation_window: tuple[float, float]


@dataclass(frozen=True)
class KalmanConfig:
    # white-acceleration spectral density and measurement variance, shared by
    # the position (m) and gaze angle (rad) channels
    process_noise: float = 20.0
    measurement_noise: float = 1e-3


@dataclass
class EngineConfig:
    workstations: list[WorkstationConfig]
    attention_threshold: float = 0.5
    loop_rate: float = 15.0
    motion_window: float = 1.0
    self_touch_distance: float = 0.15
    self_touch_debounce: float = 2.0
    not_required_switch_grace: float = 3.0
    min_attention_loss_duration: float = 1.0
    calibration_duration: float = 30.0
    weights: dict[str, float] = field(default_factory=dict)
    thresholds: dict[str, float] = field(default_factory=dict)
    kalman: KalmanConfig = field(default_factory=KalmanConfig)
    phase_durations: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_PHASE_DURATIONS))
    defaults_applied: list[str] = field(default_factory=list)

    @property
    def loop_period(self) -> float:
        return 1.0 / self.loop_rate

    def workstation(self, wid: int) -> Optional[WorkstationConfig]:
        for ws in self.workstations:
            if ws.id == wid:
                return ws
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "workstations": [
                {
                    "id": w.id,
                    "name": w.name,
                    "position": list(w.position),
                    "azimuth_window": list(w.azimuth_window),
                    "elevation_window": list(w.elevation_window),
                }
                for w in self.workstations
            ],
            "attention_threshold": self.attention_threshold,
            "loop_rate": self.loop_rate,
            "motion_window": self.motion_window,
            "self_touch_distance": self.self_touch_distance,
            "self_touch_debounce": self.self_touch_debounce,
            "not_required_switch_grace": self.not_required_switch_grace,
            "min_attention_loss_duration": self.min_attention_loss_duration,
            "calibration_duration": self.calibration_duration,
            "weights": dict(self.weights),
            "thresholds": dict(self.thresholds),
            "kalman": {
                "process_noise": self.kalman.process_noise,
                "measurement_noise": self.kalman.measurement_noise,
            },
            "phase_durations": dict(self.phase_durations),
        }


def _window(value: Any, label: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{label} must be a pair of numbers, got {value!r}") from None
    if not (0.0 <= lo < hi <= 180.0):
        raise InvalidWindow(f"{label} ({lo:g}, {hi:g}) must satisfy 0 <= min < max <= 180")
    return lo, hi


def _workstation(raw: dict, index: int) -> WorkstationConfig:
    wid = int(raw.get("id", index + 1))
    pos = raw.get("position")
    if not isinstance(pos, (list, tuple)) or len(pos) != 3:
        raise ConfigError(f"workstation {wid}: position must be a 3-vector")
    position = tuple(float(p) for p in pos)
    if not all(math.isfinite(p) for p in position):
        raise ConfigError(f"workstation {wid}: non-finite position")
    return WorkstationConfig(
        id=wid,
        name=str(raw.get("name", f"W{wid}")),
        position=position,  # type: ignore[arg-type]
        azimuth_window=_window(raw.get("azimuth_window"), f"workstation {wid} azimuth_window"),
        elevation_window=_window(raw.get("elevation_window"), f"workstation {wid} elevation_window"),
    )


def _group_weights(raw: dict[str, float], group: tuple[str, ...], defaults: list[str]) -> dict[str, float]:
    given = {f: raw[f] for f in group if f in raw}
    if not given:
        defaults.append(f"weights[{group[0]}..]: uniform")
        return {f: 1.0 / len(group) for f in group}
    out = dict(given)
    for f in group:
        if f in out:
            continue
        if f in TRUST_FACTORS and TRUST_SOURCE in given:
            out[f] = given[TRUST_SOURCE]
            defaults.append(f"weights[{f}]: from {TRUST_SOURCE}")
        else:
            raise MissingWeight(f"no weight given for factor '{f}'")
    total = sum(out.values())
    if total <= 0:
        raise NegativeWeight(f"weights of {group} sum to {total}; need a positive total")
    if abs(total - 1.0) > 1e-12:
        out = {f: w / total for f, w in out.items()}
    return {f: out[f] for f in group}


def config_from_dict(doc: dict[str, Any]) -> EngineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a key/value object")
    raw_ws = doc.get("workstations") or []
    if not raw_ws:
        raise NoWorkstations("configuration defines no workstations")
    workstations = [_workstation(w, i) for i, w in enumerate(raw_ws)]
    if len({w.id for w in workstations}) != len(workstations):
        raise ConfigError("workstation ids must be unique")
    workstations.sort(key=lambda w: w.id)

    defaults: list[str] = []
    cfg = EngineConfig(workstations=workstations)
    scalars = (
        "attention_threshold",
        "loop_rate",
        "motion_window",
        "self_touch_distance",
        "self_touch_debounce",
        "not_required_switch_grace",
        "min_attention_loss_duration",
        "calibration_duration",
    )
    for key in scalars:
        if key in doc:
            setattr(cfg, key, float(doc[key]))
        else:
            defaults.append(key)
    if not 0.0 < cfg.attention_threshold < 1.0:
        raise ConfigError("attention_threshold must lie in (0, 1)")
    if cfg.loop_rate <= 0:
        raise ConfigError("loop_rate must be positive")
    for key in scalars[2:]:
        if getattr(cfg, key) < 0:
            raise ConfigError(f"{key} must be non-negative")
    if cfg.motion_window <= 0:
        raise ConfigError("motion_window must be positive")

    raw_weights = {str(k): float(v) for k, v in (doc.get("weights") or {}).items()}
    unknown = set(raw_weights) - set(ALL_FACTORS)
    if unknown:
        raise ConfigError(f"unknown factor(s) in weights: {sorted(unknown)}")
    for f, w in raw_weights.items():
        if w < 0 or not math.isfinite(w):
            raise NegativeWeight(f"weight of '{f}' is {w}; weights must be non-negative")
    cfg.weights = {
        **_group_weights(raw_weights, MENTAL_EFFORT_FACTORS, defaults),
        **_group_weights(raw_weights, STRESS_FACTORS, defaults),
    }

    raw_thresholds = {str(k): float(v) for k, v in (doc.get("thresholds") or {}).items()}
    unknown = set(raw_thresholds) - set(ALL_FACTORS)
    if unknown:
        raise ConfigError(f"unknown factor(s) in thresholds: {sorted(unknown)}")
    thresholds = {}
    for f in ALL_FACTORS:
        if f in raw_thresholds:
            thresholds[f] = raw_thresholds[f]
        elif f in TRUST_FACTORS and TRUST_SOURCE in raw_thresholds:
            thresholds[f] = raw_thresholds[TRUST_SOURCE]
            defaults.append(f"thresholds[{f}]: from {TRUST_SOURCE}")
        else:
            thresholds[f] = 1.0
            defaults.append(f"thresholds[{f}]")
        if not thresholds[f] > 0 or not math.isfinite(thresholds[f]):
            raise ConfigError(f"threshold of '{f}' must be positive")
    cfg.thresholds = thresholds

    if "kalman" in doc:
        k = doc["kalman"]
        cfg.kalman = KalmanConfig(
            process_noise=float(k.get("process_noise", KalmanConfig.process_noise)),
            measurement_noise=float(k.get("measurement_noise", KalmanConfig.measurement_noise)),
        )
        if cfg.kalman.process_noise <= 0 or cfg.kalman.measurement_noise <= 0:
            raise ConfigError("kalman noise values must be positive")
    else:
        defaults.append("kalman")

    if "phase_durations" in doc:
        for name, value in doc["phase_durations"].items():
            if name not in DEFAULT_PHASE_DURATIONS:
                raise ConfigError(f"unknown assistant phase '{name}'")
            if float(value) <= 0:
                raise ConfigError(f"phase duration of '{name}' must be positive")
            cfg.phase_durations[name] = float(value)

    cfg.defaults_applied = defaults
    return cfg


def load_config(text: str) -> EngineConfig:
    """Parse a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from None
    return config_from_dict(doc)


def read_config(path) -> EngineConfig:
    with open(path, encoding="utf-8") as fh:
        return load_config(fh.read())
