"""Online cognitive load assessment for assembly work.

Head pose, upper-body skeleton and interaction events are turned into nine
behavioural factors and two scores, mental effort and stress level, once per
engine loop. An offline toolkit relates block means of the scores to heart
rate variability and skin conductance, and a simulator produces synthetic
sessions with known ground truth.
"""

__version__ = "0.1.0"

from .config import EngineConfig, config_from_dict, load_config, read_config
from .engine import Engine, LoopOutput, run_engine
from .records import parse_session, read_session, write_session

__all__ = [
    "Engine",
    "EngineConfig",
    "LoopOutput",
    "config_from_dict",
    "load_config",
    "parse_session",
    "read_config",
    "read_session",
    "run_engine",
    "write_session",
    "__version__",
]
