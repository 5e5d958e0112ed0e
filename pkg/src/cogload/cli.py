"""Command-line entry points: simulate, replay, validate, report.

Exit codes: 0 on success, 1 on a runtime or data error, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .chart import line_chart
from .config import ALL_FACTORS, ConfigError, EngineConfig, read_config
from .engine import Engine
from .interaction import AssistantFeedback, count_cycles
from .kinematics import HANDS
from .physio import (
    BLOCK_LENGTH,
    EdaSeries,
    SeriesTooShort,
    block_count,
    block_index,
    eda_decompose,
    eda_from_samples,
    lf_hf_ratio,
    segment_blocks,
    spearman,
)
from .records import OutOfOrder, Record, RecordError, iter_session, read_session, write_session
from .simulator import ARCHETYPES, ScenarioSpec, generate_physio, generate_session, normalise_profile, scenario_config

log = logging.getLogger("cogload")

SCORE_COLUMNS = ("t", *ALL_FACTORS, "mental_effort", "stress_level", "focus", "assistant_state")


class DataError(Exception):
    """Bad or insufficient input data (exit code 1)."""


def _fmt(x) -> str:
    # repr gives the shortest string that round-trips, on every platform
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _clean(x):
    """JSON-safe copy: NaN and infinities become null."""
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=False) + "\n", encoding="utf-8")


# -- replay ------------------------------------------------------------------


@dataclass
class RunReport:
    session: str
    config: str
    loops: int
    duration: float
    outputs: dict[str, str] = field(default_factory=dict)
    blocks: list[dict] = field(default_factory=list)
    event_counts: dict[str, int] = field(default_factory=dict)
    transition_counts: dict[str, int] = field(default_factory=dict)
    feedback_cycles: int = 0
    steps_completed: int = 0
    filter_resets: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class _Outputs:
    """Tracks files written by one run so a failure can remove them."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.paths: dict[str, Path] = {}
        self._handles = []

    def open(self, key: str, name: str):
        path = self.dir / name
        self.paths[key] = path
        fh = open(path, "w", encoding="utf-8", newline="")
        self._handles.append(fh)
        return fh

    def path(self, key: str, name: str) -> Path:
        path = self.dir / name
        self.paths[key] = path
        return path

    def close(self) -> None:
        for fh in self._handles:
            fh.close()
        self._handles = []

    def discard(self) -> None:
        self.close()
        for p in self.paths.values():
            try:
                p.unlink()
            except FileNotFoundError:
                pass
        self.paths = {}


def replay_session(
    config: EngineConfig,
    records: Iterable[Record],
    out_dir,
    debug: bool = False,
    session_name: str = "",
    config_name: str = "",
    block_length: float = BLOCK_LENGTH,
) -> RunReport:
    """Stream ``records`` through the engine and write the run artifacts.

    Writes ``scores.csv`` (one row per loop), ``feedback.csv``,
    ``summary.json`` and ``chart.svg``; with ``debug`` also
    ``attention.csv`` and ``kinematics.csv``. On any exception the files
    written so far are removed before it propagates.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outs = _Outputs(out_dir)
    try:
        return _replay(config, records, outs, debug, session_name, config_name, block_length)
    except BaseException:
        outs.discard()
        raise


def _replay(config, records, outs: _Outputs, debug, session_name, config_name, block_length) -> RunReport:
    engine = Engine(config)
    ws_ids = [ws.id for ws in config.workstations]
    scores_w = csv.writer(outs.open("scores", "scores.csv"), lineterminator="\n")
    scores_w.writerow(SCORE_COLUMNS)
    if debug:
        att_w = csv.writer(outs.open("attention", "attention.csv"), lineterminator="\n")
        att_w.writerow(["t", *(f"A_W{w}" for w in ws_ids), "focus", "transition_kind"])
        joints = engine.tracker.joints
        kin_w = csv.writer(outs.open("kinematics", "kinematics.csv"), lineterminator="\n")
        kin_w.writerow(["t", "a_k", *(f"a_{j}" for j in joints), *(f"self_touch_{h}" for h in HANDS)])

    t_series: list[float] = []
    me: list[float] = []
    sl: list[float] = []
    factor_cols: dict[str, list[float]] = {f: [] for f in ALL_FACTORS}
    for out in engine.run(records):
        fv = out.factors
        values = [getattr(fv, f) for f in ALL_FACTORS]
        scores_w.writerow(
            [
                _fmt(out.t),
                *(_fmt(v) for v in values),
                _fmt(out.scores.mental_effort),
                _fmt(out.scores.stress_level),
                _fmt(out.focus),
                out.assistant_state,
            ]
        )
        t_series.append(out.t)
        me.append(out.scores.mental_effort)
        sl.append(out.scores.stress_level)
        for f, v in zip(ALL_FACTORS, values):
            factor_cols[f].append(math.nan if v is None else v)
        if debug:
            att_w.writerow(
                [_fmt(out.t), *(_fmt(v) for v in out.levels), _fmt(out.focus), ";".join(tr.kind for tr in out.transitions)]
            )
            act = out.activity or {}
            level = fv.hyperactivity
            touched = {ev.hand for ev in out.touches}
            kin_w.writerow(
                [
                    _fmt(out.t),
                    _fmt(level),
                    *(_fmt(act.get(j)) for j in joints),
                    *("1" if h in touched else "0" for h in HANDS),
                ]
            )
    summary = engine.summary

    fb_w = csv.writer(outs.open("feedback", "feedback.csv"), lineterminator="\n")
    fb_w.writerow(["t", "state"])
    for t, state in summary.feedback:
        fb_w.writerow([_fmt(t), state])
    outs.close()

    duration = summary.loops / config.loop_rate
    blocks = []
    if t_series and block_count(duration, block_length):
        channels = {"mental_effort": me, "stress_level": sl, **factor_cols}
        for b in segment_blocks(t_series, channels, block_length, duration=duration):
            blocks.append({"index": b.index, "start": b.start, "end": b.end, "loops": b.samples, "means": b.means})

    chart_path = outs.path("chart", "chart.svg")
    chart_path.write_text(
        line_chart(
            t_series,
            {"mental_effort": me, "stress_level": sl},
            title=f"scores: {session_name}" if session_name else "scores",
            block_length=block_length,
        ),
        encoding="utf-8",
    )

    cycles = count_cycles(AssistantFeedback(t, s) for t, s in summary.feedback)
    report = RunReport(
        session=session_name,
        config=config_name,
        loops=summary.loops,
        duration=duration,
        blocks=blocks,
        event_counts=dict(sorted(summary.event_counts.items())),
        transition_counts=dict(sorted(summary.transition_counts.items())),
        feedback_cycles=cycles,
        steps_completed=summary.steps_completed,
        filter_resets=summary.filter_resets,
        warnings=list(summary.warnings),
    )
    summary_path = outs.path("summary", "summary.json")
    report.outputs = {k: p.name for k, p in sorted(outs.paths.items())}
    _write_json(summary_path, report.to_dict())
    return report


# -- validate ----------------------------------------------------------------


def load_scores(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"t", "mental_effort", "stress_level"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise DataError(f"{path}: scores file needs columns {sorted(need)}")
        t, me, sl = [], [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                t.append(float(row["t"]))
                me.append(float(row["mental_effort"]))
                sl.append(float(row["stress_level"]))
            except (TypeError, ValueError):
                raise DataError(f"{path}:{lineno}: non-numeric score row") from None
    if not t:
        raise DataError(f"{path}: no score rows")
    return np.asarray(t), np.asarray(me), np.asarray(sl)


def _numeric_rows(path) -> tuple[list[list[float]], dict[str, str]]:
    rows, meta = [], {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if sep:
                    meta[key.strip().lower()] = value.strip()
                continue
            try:
                rows.append([float(x) for x in line.replace(",", " ").split()])
            except ValueError:
                raise DataError(f"{path}:{lineno}: not numeric: {line!r}") from None
    return rows, meta


def load_rr(path) -> np.ndarray:
    rows, _ = _numeric_rows(path)
    if any(len(r) != 1 for r in rows):
        raise DataError(f"{path}: RR file must have exactly one column")
    return np.asarray([r[0] for r in rows])


def load_eda(path) -> EdaSeries:
    rows, meta = _numeric_rows(path)
    if any(len(r) != 2 for r in rows):
        raise DataError(f"{path}: EDA file must have two columns (t, value)")
    rate = None
    if "rate" in meta:
        try:
            rate = float(meta["rate"])
        except ValueError:
            raise DataError(f"{path}: bad rate declaration {meta['rate']!r}") from None
    if len(rows) < 2:
        raise DataError(f"{path}: EDA file has fewer than two samples")
    return eda_from_samples([r[0] for r in rows], [r[1] for r in rows], rate)


def _rr_blocks(rr: np.ndarray, block_length: float) -> list[Optional[float]]:
    beats = np.cumsum(rr)
    n = block_count(float(beats[-1]), block_length)
    out: list[Optional[float]] = []
    for b in range(n):
        mask = (beats > b * block_length) & (beats <= (b + 1) * block_length)
        try:
            out.append(lf_hf_ratio(rr[mask]).ratio)
        except SeriesTooShort:
            out.append(None)  # e.g. a short trailing block
    return out


def validate_series(
    t: np.ndarray,
    me: np.ndarray,
    sl: np.ndarray,
    rr: np.ndarray,
    eda: EdaSeries,
    block_length: float = BLOCK_LENGTH,
) -> dict:
    """Block means of scores and physiological features with Spearman r_s.

    Raises :class:`SeriesTooShort` when the RR or EDA series is too short to
    analyse at all, and :class:`DataError` when fewer than two blocks overlap.
    """
    lf_hf_ratio(rr)  # whole-series check: raises SeriesTooShort / AllArtifacts
    score_blocks = segment_blocks(t, {"mental_effort": me, "stress_level": sl}, block_length, duration=float(t[-1]))
    rr_blocks = _rr_blocks(rr, block_length)
    dec = eda_decompose(eda)
    eda_end = float(dec.times[-1])
    eda_blocks = segment_blocks(dec.times, {"scl": dec.tonic}, block_length, duration=eda_end)
    peak_block = block_index(dec.peak_times, block_length)

    n = min(len(score_blocks), len(rr_blocks), len(eda_blocks))
    if n < 2:
        raise DataError(f"only {n} block(s) of {block_length:g} s overlap across inputs; need 2")
    blocks = []
    for b in range(n):
        amps = dec.peak_amplitudes[peak_block == b]
        blocks.append(
            {
                "index": b + 1,
                "start": b * block_length,
                "end": (b + 1) * block_length,
                "mental_effort": score_blocks[b].means["mental_effort"],
                "stress_level": score_blocks[b].means["stress_level"],
                "lf_hf": rr_blocks[b],
                "scl_mean": eda_blocks[b].means["scl"],
                "scr_mean_amplitude": float(amps.mean()) if amps.size else None,
                "scr_peaks": int(amps.size),
            }
        )

    def corr(xk: str, yk: str) -> dict:
        pairs = [(blk[xk], blk[yk]) for blk in blocks]
        pairs = [(x, y) for x, y in pairs if x is not None and y is not None and not (math.isnan(x) or math.isnan(y))]
        entry = {"x": xk, "y": yk, "blocks": len(pairs), "r_s": None}
        try:
            entry["r_s"] = spearman([p[0] for p in pairs], [p[1] for p in pairs])
        except ValueError as exc:
            entry["error"] = f"{type(exc).__name__}: {exc}"
        return entry

    return {
        "block_length": block_length,
        "blocks": blocks,
        "correlations": [
            corr("mental_effort", "lf_hf"),
            corr("stress_level", "scl_mean"),
            corr("stress_level", "scr_mean_amplitude"),
        ],
    }


# -- commands ----------------------------------------------------------------


def _sidecars(session_path: Path) -> dict[str, Path]:
    stem = session_path.name[: -len(".jsonl")] if session_path.name.endswith(".jsonl") else session_path.name
    base = session_path.with_name(stem)
    return {
        "truth": base.with_name(stem + ".truth.json"),
        "config": base.with_name(stem + ".config.json"),
        "rr": base.with_name(stem + ".rr.txt"),
        "eda": base.with_name(stem + ".eda.txt"),
    }


def write_physio(rr: np.ndarray, eda: EdaSeries, rr_path: Path, eda_path: Path) -> None:
    with open(rr_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{x!r}\n" for x in rr.tolist())
    with open(eda_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# rate: {eda.rate:g}\n")
        times = eda.times.tolist()
        fh.writelines(f"{t!r} {v!r}\n" for t, v in zip(times, eda.values.tolist()))


def cmd_simulate(args, parser) -> int:
    spec = ScenarioSpec(archetype=args.scenario, seed=args.seed, duration=args.duration)
    try:
        spec.validate()
    except ValueError as exc:
        parser.error(str(exc))
    out = Path(args.out or f"{spec.archetype}_seed{spec.seed}.jsonl")
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True)
    records, truth = generate_session(spec)
    side = _sidecars(out)
    write_session(out, records)
    _write_json(side["truth"], truth.to_dict())
    _write_json(side["config"], scenario_config(spec))
    profile = truth.load_profile
    rr, eda = generate_physio(
        normalise_profile(profile.get("mental_effort", [])),
        spec.seed,
        normalise_profile(profile.get("stress_level", [])),
    )
    write_physio(rr, eda, side["rr"], side["eda"])
    print(f"wrote {out} ({len(records)} records) and sidecars {', '.join(p.name for p in side.values())}")
    return 0


def cmd_replay(args, parser) -> int:
    try:
        config = read_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 1
    if not os.path.exists(args.session):
        print(f"error: session file not found: {args.session}", file=sys.stderr)
        return 1
    out = Path(args.out or "replay_out")
    kwargs = dict(debug=args.debug, session_name=str(args.session), config_name=str(args.config))
    try:
        try:
            report = replay_session(config, iter_session(args.session), out, **kwargs)
        except OutOfOrder:
            # not time-ordered on disk: load, check and sort in memory instead
            parsed = read_session(args.session)
            if not parsed.ok:
                for err in parsed.errors[:20]:
                    print(f"error: {args.session}: {err}", file=sys.stderr)
                return 1
            report = replay_session(config, parsed.records, out, **kwargs)
            report.warnings.insert(0, "session file was not time-ordered; records were sorted in memory")
            _write_json(out / "summary.json", report.to_dict())
    except RecordError as exc:
        print(f"error: {args.session}: {exc}", file=sys.stderr)
        return 1
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{report.loops} loops, {len(report.blocks)} block(s); outputs in {out}")
    return 0


def cmd_validate(args, parser) -> int:
    if args.block_length is not None and not args.block_length > 0:
        parser.error("--block-length must be positive")
    block_length = args.block_length or BLOCK_LENGTH
    try:
        t, me, sl = load_scores(args.scores)
        rr = load_rr(args.rr)
        eda = load_eda(args.eda)
        doc = validate_series(t, me, sl, rr, eda, block_length)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (DataError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    doc = {"scores": str(args.scores), "rr": str(args.rr), "eda": str(args.eda), **doc}
    if args.out:
        _write_json(Path(args.out), doc)
        for c in doc["correlations"]:
            r = c["r_s"]
            print(f"{c['x']} vs {c['y']}: r_s = {'undefined (' + c.get('error', '') + ')' if r is None else f'{r:.3f}'}")
    else:
        print(json.dumps(_clean(doc), indent=2))
    return 0


def cmd_report(args, parser) -> int:
    out = Path(args.out or "replay_out")
    path = out / "summary.json"
    if not path.exists():
        print(f"error: no summary.json in {out}; run 'replay' first", file=sys.stderr)
        return 1
    doc = json.loads(path.read_text(encoding="utf-8"))
    print(f"session   {doc['session']}")
    print(f"loops     {doc['loops']} ({doc['duration']:.1f} s)")
    print(f"handovers {doc['feedback_cycles']} complete assistant cycles")
    print("block  mental_effort  stress_level")
    for b in doc["blocks"]:
        m = b["means"]
        print(f"{b['index']:>5}  {m['mental_effort']:>13.4f}  {m['stress_level']:>12.4f}")
    print("events    " + ", ".join(f"{k}={v}" for k, v in doc["event_counts"].items()))
    for w in doc["warnings"]:
        print(f"warning   {w}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogload", description="Online cognitive load assessment from pose and interaction streams.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic session with ground truth and physiology")
    p.add_argument("--scenario", choices=ARCHETYPES, default="hrc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=600.0, help="seconds (default 600)")
    p.add_argument("--out", help="session file to write (default <scenario>_seed<seed>.jsonl)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="run a recorded session through the engine")
    p.add_argument("--config", required=True, help="engine configuration (JSON)")
    p.add_argument("--session", required=True, help="line-delimited JSON session file")
    p.add_argument("--out", help="output directory (default replay_out)")
    p.add_argument("--debug", action="store_true", help="also write attention.csv and kinematics.csv")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("validate", help="correlate score blocks with physiological features")
    p.add_argument("--scores", required=True, help="scores.csv from replay")
    p.add_argument("--rr", required=True, help="RR intervals, one per line (s)")
    p.add_argument("--eda", required=True, help="skin conductance, 't value' per line; optional '# rate: N' header")
    p.add_argument("--block-length", type=float, default=None, help="seconds (default 150)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="print a summary of a replay output directory")
    p.add_argument("--out", help="replay output directory (default replay_out)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
