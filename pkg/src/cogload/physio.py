"""Offline physiological features used to validate the online scores.

These are simplified stand-ins for dedicated HRV/EDA software:

* LF/HF: RR tachogram resampled at 4 Hz with a cubic spline, mean removed,
  Welch PSD (120 s Hann segments, 50 % overlap), band powers integrated over
  0.04-0.15 Hz and 0.15-0.40 Hz.
* EDA: 4th-order zero-phase Butterworth low-pass at 2 Hz; the tonic level is
  a 10 s running median further low-passed at 0.05 Hz; phasic is the
  remainder; SCR peaks are phasic local maxima of at least 0.01 uS. This is
  a median-baseline split, not a deconvolution model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import interpolate, ndimage, signal, stats

RR_MIN, RR_MAX = 0.25, 3.0
RR_MAX_JUMP = 0.25
RESAMPLE_HZ = 4.0
WELCH_SEGMENT = 120.0
LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.40)
MIN_RR_SPAN = 120.0

EDA_CUTOFF = 2.0
EDA_MIN_RATE = 8.0
EDA_MIN_DURATION = 60.0
TONIC_MEDIAN_WINDOW = 10.0
TONIC_CUTOFF = 0.05
SCR_MIN_AMPLITUDE = 0.01

BLOCK_LENGTH = 150.0


class SeriesTooShort(ValueError):
    pass


class AllArtifacts(ValueError):
    pass


class NonUniformSampling(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


class TooFewPairs(ValueError):
    pass


# -- heart rate variability ------------------------------------------------


def clean_rr(rr: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Drop implausible intervals.

    Returns beat times (cumulative, including the dropped intervals) and the
    kept intervals. An interval is dropped when it lies outside (0.25, 3.0) s
    or differs from the last kept one by more than 25 %.
    """
    rr = np.asarray(rr, dtype=float)
    times = np.cumsum(rr)
    keep = np.zeros(rr.size, dtype=bool)
    prev = None
    for i, x in enumerate(rr):
        if not (RR_MIN < x < RR_MAX):
            continue
        if prev is not None and abs(x - prev) > RR_MAX_JUMP * prev:
            continue
        keep[i] = True
        prev = x
    return times[keep], rr[keep]


@dataclass(frozen=True)
class HrvBands:
    lf: float
    hf: float

    @property
    def ratio(self) -> float:
        return self.lf / self.hf if self.hf > 0 else math.inf


def _band_power(freqs: np.ndarray, psd: np.ndarray, band: tuple[float, float], closed: bool) -> float:
    lo, hi = band
    mask = (freqs >= lo) & ((freqs <= hi) if closed else (freqs < hi))
    if mask.sum() < 2:
        return float(psd[mask].sum() * (freqs[1] - freqs[0]))
    return float(np.trapezoid(psd[mask], freqs[mask]))


def lf_hf_ratio(rr: Sequence[float]) -> HrvBands:
    rr = np.asarray(rr, dtype=float)
    if rr.size < 2 or rr.sum() < MIN_RR_SPAN:
        raise SeriesTooShort(f"RR series spans {rr.sum():.1f} s, need {MIN_RR_SPAN:g} s")
    times, kept = clean_rr(rr)
    if kept.size == 0:
        raise AllArtifacts("every RR interval was rejected")
    if kept.size < 4 or times[-1] - times[0] < MIN_RR_SPAN * 0.5:
        raise SeriesTooShort("too few clean RR intervals for spectral analysis")
    grid = np.arange(times[0], times[-1], 1.0 / RESAMPLE_HZ)
    tach = interpolate.CubicSpline(times, kept)(grid)
    tach = tach - tach.mean()
    nperseg = min(int(WELCH_SEGMENT * RESAMPLE_HZ), tach.size)
    freqs, psd = signal.welch(
        tach, fs=RESAMPLE_HZ, window="hann", nperseg=nperseg, noverlap=nperseg // 2, detrend=False
    )
    return HrvBands(_band_power(freqs, psd, LF_BAND, False), _band_power(freqs, psd, HF_BAND, True))


# -- electrodermal activity ------------------------------------------------


@dataclass(frozen=True)
class EdaSeries:
    values: np.ndarray
    rate: float
    t0: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.values.size) / self.rate


@dataclass(frozen=True)
class EdaDecomposition:
    filtered: np.ndarray
    tonic: np.ndarray
    phasic: np.ndarray
    peak_indices: np.ndarray
    rate: float
    t0: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.filtered.size) / self.rate

    @property
    def peak_amplitudes(self) -> np.ndarray:
        return self.phasic[self.peak_indices]

    @property
    def peak_times(self) -> np.ndarray:
        return self.t0 + self.peak_indices / self.rate

    @property
    def scl_mean(self) -> float:
        return float(self.tonic.mean())

    @property
    def scr_mean_amplitude(self) -> float:
        amps = self.peak_amplitudes
        return float(amps.mean()) if amps.size else math.nan


def eda_from_samples(times: Sequence[float], values: Sequence[float], rate: Optional[float] = None) -> EdaSeries:
    """Build an :class:`EdaSeries`, checking that samples are uniform."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size != v.size:
        raise LengthMismatch("EDA times and values differ in length")
    if t.size < 2:
        raise SeriesTooShort("EDA series needs at least two samples")
    steps = np.diff(t)
    if rate is None:
        rate = 1.0 / float(np.median(steps))
    if np.any(np.abs(steps - 1.0 / rate) > 0.01 / rate):
        raise NonUniformSampling(f"EDA samples are not uniformly spaced at {rate:g} Hz")
    return EdaSeries(v, float(rate), float(t[0]))


def eda_decompose(eda: EdaSeries) -> EdaDecomposition:
    x = np.asarray(eda.values, dtype=float)
    fs = eda.rate
    if fs < EDA_MIN_RATE:
        raise NonUniformSampling(f"EDA rate {fs:g} Hz is below {EDA_MIN_RATE:g} Hz")
    if x.size / fs < EDA_MIN_DURATION:
        raise SeriesTooShort(f"EDA series lasts {x.size / fs:.1f} s, need {EDA_MIN_DURATION:g} s")
    if np.any(x < 0):
        raise ValueError("skin conductance must be non-negative")

    sos = signal.butter(4, EDA_CUTOFF, btype="low", fs=fs, output="sos")
    filtered = signal.sosfiltfilt(sos, x)

    width = int(round(TONIC_MEDIAN_WINDOW * fs)) | 1
    tonic = ndimage.median_filter(filtered, size=width, mode="nearest")
    sos_tonic = signal.butter(2, TONIC_CUTOFF, btype="low", fs=fs, output="sos")
    tonic = signal.sosfiltfilt(sos_tonic, tonic)
    phasic = filtered - tonic

    peaks, _ = signal.find_peaks(phasic, height=SCR_MIN_AMPLITUDE)
    return EdaDecomposition(filtered, tonic, phasic, peaks, fs, eda.t0)


# -- blocks and correlation ------------------------------------------------


@dataclass
class BlockSummary:
    index: int
    start: float
    end: float
    samples: int
    means: dict[str, float] = field(default_factory=dict)


def block_count(duration: float, block_length: float = BLOCK_LENGTH) -> int:
    """Full blocks in ``duration``, plus a trailing block at least half full."""
    full = int(math.floor(duration / block_length + 1e-9))
    rest = duration - full * block_length
    return full + (1 if rest >= 0.5 * block_length - 1e-9 else 0)


def block_index(t: np.ndarray, block_length: float) -> np.ndarray:
    # blocks are (start, end]; t = 0 belongs to the first one
    idx = np.ceil(np.asarray(t, dtype=float) / block_length - 1e-9).astype(int) - 1
    return np.maximum(idx, 0)


def segment_blocks(
    times: Sequence[float],
    channels: Mapping[str, Sequence[float]],
    block_length: float = BLOCK_LENGTH,
    duration: Optional[float] = None,
) -> list[BlockSummary]:
    """Per-block means of each channel.

    Blocks are contiguous from t = 0. A trailing partial block is kept only if
    at least half of it is covered by ``duration`` (default: the last time).
    NaN samples are ignored in the means.
    """
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        raise ValueError("cannot segment an empty series")
    if duration is None:
        duration = float(t.max())
    n = block_count(duration, block_length)
    idx = block_index(t, block_length)
    arrays = {k: np.asarray(v, dtype=float) for k, v in channels.items()}
    out = []
    for b in range(n):
        mask = idx == b
        means = {}
        for name, arr in arrays.items():
            vals = arr[mask]
            vals = vals[~np.isnan(vals)]
            means[name] = float(vals.mean()) if vals.size else math.nan
        out.append(BlockSummary(b + 1, b * block_length, (b + 1) * block_length, int(mask.sum()), means))
    return out


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation with mid-ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise LengthMismatch(f"sequences differ in length ({x.size} vs {y.size})")
    if x.size < 3:
        raise TooFewPairs(f"need at least three pairs, got {x.size}")
    rx = stats.rankdata(x, method="average")
    ry = stats.rankdata(y, method="average")
    dx, dy = rx - rx.mean(), ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ZeroVariance("a sequence is constant; rank correlation undefined")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def rr_block_ratios(rr: Sequence[float], block_length: float = BLOCK_LENGTH) -> list[float]:
    """LF/HF of the RR intervals whose beats fall in each block."""
    rr = np.asarray(rr, dtype=float)
    beats = np.cumsum(rr)
    n = block_count(float(beats[-1]) if beats.size else 0.0, block_length)
    out = []
    for b in range(n):
        mask = (beats > b * block_length) & (beats <= (b + 1) * block_length)
        out.append(lf_hf_ratio(rr[mask]).ratio)
    return out
