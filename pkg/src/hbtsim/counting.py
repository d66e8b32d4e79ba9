"""Photon-counting layer: event sampling, coincidence logic, histograms.

Detection is a doubly stochastic Poisson process: given an intensity record
I(t), clicks are drawn from the inhomogeneous rate lambda(t) proportional to
I(t), calibrated so the time-averaged singles rate matches the detector's
configured value.  Sampling uses thinning against the piecewise-constant
record, which is exact for that representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import derive_rng
from .config import CoincidenceConfig, DetectorModel

TIMESTAMP_DIGITS = 12  # significant digits in the text event format


@dataclass
class EventStream:
    """Time-ordered detection timestamps for one detector."""

    timestamps: np.ndarray
    duration: float
    detector_id: int = 0

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        if self.duration <= 0 or not math.isfinite(self.duration):
            raise ValueError("duration must be positive and finite")
        t = self.timestamps
        if t.size:
            if np.any(np.diff(t) <= 0):
                raise ValueError("timestamps must be strictly increasing")
            if t[0] < 0 or t[-1] > self.duration:
                raise ValueError("timestamps must lie within [0, duration]")

    def __len__(self) -> int:
        return self.timestamps.size


@dataclass
class TimeDifferenceHistogram:
    """Counts of photon-pair time differences t1 - t2 in uniform channels."""

    centers: np.ndarray
    counts: np.ndarray
    channel_width: float
    half_range: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def sample_events(
    intensity,
    detector: DetectorModel,
    duration: float,
    seed: int,
    *,
    coherence_time: float = math.inf,
    mean_intensity: float | None = None,
    detector_id: int = 0,
) -> EventStream:
    """Draw detection events from a piecewise-constant intensity record.

    The record covers [0, duration) in len(intensity) equal steps; the step
    must not exceed coherence_time / 50 (rate-approximation bias bound).  The
    rate is lambda(t) = (R - dark) * I(t) / mean_intensity + dark with R the
    calibrated singles rate; mean_intensity defaults to the record's own mean
    but should be the process mean when sampling chunks of a longer run, so
    the calibration is global and leaves bunching statistics untouched.
    """
    record = np.asarray(intensity, dtype=float)
    if record.ndim != 1 or record.size == 0:
        raise ValueError("intensity record must be a non-empty 1-D array")
    if np.any(record < 0) or not np.all(np.isfinite(record)):
        raise ValueError("intensity record must be finite and nonnegative")
    if duration <= 0:
        raise ValueError("duration must be positive")
    step = duration / record.size
    if math.isfinite(coherence_time) and step > coherence_time / 50.0 * (1 + 1e-9):
        raise ValueError(
            f"intensity step {step:g} s too coarse; need <= coherence_time/50"
        )
    denom = float(record.mean()) if mean_intensity is None else float(mean_intensity)
    scale = 0.0 if denom == 0.0 else (detector.mean_singles_rate - detector.dark_rate) / denom
    rate = scale * record + detector.dark_rate
    rate_max = float(rate.max()) if rate.size else 0.0

    rng = derive_rng(seed)
    if rate_max <= 0.0:
        return EventStream(np.empty(0), duration, detector_id)
    n_candidates = rng.poisson(rate_max * duration)
    times = np.sort(rng.random(n_candidates) * duration)
    bins = np.minimum((times / step).astype(np.int64), record.size - 1)
    keep = rng.random(n_candidates) < rate[bins] / rate_max
    return EventStream(times[keep], duration, detector_id)


def _pair_differences(t1: np.ndarray, t2: np.ndarray, half_range: float):
    """All differences t1 - t2 with |t1 - t2| <= half_range (vectorized sweep)."""
    left = np.searchsorted(t2, t1 - half_range, side="left")
    right = np.searchsorted(t2, t1 + half_range, side="right")
    lengths = right - left
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0)
    row = np.repeat(np.arange(t1.size), lengths)
    starts = np.concatenate(([0], np.cumsum(lengths[:-1])))
    col = np.arange(total) - np.repeat(starts, lengths) + np.repeat(left, lengths)
    return t1[row] - t2[col]


def time_difference_histogram(
    s1: EventStream, s2: EventStream, cfg: CoincidenceConfig
) -> TimeDifferenceHistogram:
    """Histogram of t1 - t2 over all pairs within the configured range.

    Channels have the configured width; the channel count is forced odd so
    one channel is centered on zero delay.
    """
    if s1.duration != s2.duration:
        raise ValueError("event streams must share a common duration")
    n_channels = 2 * int(math.floor(cfg.histogram_range / cfg.channel_width)) + 1
    half = 0.5 * n_channels * cfg.channel_width
    counts = np.zeros(n_channels, dtype=np.int64)
    # chunk the sweep to bound the transient pair arrays
    chunk = 200_000
    t1, t2 = s1.timestamps, s2.timestamps
    for i in range(0, t1.size, chunk):
        d = _pair_differences(t1[i : i + chunk], t2, half)
        if d.size:
            idx = np.floor((d + half) / cfg.channel_width).astype(np.int64)
            inside = (idx >= 0) & (idx < n_channels)
            counts += np.bincount(idx[inside], minlength=n_channels)
    centers = (np.arange(n_channels) + 0.5) * cfg.channel_width - half
    return TimeDifferenceHistogram(
        centers=centers,
        counts=counts,
        channel_width=cfg.channel_width,
        half_range=half,
    )


def coincidences_in_window(s1: EventStream, s2: EventStream, window: float) -> int:
    """Number of pairs with |t1 - t2| <= window / 2, each pair counted once."""
    if window <= 0:
        raise ValueError("window must be positive")
    half = window / 2.0
    t1, t2 = s1.timestamps, s2.timestamps
    left = np.searchsorted(t2, t1 - half, side="left")
    right = np.searchsorted(t2, t1 + half, side="right")
    return int((right - left).sum())


def g2_from_counts(
    coincidences: int, singles1: int, singles2: int, duration: float, window: float
) -> float:
    """Windowed coincidence rate normalized by the accidental rate:

        g2 = (Nc / T) / ((N1 / T) (N2 / T) T_w)

    1 for independent streams; for thermal light with a window comparable to
    the coherence time the excess is diluted by the window average of g1^2.
    """
    if singles1 <= 0 or singles2 <= 0:
        raise ValueError("singles counts must be positive")
    if duration <= 0:
        raise ValueError("duration must be positive")
    if window <= 0:
        raise ValueError("window must be positive")
    return coincidences * duration / (singles1 * singles2 * window)


def write_events(stream: EventStream, path) -> None:
    """Columnar text export: header with detector id and duration, then one
    timestamp (seconds, 12 significant digits) per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# detector_id={stream.detector_id} "
            f"duration_s={stream.duration:.{TIMESTAMP_DIGITS}g}\n"
        )
        for t in stream.timestamps:
            fh.write(f"{t:.{TIMESTAMP_DIGITS}g}\n")


def read_events(path) -> EventStream:
    """Inverse of write_events."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing event stream header")
        fields = dict(item.split("=") for item in header[1:].split())
        times = [float(line) for line in fh if line.strip()]
    return EventStream(
        np.asarray(times),
        duration=float(fields["duration_s"]),
        detector_id=int(fields["detector_id"]),
    )


def write_histogram(hist: TimeDifferenceHistogram, path, expected=None) -> None:
    """CSV export: channel_center_s, count[, expected]."""
    with open(path, "w", encoding="utf-8") as fh:
        if expected is None:
            fh.write("channel_center_s,count\n")
            for c, n in zip(hist.centers, hist.counts):
                fh.write(f"{c:.{TIMESTAMP_DIGITS}g},{int(n)}\n")
        else:
            fh.write("channel_center_s,count,expected\n")
            for c, n, e in zip(hist.centers, hist.counts, expected):
                fh.write(f"{c:.{TIMESTAMP_DIGITS}g},{int(n)},{e:.{TIMESTAMP_DIGITS}g}\n")
