"""Sliding-window load history and a simple next-window max forecaster.

The history is a ring of per-second request counts (ten minutes by
default). The baseline predictor is deliberately simple: headroom times
the larger of the recent peak and the trend-projected rate one horizon
ahead. Anything implementing the Forecaster protocol can replace it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Protocol

from .errors import NoDataError, OrderingError

DEFAULT_CAPACITY = 600
DEFAULT_HORIZON_S = 60
DEFAULT_HEADROOM = 1.1
DEFAULT_WINDOW_S = 120


@dataclass
class LoadHistory:
    """Ring buffer of (timestamp_s, count) one-second samples."""

    capacity: int = DEFAULT_CAPACITY
    _samples: deque = field(default_factory=deque, repr=False)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def last_timestamp(self) -> int | None:
        return self._samples[-1][0] if self._samples else None

    def record(self, timestamp_s: int, count: float) -> None:
        """Append one second of arrivals; gaps are filled with zeros."""
        if count < 0:
            raise ValueError("count must be >= 0")
        last = self.last_timestamp
        if last is not None:
            if timestamp_s <= last:
                raise OrderingError(
                    f"timestamp {timestamp_s} not after last recorded {last}"
                )
            for ts in range(last + 1, timestamp_s):
                self._samples.append((ts, 0.0))
                if len(self._samples) > self.capacity:
                    self._samples.popleft()
        self._samples.append((timestamp_s, float(count)))
        while len(self._samples) > self.capacity:
            self._samples.popleft()

    def window(self, size: int) -> list[tuple[int, float]]:
        """The most recent `size` samples, oldest first."""
        if size >= len(self._samples):
            return list(self._samples)
        return list(self._samples)[-size:]


def predict_next_max(
    history: LoadHistory,
    horizon_s: int = DEFAULT_HORIZON_S,
    headroom: float = DEFAULT_HEADROOM,
    window_s: int = DEFAULT_WINDOW_S,
) -> float:
    """Predict the peak per-second rate over the next horizon.

    Baseline heuristic: headroom times max(recent-window peak, last sample
    plus horizon times the recent linear trend slope, 0), computed over the
    last min(window_s, len) samples and clamped to at least 1 rps.
    """
    if len(history) == 0:
        raise NoDataError("cannot predict from an empty history")
    win = history.window(min(window_s, len(history)))
    counts = [c for _, c in win]
    peak = max(counts)
    slope = 0.0
    if len(win) >= 2:
        n = len(win)
        mean_t = sum(t for t, _ in win) / n
        mean_c = sum(counts) / n
        stt = sum((t - mean_t) ** 2 for t, _ in win)
        stc = sum((t - mean_t) * (c - mean_c) for t, c in win)
        if stt > 0:
            slope = stc / stt
    projected = counts[-1] + horizon_s * slope
    return max(1.0, headroom * max(peak, projected, 0.0))


class Forecaster(Protocol):
    def predict_next_max(self, history: LoadHistory, horizon_s: int) -> float: ...


@dataclass
class TrendForecaster:
    """Default Forecaster: the baseline heuristic with fixed settings."""

    headroom: float = DEFAULT_HEADROOM
    window_s: int = DEFAULT_WINDOW_S

    def predict_next_max(self, history: LoadHistory, horizon_s: int = DEFAULT_HORIZON_S) -> float:
        return predict_next_max(history, horizon_s, self.headroom, self.window_s)
