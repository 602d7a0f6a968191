"""Fixed-grid sampling of species counts, CSV output and series statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

DEFAULT_CAPACITY = 10_000


def grid_size(t_final, interval):
    # tolerate t_final/interval landing a hair below an integer
    return int(math.floor(t_final / interval + 1e-9)) + 1


class Trajectory:
    """Samples taken on the grid ``0, dt, 2*dt, ...`` up to ``t_final``.

    Stochastic engines call :meth:`advance` with the state in force *before*
    each event, so a grid point holds the state after the last event at or
    before it. Rows are buffered and flushed to ``path`` whenever
    ``capacity`` rows are pending.
    """

    def __init__(self, labels, t_final, interval=1.0, *, integer=True, path=None,
                 capacity=DEFAULT_CAPACITY, retain=True):
        if interval <= 0:
            raise ValueError("sample interval must be positive")
        if capacity < 1:
            raise ValueError("buffer capacity must be at least 1")
        self.labels = list(labels)
        self.interval = float(interval)
        self.t_final = float(t_final)
        self.integer = integer
        self.path = path
        self.capacity = capacity
        self.retain = retain
        self.n_points = grid_size(self.t_final, self.interval)
        self.next_index = 0
        self.flushes = 0
        self._written = 0
        self._buffer = []
        self._rows = []
        self._started = False

    def grid_time(self, i):
        return i * self.interval

    @property
    def times(self):
        return np.arange(self.n_points) * self.interval

    @property
    def done(self):
        return self.next_index >= self.n_points

    def advance(self, tau, values):
        """Record ``values`` at every pending grid point strictly before ``tau``."""
        i = self.next_index
        n = self.n_points
        dt = self.interval
        if i >= n or i * dt >= tau:
            return
        row = tuple(values)
        while i < n and i * dt < tau:
            self._push(row)
            i += 1
        self.next_index = i

    def record_at(self, i, values):
        """Record ``values`` at grid point ``i`` (deterministic engines)."""
        if i != self.next_index:
            raise ValueError(f"grid point {i} out of order, expected {self.next_index}")
        self._push(tuple(values))
        self.next_index = i + 1

    def finish(self, values, t_end=None):
        """Fill the remaining grid points up to ``t_end`` with ``values`` and flush.

        A ``t_end`` before ``t_final`` truncates the grid there.
        """
        if t_end is not None and t_end < self.t_final:
            self.n_points = min(self.n_points, grid_size(t_end, self.interval))
        row = tuple(values)
        while self.next_index < self.n_points:
            self._push(row)
            self.next_index += 1
        self.flush()

    def _push(self, row):
        self._buffer.append(row)
        if self.retain:
            self._rows.append(row)
        if len(self._buffer) >= self.capacity:
            self.flush()

    def flush(self):
        if self.path is None:
            self._buffer.clear()
            return
        mode = "a" if self._started else "w"
        with open(self.path, mode, newline="") as fh:
            if not self._started:
                fh.write("time," + ",".join(self.labels) + "\n")
                self._started = True
            start = self._written
            for offset, row in enumerate(self._buffer):
                fh.write(self._format_row(self.grid_time(start + offset), row))
        self._written += len(self._buffer)
        if self._buffer:
            self.flushes += 1
        self._buffer.clear()

    def _format_row(self, t, row):
        if self.integer:
            vals = ",".join(str(int(v)) for v in row)
        else:
            vals = ",".join(f"{float(v):.6g}" for v in row)
        return f"{t:.6f},{vals}\n"

    def values(self):
        """All retained samples as an array of shape (points, species)."""
        if not self.retain:
            raise RuntimeError("trajectory was created with retain=False")
        dtype = np.int64 if self.integer else float
        return np.array(self._rows, dtype=dtype).reshape(len(self._rows), len(self.labels))

    def series(self, label):
        return self.values()[:, self.labels.index(label)]


@dataclass
class RunStats:
    engine: str
    seed: Optional[int] = None
    applied_rule_count: int = 0
    nondet_decision_count: int = 0
    termination: str = "completed"
    t_end: float = 0.0
    wall_seconds: float = 0.0
    extinction_times: dict = field(default_factory=dict)
    steady_state_time: Optional[float] = None
    clamp_warnings: int = 0

    @property
    def nondet_fraction(self):
        return self.nondet_decision_count / max(self.applied_rule_count, 1)

    def lines(self, include_timing=False):
        out = [
            f"engine={self.engine}",
            f"seed={'' if self.seed is None else self.seed}",
            f"applied_rule_count={self.applied_rule_count}",
            f"nondet_decision_count={self.nondet_decision_count}",
            f"nondet_fraction={self.nondet_fraction:.9f}",
            f"termination={self.termination}",
            f"t_end={self.t_end:.6f}",
            f"steady_state={'yes' if self.steady_state_time is not None else 'no'}",
            f"steady_state_time={_fmt_opt(self.steady_state_time)}",
            f"clamp_warnings={self.clamp_warnings}",
        ]
        for label, t in sorted(self.extinction_times.items()):
            out.append(f"extinction_time.{label}={_fmt_opt(t)}")
        if include_timing:
            out.append(f"wall_seconds={self.wall_seconds:.3f}")
        return out

    def write(self, path, include_timing=False):
        with open(path, "w") as fh:
            fh.write("\n".join(self.lines(include_timing)) + "\n")


def _fmt_opt(t):
    return "none" if t is None else f"{t:.6f}"


def extinction_time(times, series):
    """First grid time at which ``series`` is zero, or ``None``."""
    hits = np.flatnonzero(np.asarray(series) == 0)
    return float(times[hits[0]]) if hits.size else None


def count_peaks(series, min_prominence):
    """Number of local maxima standing at least ``min_prominence`` above
    the surrounding minima. Flat-topped maxima count once."""
    if not min_prominence > 0:
        raise ValueError("min_prominence must be positive")
    x = np.asarray(series, dtype=float)
    if x.size < 3:
        return 0
    peaks, _ = find_peaks(x, prominence=min_prominence)
    return int(peaks.size)


def first_peak_height(series, rel_prominence=0.1):
    """Height of the earliest peak with prominence >= rel_prominence*max."""
    x = np.asarray(series, dtype=float)
    top = x.max() if x.size else 0.0
    if top <= 0:
        return None
    peaks, _ = find_peaks(x, prominence=rel_prominence * top)
    return float(x[peaks[0]]) if peaks.size else None


def steady_state_after(series, window, rel_band, times=None):
    """Earliest grid time from which every trailing window is flat.

    A window of ``window`` samples is flat when ``max - min`` is at most
    ``rel_band * |mean|``. Returns ``None`` when the tail is not flat.
    """
    if window < 2:
        raise ValueError("window must span at least two samples")
    if not rel_band > 0:
        raise ValueError("rel_band must be positive")
    x = np.asarray(series, dtype=float)
    if times is None:
        times = np.arange(x.size, dtype=float)
    if x.size < window:
        return None
    wins = np.lib.stride_tricks.sliding_window_view(x, window)
    flat = (wins.max(axis=1) - wins.min(axis=1)) <= rel_band * np.abs(wins.mean(axis=1))
    if not flat[-1]:
        return None
    bad = np.flatnonzero(~flat)
    start = 0 if bad.size == 0 else bad[-1] + 1
    return float(times[start])
