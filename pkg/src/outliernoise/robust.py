"""Streaming robust statistics.

Quantile tracking filters (QTFs) follow a sign-driven first-order update,
discretized at the sample rate:

    Q <- Q + step * (sgn(y - Q) + 2q - 1),    sgn(0) = 0

so each sample moves the estimate by at most ``2 * step``. Three QTFs at
q = 1/4, 1/2, 3/4 give Tukey's fences and the trimean-style mid-range (the
differential clipping level, DCL).
"""

from __future__ import annotations

import csv
import math

import numpy as np
from numba import njit

from .signal import InvalidArgumentError, Signal

QUARTILES = np.array([0.25, 0.5, 0.75])
DEFAULT_BETA = 1.5
DEFAULT_TRIMEAN_WEIGHT = 2.0
DEFAULT_STEP_FRACTION = 0.01
DEFAULT_WARMUP = 1024


class UndefinedStatisticError(ValueError):
    """The statistic has no defined value for this input (e.g. zero variance)."""


@njit(cache=True)
def _sgn(v):
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def _qtf_run(y, est, q, step, out):
    for n in range(y.size):
        est = est + step * (_sgn(y[n] - est) + 2.0 * q - 1.0)
        out[n] = est
    return est


@njit(cache=True)
def _quartiles_run(y, est, step, out):
    """Advance three quartile trackers in place; ``out[n]`` holds the state after sample n."""
    for n in range(y.size):
        for k in range(3):
            q = 0.25 * (k + 1)
            est[k] = est[k] + step * (_sgn(y[n] - est[k]) + 2.0 * q - 1.0)
            out[n, k] = est[k]


def qtf_step(estimate: float, y: float, q: float, step: float) -> float:
    """One QTF update; returns the new estimate."""
    s = (y > estimate) - (y < estimate)
    return estimate + step * (s + 2.0 * q - 1.0)


def fences(q1: float, q3: float, beta: float = DEFAULT_BETA) -> tuple[float, float]:
    """Tukey's fences from the first and third quartiles.

    Transiently crossed trackers (``q1 > q3``) are reordered first, so the
    lower fence never exceeds the upper one.
    """
    lo, hi = (q1, q3) if q1 <= q3 else (q3, q1)
    iqr = hi - lo
    return lo - beta * iqr, hi + beta * iqr


def dcl(q1: float, q2: float, q3: float, w: float = DEFAULT_TRIMEAN_WEIGHT) -> float:
    """Weighted trimean ``(q1 + w q2 + q3) / (w + 2)``; ``w = 0`` is the midhinge."""
    if w < 0:
        raise InvalidArgumentError("trimean weight must be non-negative")
    return (q1 + w * q2 + q3) / (w + 2.0)


class QuantileTracker:
    """Single quantile tracking filter with a fixed per-sample step."""

    def __init__(self, q: float, step: float, initial: float | None = None):
        if not 0 < q < 1:
            raise InvalidArgumentError("q must lie in (0, 1)")
        if not step > 0:
            raise InvalidArgumentError("step must be positive")
        self.q = float(q)
        self.step = float(step)
        self.estimate = initial

    @classmethod
    def from_time_constant(cls, q: float, amplitude: float, time_constant: float, rate: float, initial=None):
        """Build from the continuous-time parameters: step = A * dt / T."""
        return cls(q, amplitude / (time_constant * rate), initial)

    def update(self, y: float) -> float:
        if self.estimate is None:
            self.estimate = float(y)
        self.estimate = qtf_step(self.estimate, y, self.q, self.step)
        return self.estimate

    def process(self, y) -> np.ndarray:
        y = np.ascontiguousarray(y, dtype=np.float64)
        out = np.empty_like(y)
        if y.size == 0:
            return out
        if self.estimate is None:
            self.estimate = float(y[0])
        self.estimate = float(_qtf_run(y, self.estimate, self.q, self.step, out))
        return out


def auto_step(samples, fraction: float = DEFAULT_STEP_FRACTION) -> float:
    """Default tracking step: a fraction of the interquartile range of ``samples``."""
    samples = np.asarray(samples, dtype=float)
    q1, q3 = np.percentile(samples, [25, 75])
    spread = q3 - q1
    if spread <= 0:
        spread = float(np.std(samples))
    if spread <= 0:
        spread = float(np.max(np.abs(samples))) if samples.size else 0.0
    return fraction * spread if spread > 0 else 1e-12


class FenceTracker:
    """Quartile trackers plus the derived blanking range and mid-range.

    With ``step=None`` the step is set to ``step_fraction`` times the IQR of
    the first ``warmup`` samples, after which the trackers are replayed over
    those samples from the first one. Until then :attr:`ready` is False.
    """

    def __init__(
        self,
        beta: float = DEFAULT_BETA,
        w: float = DEFAULT_TRIMEAN_WEIGHT,
        step: float | None = None,
        warmup: int = DEFAULT_WARMUP,
        step_fraction: float = DEFAULT_STEP_FRACTION,
    ):
        if beta < 0:
            raise InvalidArgumentError("beta must be non-negative")
        if w < 0:
            raise InvalidArgumentError("trimean weight must be non-negative")
        if step is not None and not step > 0:
            raise InvalidArgumentError("step must be positive")
        if warmup < 1:
            raise InvalidArgumentError("warm-up must be at least one sample")
        self.beta = float(beta)
        self.w = float(w)
        self.step = None if step is None else float(step)
        self.warmup = int(warmup)
        self.step_fraction = float(step_fraction)
        self.q = np.zeros(3)
        self.seen = 0
        self._buffer: list[np.ndarray] = []

    @property
    def started(self) -> bool:
        return self.step is not None and self.seen > 0 and not self._buffer

    @property
    def ready(self) -> bool:
        return self.started and self.seen >= self.warmup

    def update(self, y: float) -> None:
        self.process(np.array([y], dtype=float))

    def process(self, y) -> np.ndarray:
        """Feed samples; returns the (n, 3) quartile trace (NaN while still buffering)."""
        y = np.ascontiguousarray(y, dtype=np.float64)
        trace = np.full((y.size, 3), np.nan)
        if y.size == 0:
            return trace
        start = 0
        if self.step is None:
            need = self.warmup - self.seen
            take = min(need, y.size)
            self._buffer.append(y[:take].copy())
            self.seen += take
            start = take
            if self.seen < self.warmup:
                return trace
            buffered = np.concatenate(self._buffer)
            self._buffer = []
            self.step = auto_step(buffered, self.step_fraction)
            self.q[:] = buffered[0]
            replay = np.empty((buffered.size, 3))
            _quartiles_run(buffered, self.q, self.step, replay)
            trace[:take] = replay[-take:]
        elif self.seen == 0:
            self.q[:] = y[0]
        if start < y.size:
            _quartiles_run(y[start:], self.q, self.step, trace[start:])
            self.seen += y.size - start
        return trace

    @property
    def quartiles(self) -> tuple[float, float, float]:
        return float(self.q[0]), float(self.q[1]), float(self.q[2])

    def fences(self) -> tuple[float, float]:
        if not self.started:
            raise InvalidArgumentError("fence tracker has not processed any samples yet")
        return fences(self.q[0], self.q[2], self.beta)

    def dcl(self) -> float:
        if not self.started:
            raise InvalidArgumentError("fence tracker has not processed any samples yet")
        return dcl(self.q[0], self.q[1], self.q[2], self.w)


def trace_columns(trace: np.ndarray, beta: float, w: float) -> dict[str, np.ndarray]:
    """Per-sample Q1, Q2, Q3, fences and DCL from a quartile trace."""
    q1, q2, q3 = trace[:, 0], trace[:, 1], trace[:, 2]
    lo, hi = np.minimum(q1, q3), np.maximum(q1, q3)
    iqr = hi - lo
    return {
        "q1": q1,
        "q2": q2,
        "q3": q3,
        "alpha_minus": lo - beta * iqr,
        "alpha_plus": hi + beta * iqr,
        "dcl": (q1 + w * q2 + q3) / (w + 2.0),
    }


def write_trace_csv(path, columns: dict[str, np.ndarray], rate: float | None = None) -> None:
    names = list(columns)
    n = len(next(iter(columns.values())))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = (["t"] if rate else []) + names
        writer.writerow(header)
        for i in range(n):
            row = [repr(i / rate)] if rate else []
            row += [repr(float(columns[k][i])) for k in names]
            writer.writerow(row)


def peakedness_dbg(x) -> float:
    """Kurtosis relative to a Gaussian, in dB (dBG)."""
    if isinstance(x, Signal):
        x = x.samples
    x = np.asarray(x, dtype=np.float64)
    if x.size < 100:
        raise UndefinedStatisticError("peakedness needs at least 100 samples")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if not m2 > 0:
        raise UndefinedStatisticError("peakedness is undefined for a constant signal")
    m4 = np.mean(d**4)
    return 10.0 * math.log10(m4 / (3.0 * m2 * m2))


def hampel_oracle(signal, window: int, scale: float = 3.0):
    """Windowed-median outlier replacement (reference implementation, O(N * window)).

    Samples further than ``scale`` normalized MADs (1.4826 * MAD) from the
    centred windowed median are replaced by that median. Edges use reflected
    padding.
    """
    is_signal = isinstance(signal, Signal)
    x = np.asarray(signal.samples if is_signal else signal, dtype=np.float64)
    if window < 3 or window % 2 == 0:
        raise InvalidArgumentError("Hampel window must be odd and at least 3")
    if window > x.size:
        raise InvalidArgumentError("Hampel window longer than the signal")
    half = window // 2
    padded = np.pad(x, half, mode="reflect" if x.size > half else "edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, window)
    med = np.median(windows, axis=1)
    mad = 1.4826 * np.median(np.abs(windows - med[:, None]), axis=1)
    out = np.where(np.abs(x - med) > scale * mad, med, x)
    return Signal(out, signal.sample_rate) if is_signal else out
