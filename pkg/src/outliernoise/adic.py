"""Differential clippers: intermittently nonlinear outlier removers.

:class:`BasicAdic` tracks Tukey's fences on its input and replaces samples
outside them with the trimean mid-range.

:class:`FeedbackAdic` keeps a clipping level ``chi`` that follows the input
through a gated first-order lowpass. Per sample, in this order:

1. ``u = x - chi``
2. if ``alpha_minus <= u <= alpha_plus``: output ``x`` unchanged and
   ``chi += (dt / tau) * u``
3. otherwise output ``chi`` and hold it
4. the fence tracker observes ``u``

The fences are tracked on the difference signal ``u``, never on ``x``.
While the tracker warms up nothing is clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .robust import (
    DEFAULT_BETA,
    DEFAULT_STEP_FRACTION,
    DEFAULT_TRIMEAN_WEIGHT,
    DEFAULT_WARMUP,
    FenceTracker,
    write_trace_csv,
)
from .signal import InvalidArgumentError, Signal


def blank(x, alpha_minus: float, alpha_plus: float):
    """Blanking function: ``x`` inside ``[alpha_minus, alpha_plus]`` (inclusive), else 0."""
    if alpha_minus > alpha_plus:
        raise InvalidArgumentError("blanking range needs alpha_minus <= alpha_plus")
    if np.ndim(x) == 0:
        return x if alpha_minus <= x <= alpha_plus else 0.0 * x
    x = np.asarray(x, dtype=float)
    return np.where((x >= alpha_minus) & (x <= alpha_plus), x, 0.0)


@njit(cache=True)
def _feedback_run(x, chi, a, est, step, beta, tracking, lo_ext, hi_ext, freeze, y, u_out, lo_out, hi_out, chi_out, clip):
    for n in range(x.size):
        u = x[n] - chi
        if tracking:
            q1 = est[0]
            q3 = est[2]
            if q1 > q3:
                q1, q3 = q3, q1
            iqr = q3 - q1
            lo = q1 - beta * iqr
            hi = q3 + beta * iqr
        else:
            lo = lo_ext
            hi = hi_ext
        chi_out[n] = chi
        if lo <= u <= hi:
            y[n] = x[n]
            chi = chi + a * u
            clip[n] = False
        else:
            y[n] = chi
            clip[n] = True
        if tracking and not (freeze and clip[n]):
            for k in range(3):
                d = u - est[k]
                s = 1.0 if d > 0.0 else (-1.0 if d < 0.0 else 0.0)
                est[k] = est[k] + step * (s + 0.5 * k - 0.5)
        u_out[n] = u
        lo_out[n] = lo
        hi_out[n] = hi
    return chi


@njit(cache=True)
def _basic_run(x, est, step, beta, w, y, lo_out, hi_out, dcl_out, clip):
    for n in range(x.size):
        q1 = est[0]
        q3 = est[2]
        if q1 > q3:
            q1, q3 = q3, q1
        iqr = q3 - q1
        lo = q1 - beta * iqr
        hi = q3 + beta * iqr
        mid = (est[0] + w * est[1] + est[2]) / (w + 2.0)
        if lo <= x[n] <= hi:
            y[n] = x[n]
            clip[n] = False
        else:
            y[n] = mid
            clip[n] = True
        for k in range(3):
            d = x[n] - est[k]
            s = 1.0 if d > 0.0 else (-1.0 if d < 0.0 else 0.0)
            est[k] = est[k] + step * (s + 0.5 * k - 0.5)
        lo_out[n] = lo
        hi_out[n] = hi
        dcl_out[n] = mid


@dataclass(frozen=True)
class AdicParams:
    """Parameters of a feedback ADiC.

    ``fences`` switches the fence source: ``None`` tracks them on the
    difference signal, a ``(lo, hi)`` pair fixes them (no warm-up).
    """

    tau: float
    beta: float = DEFAULT_BETA
    step: float | None = None
    step_fraction: float = DEFAULT_STEP_FRACTION
    warmup: int = DEFAULT_WARMUP
    fences: tuple[float, float] | None = None
    track_during_clip: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidArgumentError("tau must be positive")
        if self.fences is not None:
            lo, hi = self.fences
            if lo > hi:
                raise InvalidArgumentError(f"external fences must satisfy lo <= hi, got {self.fences}")


def adic_fence_source(mode: str, fences: tuple[float, float] | None = None, **params) -> AdicParams:
    """Build ADiC parameters for ``mode`` in {"self-tracked", "external"}."""
    if mode == "self-tracked":
        return AdicParams(fences=None, **params)
    if mode == "external":
        if fences is None:
            raise InvalidArgumentError("external fence source needs a (lo, hi) pair")
        return AdicParams(fences=(float(fences[0]), float(fences[1])), **params)
    raise InvalidArgumentError(f"unknown fence source {mode!r}")


@dataclass
class AdicTrace:
    x: np.ndarray
    u: np.ndarray
    alpha_minus: np.ndarray
    alpha_plus: np.ndarray
    chi: np.ndarray
    clipped: np.ndarray

    def to_csv(self, path, rate: float | None = None) -> None:
        write_trace_csv(
            path,
            {
                "x": self.x,
                "u": self.u,
                "alpha_minus": self.alpha_minus,
                "alpha_plus": self.alpha_plus,
                "chi": self.chi,
                "clipped": self.clipped.astype(int),
            },
            rate,
        )


class FeedbackAdic:
    """Streaming feedback ADiC; one instance per stream."""

    def __init__(self, params: AdicParams, rate: float):
        if not rate > 0:
            raise InvalidArgumentError("rate must be positive")
        if params.tau < 2.0 / rate:
            raise InvalidArgumentError("tau must be at least two sample intervals")
        self.params = params
        self.rate = float(rate)
        self.a = 1.0 / (params.tau * rate)
        self.chi = 0.0
        self.external = params.fences is not None
        self.tracker = None
        if not self.external:
            self.tracker = FenceTracker(
                beta=params.beta,
                step=params.step,
                warmup=params.warmup,
                step_fraction=params.step_fraction,
            )

    @property
    def warm(self) -> bool:
        return self.external or self.tracker.ready

    def step(self, x: float) -> float:
        return float(self.process(np.array([x], dtype=float))[0])

    def process(self, x, trace: bool = False):
        x = np.ascontiguousarray(x, dtype=np.float64)
        n = x.size
        y = np.empty(n)
        u = np.empty(n)
        lo = np.empty(n)
        hi = np.empty(n)
        chi = np.empty(n)
        clip = np.zeros(n, dtype=np.bool_)
        p = self.params
        start = 0
        if self.external:
            self.chi = _feedback_run(x, self.chi, self.a, np.zeros(3), 0.0, 0.0, False,
                                     p.fences[0], p.fences[1], False, y, u, lo, hi, chi, clip)
        else:
            if not self.tracker.ready:
                # passthrough while the fences are learned
                start = min(n, self.tracker.warmup - self.tracker.seen)
                sl = slice(0, start)
                self.chi = _feedback_run(x[sl], self.chi, self.a, np.zeros(3), 0.0, 0.0, False,
                                         -np.inf, np.inf, False, y[sl], u[sl], lo[sl], hi[sl], chi[sl], clip[sl])
                self.tracker.process(u[sl])
            if start < n:
                sl = slice(start, n)
                t = self.tracker
                self.chi = _feedback_run(x[sl], self.chi, self.a, t.q, t.step, t.beta, True,
                                         0.0, 0.0, not p.track_during_clip, y[sl], u[sl], lo[sl], hi[sl], chi[sl], clip[sl])
                t.seen += n - start
        if trace:
            return y, AdicTrace(x.copy(), u, lo, hi, chi, clip)
        return y

    def process_signal(self, signal: Signal) -> Signal:
        if not math.isclose(signal.sample_rate, self.rate, rel_tol=1e-12):
            raise InvalidArgumentError("sample rate mismatch")
        return Signal(self.process(signal.samples), signal.sample_rate)


def feedback_adic(signal: Signal, params: AdicParams, trace: bool = False):
    """One-shot feedback ADiC over a whole signal."""
    adic = FeedbackAdic(params, signal.sample_rate)
    if trace:
        y, tr = adic.process(signal.samples, trace=True)
        return Signal(y, signal.sample_rate), tr
    return Signal(adic.process(signal.samples), signal.sample_rate)


class BasicAdic:
    """Fence-and-replace clipper: outliers of the input become the trimean DCL."""

    def __init__(
        self,
        beta: float = DEFAULT_BETA,
        w: float = DEFAULT_TRIMEAN_WEIGHT,
        step: float | None = None,
        warmup: int = DEFAULT_WARMUP,
        step_fraction: float = DEFAULT_STEP_FRACTION,
    ):
        self.tracker = FenceTracker(beta=beta, w=w, step=step, warmup=warmup, step_fraction=step_fraction)

    def step(self, x: float) -> float:
        return float(self.process(np.array([x], dtype=float))[0])

    def process(self, x, trace: bool = False):
        x = np.ascontiguousarray(x, dtype=np.float64)
        n = x.size
        y = x.copy()
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        mid = np.full(n, np.nan)
        clip = np.zeros(n, dtype=np.bool_)
        t = self.tracker
        start = 0
        if not t.ready:
            start = min(n, t.warmup - t.seen)
            t.process(x[:start])
        if start < n:
            sl = slice(start, n)
            _basic_run(x[sl], t.q, t.step, t.beta, t.w, y[sl], lo[sl], hi[sl], mid[sl], clip[sl])
            t.seen += n - start
        if trace:
            return y, {"x": x.copy(), "alpha_minus": lo, "alpha_plus": hi, "dcl": mid, "clipped": clip}
        return y


def basic_adic(signal: Signal, trace: bool = False, **params):
    adic = BasicAdic(**params)
    if trace:
        y, tr = adic.process(signal.samples, trace=True)
        return Signal(y, signal.sample_rate), tr
    return Signal(adic.process(signal.samples), signal.sample_rate)
