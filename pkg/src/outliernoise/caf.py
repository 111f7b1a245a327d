"""Complementary ADiC filters (CAF) and their chain variants.

A CAF splits its input with a linear-phase band filter and the band filter's
spectral complement. The complement output carries the excess-band noise,
where wideband outliers stay visible; a feedback ADiC clips them and the
result is added back to the band output. With the ADiC bypassed the CAF is a
pure delay of ``D`` samples, the band filter's group delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy import signal as sps

from .adic import AdicParams, FeedbackAdic
from .filters import (
    ComplementaryPair,
    FirDesign,
    StreamingFilter,
    _check_rate,
    apply,
    apply_fast,
    design_fir_lowpass,
    make_complement,
)
from .signal import InvalidArgumentError, Signal

# frozen defaults used by every capacity sweep, relative to the signal bandwidth B0
DEFAULT_BAND_EDGE = 1.2  # band filter -6 dB point, x B0
DEFAULT_BAND_TRANSITION = 0.5  # x B0
DEFAULT_CORNER = 4.0  # ADiC lowpass corner 1/(2 pi tau), x B0
DEFAULT_CAF_BETA = 5.0
DEFAULT_LEAK = 0.01  # derivative chain leaky-integrator corner, x B0


@dataclass(frozen=True)
class CafConfig:
    pair: ComplementaryPair
    adic: AdicParams
    bypass: bool = False

    @property
    def delay(self) -> int:
        return self.pair.delay

    @property
    def rate(self) -> float:
        return self.pair.band.rate

    def bypassed(self) -> "CafConfig":
        return replace(self, bypass=True)


def default_caf_config(
    b0: float,
    rate: float,
    band_edge: float = DEFAULT_BAND_EDGE,
    transition: float = DEFAULT_BAND_TRANSITION,
    corner: float = DEFAULT_CORNER,
    beta: float = DEFAULT_CAF_BETA,
    warmup: int | None = None,
    **adic_overrides,
) -> CafConfig:
    """The frozen default CAF for a baseband signal of bandwidth ``b0``."""
    band = design_fir_lowpass(band_edge * b0, rate, transition * b0)
    pair = make_complement(band)
    tau = 1.0 / (2 * math.pi * corner * b0)
    if warmup is None:
        warmup = max(4 * pair.delay, 2048)
    adic = AdicParams(tau=tau, beta=beta, warmup=warmup, **adic_overrides)
    return CafConfig(pair, adic)


def caf_config_from_band(band: FirDesign, tau: float, **adic_params) -> CafConfig:
    return CafConfig(make_complement(band), AdicParams(tau=tau, **adic_params))


@dataclass
class CafTaps:
    """Per-stage tap points of one CAF run."""

    band: np.ndarray
    excess: np.ndarray
    adic: np.ndarray
    output: np.ndarray
    clipped: np.ndarray

    def as_columns(self) -> dict[str, np.ndarray]:
        return {
            "band": self.band,
            "excess": self.excess,
            "adic": self.adic,
            "output": self.output,
            "clipped": self.clipped.astype(int),
        }


class Caf:
    """Streaming CAF; chunked processing equals one-shot processing."""

    def __init__(self, config: CafConfig):
        self.config = config
        self.band = StreamingFilter(config.pair.band)
        self.history = np.zeros(config.delay)
        self.adic = None if config.bypass else FeedbackAdic(config.adic, config.rate)

    def _delayed(self, x: np.ndarray) -> np.ndarray:
        d = self.history.size
        if d == 0:
            return x.copy()
        joined = np.concatenate([self.history, x])
        self.history = joined[joined.size - d:]
        return joined[: x.size]

    def process(self, x, taps: bool = False):
        x = np.ascontiguousarray(x, dtype=np.float64)
        b = self.band.process(x)
        return self._combine(b, self._delayed(x), taps)

    def _combine(self, b, xd, taps):
        c = xd - b
        if self.adic is None:
            a = c
            clip = np.zeros(c.size, dtype=bool)
        else:
            a, tr = self.adic.process(c, trace=True)
            clip = tr.clipped
        y = b + a
        if taps:
            return y, CafTaps(b, c, a, y, clip)
        return y

    def process_signal(self, signal: Signal) -> Signal:
        _check_rate(self.config.rate, signal.sample_rate)
        return Signal(self.process(signal.samples), signal.sample_rate)


def caf_process(config: CafConfig, x: Signal, taps: bool = False):
    """One-shot CAF: ``band(x) + ADiC(complement(x))``, delayed by ``config.delay``."""
    _check_rate(config.rate, x.sample_rate)
    caf = Caf(config)
    b = apply_fast(config.pair.band, x).samples
    xd = x.delayed(config.delay).samples
    out = caf._combine(b, xd, taps)
    if taps:
        return Signal(out[0], x.sample_rate), out[1]
    return Signal(out, x.sample_rate)


def nonlinear_stage(stage, x: Signal) -> Signal:
    """Run either a CAF (``CafConfig``) or a bare feedback ADiC (``AdicParams``)."""
    if isinstance(stage, CafConfig):
        return caf_process(stage, x)
    if isinstance(stage, AdicParams):
        return FeedbackAdic(stage, x.sample_rate).process_signal(x)
    if stage is None:
        return x
    raise InvalidArgumentError(f"unsupported nonlinear stage {type(stage).__name__}")


def stage_delay(stage) -> int:
    return stage.delay if isinstance(stage, CafConfig) else 0


# ---------------------------------------------------------------------------
# chain variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainVariant:
    variant: Literal["plain-caf", "derivative-caf-integrate", "bandstop-then-caf"]
    leak: float = 1.0
    bandstop: object = None

    def __post_init__(self):
        if not 0 < self.leak <= 1:
            raise InvalidArgumentError("integrator leak coefficient must lie in (0, 1]")
        if self.variant not in ("plain-caf", "derivative-caf-integrate", "bandstop-then-caf"):
            raise InvalidArgumentError(f"unknown chain variant {self.variant!r}")
        if self.variant == "bandstop-then-caf" and self.bandstop is None:
            raise InvalidArgumentError("bandstop-then-caf needs a bandstop design")


def leak_coefficient(f_leak: float, rate: float) -> float:
    """Pole of the leaky integrator with corner ``f_leak``: ``1 - 2 pi f_leak dt``."""
    rho = 1.0 - 2 * math.pi * f_leak / rate
    if not 0 < rho <= 1:
        raise InvalidArgumentError("leak frequency too high for the sample rate")
    return rho


def derivative_gain(freq: float, rate: float, rho: float) -> complex:
    """Response of first-difference followed by leaky integration at ``freq``."""
    z1 = np.exp(-2j * np.pi * freq / rate)
    return complex((1 - z1) / (1 - rho * z1))


def derivative_chain_process(stage, x: Signal, rho: float, reference_freq: float, bandpass=None) -> Signal:
    """``bandpass(leaky_integrate(stage(first_difference(x))))`` with unit gain at ``reference_freq``.

    ``stage`` is a :class:`CafConfig`, an :class:`AdicParams` or ``None``
    (linear). ``bandpass`` is a design or a sequence of designs applied last.
    """
    if not 0 < rho <= 1:
        raise InvalidArgumentError("leak coefficient must lie in (0, 1]")
    # the input is taken as constant before t = 0, so no start-up step is differentiated
    d = np.diff(x.samples, prepend=x.samples[:1])
    y = nonlinear_stage(stage, Signal(d, x.sample_rate)).samples
    gain = abs(derivative_gain(reference_freq, x.sample_rate, rho))
    y = sps.lfilter([1.0 / gain], [1.0, -rho], y)
    out = Signal(y, x.sample_rate)
    return _apply_all(bandpass, out)


def bandstop_prefilter_process(stage, bandstop, x: Signal) -> Signal:
    """``stage(bandstop(x))``: suppress a strong adjacent channel before the CAF."""
    return nonlinear_stage(stage, _apply_all(bandstop, x))


def shared_band_process(params: AdicParams, x: Signal) -> Signal:
    """Feedback ADiC straight on the signal+noise mixture (no band split)."""
    return FeedbackAdic(params, x.sample_rate).process_signal(x)


def _apply_all(designs, x: Signal) -> Signal:
    if designs is None:
        return x
    if not isinstance(designs, (list, tuple)):
        designs = [designs]
    for d in designs:
        x = apply_fast(d, x) if isinstance(d, FirDesign) else apply(d, x)
    return x
