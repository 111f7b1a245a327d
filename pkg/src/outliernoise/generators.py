"""Deterministic signal and noise generators.

Every generator is a pure function of its parameters and ``seed``; the
random streams come from numpy's PCG64 bit generator.

Impulses follow a discrete Dirac convention: an impulse of area ``a`` is a
single sample of value ``a / dt``, so a filter's response to it has the same
amplitude regardless of the sample rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import signal as sps

from .signal import InvalidArgumentError, Signal

DEFAULT_RRC_ROLLOFF = 0.25
DEFAULT_RRC_SPAN = 32


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for sub-streams (e.g. one per sweep grid point)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _num_samples(duration: float, rate: float) -> int:
    if not rate > 0:
        raise InvalidArgumentError(f"rate must be positive, got {rate}")
    if not duration > 0:
        raise InvalidArgumentError(f"duration must be positive, got {duration}")
    n = int(round(duration * rate))
    if n < 1:
        raise InvalidArgumentError("duration shorter than one sample")
    return n


@dataclass(frozen=True)
class NoiseSpec:
    """Declarative description of one additive noise component.

    ``power`` is the mean-square amplitude of the thermal noise, the in-burst
    mean-square for bursts, and the per-impulse amplitude variance (area
    units squared) for Poisson impulses.
    """

    kind: Literal["thermal-gaussian", "poisson-impulses", "periodic-gaussian-bursts"]
    power: float = 1.0
    rate: float | None = None
    burst_period: float | None = None
    duty_cycle: float | None = None

    def __post_init__(self):
        if self.power < 0:
            raise InvalidArgumentError("noise power must be non-negative")
        if self.kind == "poisson-impulses":
            if self.rate is None or not self.rate > 0:
                raise InvalidArgumentError("poisson impulses need a positive rate")
        elif self.kind == "periodic-gaussian-bursts":
            if self.burst_period is None or not self.burst_period > 0:
                raise InvalidArgumentError("bursts need a positive burst_period")
            if self.duty_cycle is None or not 0 < self.duty_cycle <= 1:
                raise InvalidArgumentError("duty cycle must lie in (0, 1]")
        elif self.kind != "thermal-gaussian":
            raise InvalidArgumentError(f"unknown noise kind {self.kind!r}")

    def generate(self, duration: float, rate: float, seed: int) -> Signal:
        if self.kind == "thermal-gaussian":
            return generate_thermal(duration, self.power, rate, seed)
        if self.kind == "poisson-impulses":
            return generate_poisson_impulses(duration, self.rate, math.sqrt(self.power), rate, seed)
        return generate_bursts(duration, self.burst_period, self.duty_cycle, self.power, rate, seed)


def generate_thermal(duration: float, power: float, rate: float, seed: int) -> Signal:
    """White Gaussian noise with variance ``power``."""
    n = _num_samples(duration, rate)
    if power < 0:
        raise InvalidArgumentError("power must be non-negative")
    rng = make_rng(seed)
    return Signal(math.sqrt(power) * rng.standard_normal(n), rate)


def generate_poisson_impulses(duration: float, lam: float, amp_std: float, rate: float, seed: int) -> Signal:
    """Poisson impulse train with Gaussian areas of standard deviation ``amp_std``.

    Arrivals landing in the same sample are merged by summing their areas.
    """
    n = _num_samples(duration, rate)
    if not lam > 0:
        raise InvalidArgumentError("Poisson rate must be positive")
    dt = 1.0 / rate
    if lam * dt >= 1:
        warnings.warn(
            f"lambda*dt = {lam * dt:.3g} >= 1: multiple arrivals per sample are merged",
            RuntimeWarning,
            stacklevel=2,
        )
    rng = make_rng(seed)
    counts = rng.poisson(lam * dt, n)
    hit = np.flatnonzero(counts)
    out = np.zeros(n)
    # sum of k iid N(0, s^2) areas is N(0, k s^2)
    out[hit] = amp_std * np.sqrt(counts[hit]) * rng.standard_normal(hit.size) / dt
    return Signal(out, rate)


def generate_bursts(
    duration: float,
    burst_period: float,
    d: float,
    power_in_burst: float,
    rate: float,
    seed: int,
    phase: float = 0.0,
) -> Signal:
    """Periodic Gaussian bursts: noise on for ``d * burst_period`` each period.

    ``phase`` (seconds) shifts the burst pattern; at zero the first burst
    starts at t = 0.
    """
    n = _num_samples(duration, rate)
    if not 0 < d <= 1:
        raise InvalidArgumentError(f"duty cycle must lie in (0, 1], got {d}")
    period = int(round(burst_period * rate))
    if period < 2:
        raise InvalidArgumentError("burst period must span at least 2 samples")
    if power_in_burst < 0:
        raise InvalidArgumentError("power must be non-negative")
    on = max(1, int(round(d * period)))
    offset = int(round(phase * rate))
    gate = ((np.arange(n) - offset) % period) < on
    rng = make_rng(seed)
    return Signal(math.sqrt(power_in_burst) * rng.standard_normal(n) * gate, rate)


def _periodic_phase(period: float, rate: float, duration: float, phase: float) -> np.ndarray:
    if period * rate < 2:
        raise InvalidArgumentError("period must span at least 2 samples")
    n = _num_samples(duration, rate)
    return np.mod(np.arange(n) / (period * rate) + phase, 1.0)


def generate_tone(period: float, amplitude: float, rate: float, duration: float, phase: float = 0.0) -> Signal:
    """``amplitude * cos(2 pi (t / period + phase))``; ``phase`` is in cycles."""
    cyc = _periodic_phase(period, rate, duration, phase)
    return Signal(amplitude * np.cos(2 * np.pi * cyc), rate)


def generate_square(period: float, amplitude: float, rate: float, duration: float, phase: float = 0.0) -> Signal:
    """Two-level wave, ``+amplitude`` for the first half of each cycle."""
    cyc = _periodic_phase(period, rate, duration, phase)
    return Signal(np.where(cyc < 0.5, amplitude, -amplitude), rate)


def generate_triangle(period: float, amplitude: float, rate: float, duration: float, phase: float = 0.0) -> Signal:
    """Triangle wave peaking at ``+amplitude`` at the start of each cycle."""
    cyc = _periodic_phase(period, rate, duration, phase)
    return Signal(amplitude * (4.0 * np.abs(cyc - 0.5) - 1.0), rate)


def generate_impulse_train(period: float, area: float, rate: float, duration: float, phase: float = 0.0) -> Signal:
    """One impulse of the given area per period, at ``t = (k + phase) * period``."""
    n = _num_samples(duration, rate)
    if period * rate < 2:
        raise InvalidArgumentError("period must span at least 2 samples")
    k = np.arange(0, int(np.ceil(n / (period * rate))) + 1)
    idx = np.rint((k + phase) * period * rate).astype(np.int64)
    idx = idx[(idx >= 0) & (idx < n)]
    out = np.zeros(n)
    out[idx] = area * rate
    return Signal(out, rate)


def generate_rrc_signal(
    b0: float,
    duration: float,
    rate: float,
    seed: int,
    rolloff: float = DEFAULT_RRC_ROLLOFF,
    span: int = DEFAULT_RRC_SPAN,
) -> Signal:
    """Unit-power Gaussian signal shaped by a root-raised-cosine filter of bandwidth ``b0``."""
    from .filters import design_rrc

    if not b0 > 0 or b0 > 0.45 * rate:
        raise InvalidArgumentError(f"B0 = {b0} must lie in (0, 0.45 * rate]")
    n = _num_samples(duration, rate)
    taps = design_rrc(b0, rolloff, span, rate).taps
    rng = make_rng(seed)
    white = rng.standard_normal(n + taps.size - 1)
    shaped = sps.oaconvolve(white, taps, mode="valid")
    # taps have unit energy, so the expected output variance is already 1;
    # rescale the realization so the normalization holds exactly
    shaped /= math.sqrt(np.mean(shaped**2))
    return Signal(shaped, rate)
