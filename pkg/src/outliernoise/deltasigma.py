"""Oversampled 1-bit front end with digital outlier filtering.

The pipeline is::

    input clipper -> 2nd-order 1-bit delta-sigma modulator
        -> wideband IIR lowpass -> CAF -> decimation lowpass -> downsample

The modulator is the cascade-of-integrators feedback structure with unity
coefficients: the signal transfer is a one-sample delay and the quantization
noise is shaped by ``(1 - z^-1)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import signal as sps

from .caf import CafConfig, caf_process
from .filters import (
    FirDesign,
    IirDesign,
    apply,
    design_fir_lowpass,
    design_iir,
    iir_from_zpk,
)
from .signal import InvalidArgumentError, Signal

DEFAULT_CLIP_LEVEL = 0.8


@njit(cache=True)
def _dsm_run(x, clip, v1, v2, out):
    for n in range(x.size):
        xn = x[n]
        if xn > clip:
            xn = clip
        elif xn < -clip:
            xn = -clip
        y = 1.0 if v2 >= 0.0 else -1.0
        out[n] = y
        v1 = v1 + xn - y
        v2 = v2 + v1 - y
    return v1, v2


class DeltaSigmaModulator:
    """Second-order single-bit modulator with an input clipper."""

    def __init__(self, clip_level: float = DEFAULT_CLIP_LEVEL):
        if not 0 < clip_level <= 1:
            raise InvalidArgumentError("clip level must lie in (0, 1] of full scale")
        self.clip_level = float(clip_level)
        self.v1 = 0.0
        self.v2 = 0.0

    def step(self, x: float) -> float:
        return float(self.process(np.array([x]))[0])

    def process(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        out = np.empty_like(x)
        self.v1, self.v2 = _dsm_run(x, self.clip_level, self.v1, self.v2, out)
        return out


def dsm_modulate(signal: Signal, clip_level: float = DEFAULT_CLIP_LEVEL) -> Signal:
    return Signal(DeltaSigmaModulator(clip_level).process(signal.samples), signal.sample_rate)


def pack_bits(bits) -> bytes:
    """Pack a +/-1 bitstream one bit per sample, LSB first (1 for +1)."""
    b = np.asarray(bits) > 0
    return np.packbits(b, bitorder="little").tobytes()


def unpack_bits(blob: bytes, n: int) -> np.ndarray:
    b = np.unpackbits(np.frombuffer(blob, dtype=np.uint8), count=n, bitorder="little")
    return np.where(b > 0, 1.0, -1.0)


# ---------------------------------------------------------------------------
# front-end co-design
# ---------------------------------------------------------------------------


def codesign_frontend(cutoff: float, rate: float, order: int = 4) -> tuple[IirDesign, IirDesign]:
    """Split a 4th-order Bessel-Thomson lowpass into two cascaded 2nd-order sections.

    The first (lower-Q) pole pair models the analog antialiasing filter and
    the second (higher-Q) pair the wideband digital IIR; their product is
    the full Bessel response. Both are returned digitized at ``rate``.
    """
    if order != 4:
        raise InvalidArgumentError("only the 4th-order Bessel split into two biquads is supported")
    if not 0 < cutoff < rate / 20:
        raise InvalidArgumentError(f"cutoff {cutoff} must lie below a tenth of Nyquist ({rate / 20} Hz)")
    z, p, k = sps.bessel(order, cutoff, fs=rate, output="zpk", norm="mag")
    upper = p[np.imag(p) > 0]
    # Q of the analog pole pair grows with |angle|; digitally it tracks |imag| / |1 - pole|
    upper = sorted(upper, key=lambda q: abs(np.angle(-np.log(q))))
    sections = []
    for pole in upper:
        pair = np.array([pole, np.conj(pole)])
        dc = np.prod(1 - pair) / 4.0  # two zeros at z = -1 contribute (1 + 1)^2 = 4 at DC
        sections.append(iir_from_zpk(np.array([-1.0, -1.0]), pair, np.real(dc), rate, "bessel-section", "lowpass", (cutoff,)))
    return sections[0], sections[1]


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Rates and filters of the delta-sigma front end.

    ``wideband`` defaults to the digital half of the co-designed Bessel pair
    cascaded with its analog half (simulated digitally at the modulator rate).
    """

    modulator_rate: float
    output_rate: float
    wideband_cutoff: float
    caf: CafConfig | None = None
    clip_level: float = DEFAULT_CLIP_LEVEL
    wideband_family: str = "bessel-codesign"
    decimation_transition: float | None = None
    wideband: tuple = field(init=False, repr=False)
    decimator: FirDesign = field(init=False, repr=False)

    def __post_init__(self):
        ratio = self.modulator_rate / self.output_rate
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise InvalidArgumentError(f"decimation factor {ratio} is not a positive integer")
        if self.caf is not None and not math.isclose(self.caf.rate, self.modulator_rate):
            raise InvalidArgumentError("CAF must be designed at the modulator rate")
        if self.wideband_family == "bessel-codesign":
            wideband = codesign_frontend(self.wideband_cutoff, self.modulator_rate)
        elif self.wideband_family == "butterworth":
            wideband = (design_iir("butterworth", "lowpass", 4, self.wideband_cutoff, self.modulator_rate),)
        else:
            raise InvalidArgumentError(f"unknown wideband family {self.wideband_family!r}")
        cutoff = 0.8 * self.output_rate / 2
        transition = self.decimation_transition or 0.2 * self.output_rate / 2
        decimator = design_fir_lowpass(cutoff, self.modulator_rate, transition)
        object.__setattr__(self, "wideband", wideband)
        object.__setattr__(self, "decimator", decimator)

    @property
    def factor(self) -> int:
        return int(round(self.modulator_rate / self.output_rate))

    @property
    def delay(self) -> int:
        """Linear-phase delay (modulator samples) of CAF plus decimator."""
        return self.decimator.group_delay + (self.caf.delay if self.caf is not None else 0)


def decimate(signal: Signal, decimator: FirDesign, factor: int) -> Signal:
    """Lowpass with ``decimator`` and keep every ``factor``-th sample.

    Output length is ``len(signal) // factor``; a trailing partial block is
    dropped.
    """
    n_out = len(signal) // factor
    y = sps.upfirdn(decimator.taps, signal.samples, up=1, down=factor)[:n_out]
    return Signal(y, signal.sample_rate / factor)


def pipeline_stages(config: PipelineConfig, x: Signal, caf_enabled: bool = True) -> dict[str, Signal]:
    """Run the pipeline and return every intermediate signal."""
    if not math.isclose(x.sample_rate, config.modulator_rate):
        raise InvalidArgumentError("input must be sampled at the modulator rate")
    bits = dsm_modulate(x, config.clip_level)
    wide = bits
    for section in config.wideband:
        wide = apply(section, wide)
    if config.caf is not None:
        stage = config.caf if caf_enabled else config.caf.bypassed()
        cleaned = caf_process(stage, wide)
    else:
        cleaned = wide
    out = decimate(cleaned, config.decimator, config.factor)
    return {"bits": bits, "wideband": wide, "caf": cleaned, "output": out}


def pipeline_process(config: PipelineConfig, x: Signal, caf_enabled: bool = True) -> Signal:
    """Decimated output of the delta-sigma front end."""
    return pipeline_stages(config, x, caf_enabled)["output"]
