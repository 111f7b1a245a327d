"""Linear filter design and streaming application.

IIR designs (Butterworth, Bessel) are realized as cascades of second-order
sections via the bilinear transform with cutoff pre-warping. FIR designs are
Kaiser-windowed sinc filters of odd length, so linear-phase designs have an
integer group delay and an exact complement ``delta[n - D] - h[n]``.

Filter states start at zero. Measurements should skip :func:`warmup_length`
samples of start-up transient.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numba import njit
from scipy import signal as sps

from .signal import InvalidArgumentError, Signal

Family = Literal["butterworth", "bessel"]
Kind = Literal["lowpass", "highpass", "bandpass", "bandstop"]

DEFAULT_STOPBAND_DB = 60.0


class DesignFailureError(RuntimeError):
    """A designed filter turned out numerically unusable (e.g. unstable)."""


def _as_cutoffs(cutoffs) -> tuple[float, ...]:
    if np.ndim(cutoffs) == 0:
        return (float(cutoffs),)
    return tuple(float(c) for c in cutoffs)


@dataclass(frozen=True, eq=False)
class IirDesign:
    family: str
    kind: str
    order: int
    cutoffs: tuple[float, ...]
    rate: float
    sos: np.ndarray

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(s[3:]) for s in self.sos])

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def frequency_response(self, freqs) -> np.ndarray:
        _, h = sps.sosfreqz(self.sos, worN=np.asarray(freqs, dtype=float), fs=self.rate)
        return h

    def impulse_response(self, n: int) -> np.ndarray:
        imp = np.zeros(n)
        imp[0] = 1.0
        return sps.sosfilt(self.sos, imp)

    def group_delay(self, freqs) -> np.ndarray:
        """Group delay in samples at ``freqs`` (Hz)."""
        freqs = np.asarray(freqs, dtype=float)
        total = np.zeros_like(freqs)
        for s in self.sos:
            _, gd = sps.group_delay((s[:3], s[3:]), w=freqs, fs=self.rate)
            total += gd
        return total

    def analog_prototype(self):
        """(b, a) of the continuous-time filter this design emulates, in rad/s."""
        wn = [2 * math.pi * c for c in self.cutoffs]
        wn = wn[0] if len(wn) == 1 else wn
        btype = {"lowpass": "low", "highpass": "high", "bandpass": "band", "bandstop": "stop"}[self.kind]
        if self.family == "butterworth":
            return sps.butter(self.order, wn, btype=btype, analog=True)
        if self.family == "bessel":
            return sps.bessel(self.order, wn, btype=btype, analog=True, norm="mag")
        raise InvalidArgumentError(f"no analog prototype for family {self.family!r}")

    def to_dict(self) -> dict:
        return {
            "type": "iir",
            "family": self.family,
            "kind": self.kind,
            "order": self.order,
            "cutoffs": list(self.cutoffs),
            "rate": self.rate,
            "coefficients": self.sos.tolist(),
        }


@dataclass(frozen=True, eq=False)
class FirDesign:
    """FIR taps; ``group_delay`` is set only for linear-phase designs."""

    taps: np.ndarray
    rate: float
    group_delay: int | None = None
    label: str = "fir"

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64).reshape(-1)
        if taps.size == 0:
            raise InvalidArgumentError("FIR needs at least one tap")
        taps.flags.writeable = False
        object.__setattr__(self, "taps", taps)

    @property
    def is_linear_phase(self) -> bool:
        return (
            self.group_delay is not None
            and self.taps.size == 2 * self.group_delay + 1
            and bool(np.all(np.abs(self.taps - self.taps[::-1]) <= 1e-15 * max(1.0, np.max(np.abs(self.taps)))))
        )

    def frequency_response(self, freqs) -> np.ndarray:
        _, h = sps.freqz(self.taps, worN=np.asarray(freqs, dtype=float), fs=self.rate)
        return h

    def zero_phase_response(self, freqs) -> np.ndarray:
        """Real amplitude response with the linear-phase delay removed."""
        if self.group_delay is None:
            raise InvalidArgumentError("zero-phase response needs a linear-phase design")
        freqs = np.asarray(freqs, dtype=float)
        h = self.frequency_response(freqs)
        return np.real(h * np.exp(2j * np.pi * freqs / self.rate * self.group_delay))

    def impulse_response(self, n: int | None = None) -> np.ndarray:
        if n is None:
            return self.taps.copy()
        out = np.zeros(n)
        k = min(n, self.taps.size)
        out[:k] = self.taps[:k]
        return out

    def cascade(self, other: "FirDesign") -> "FirDesign":
        _check_rate(self.rate, other.rate)
        gd = None
        if self.group_delay is not None and other.group_delay is not None:
            gd = self.group_delay + other.group_delay
        return FirDesign(np.convolve(self.taps, other.taps), self.rate, gd, f"{self.label}*{other.label}")

    def to_dict(self) -> dict:
        return {
            "type": "fir",
            "label": self.label,
            "rate": self.rate,
            "group_delay": self.group_delay,
            "coefficients": self.taps.tolist(),
        }


@dataclass(frozen=True)
class ComplementaryPair:
    """A linear-phase band filter and its spectral inversion; the two sum to a pure delay."""

    band: FirDesign
    complement: FirDesign

    @property
    def delay(self) -> int:
        return self.band.group_delay


def design_to_json(design) -> str:
    return json.dumps(design.to_dict(), indent=2)


def design_from_dict(doc: dict):
    if doc.get("type") == "iir":
        return IirDesign(
            doc["family"], doc["kind"], int(doc["order"]), tuple(doc["cutoffs"]), float(doc["rate"]),
            np.asarray(doc["coefficients"], dtype=float),
        )
    if doc.get("type") == "fir":
        return FirDesign(np.asarray(doc["coefficients"]), float(doc["rate"]), doc.get("group_delay"), doc.get("label", "fir"))
    raise InvalidArgumentError(f"unknown filter document type {doc.get('type')!r}")


def _check_rate(a: float, b: float) -> None:
    if not math.isclose(a, b, rel_tol=1e-12):
        raise InvalidArgumentError(f"sample rate mismatch: filter designed for {a} Hz, got {b} Hz")


# ---------------------------------------------------------------------------
# IIR
# ---------------------------------------------------------------------------


def design_iir(family: Family, kind: Kind, order: int, cutoffs, rate: float) -> IirDesign:
    """Butterworth or Bessel IIR as second-order sections.

    Bessel designs use magnitude normalization, so every family sits at
    -3.01 dB at its cutoff frequency. Band designs take ``(f_lo, f_hi)``.
    """
    if family not in ("butterworth", "bessel"):
        raise InvalidArgumentError(f"unknown IIR family {family!r}")
    if kind not in ("lowpass", "highpass", "bandpass", "bandstop"):
        raise InvalidArgumentError(f"unknown filter kind {kind!r}")
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 8:
        raise InvalidArgumentError(f"order must be an integer in [1, 8], got {order!r}")
    cut = _as_cutoffs(cutoffs)
    need = 2 if kind in ("bandpass", "bandstop") else 1
    if len(cut) != need:
        raise InvalidArgumentError(f"{kind} needs {need} cutoff(s), got {len(cut)}")
    if any(not 0 < c < rate / 2 for c in cut):
        raise InvalidArgumentError(f"cutoffs {cut} must lie strictly between 0 and Nyquist ({rate / 2} Hz)")
    if need == 2 and not cut[0] < cut[1]:
        raise InvalidArgumentError("band edges must be increasing")
    btype = {"lowpass": "low", "highpass": "high", "bandpass": "band", "bandstop": "stop"}[kind]
    wn = cut[0] if need == 1 else list(cut)
    if family == "butterworth":
        sos = sps.butter(order, wn, btype=btype, fs=rate, output="sos")
    else:
        sos = sps.bessel(order, wn, btype=btype, fs=rate, output="sos", norm="mag")
    design = IirDesign(family, kind, int(order), cut, float(rate), sos)
    if not np.all(np.isfinite(sos)) or not design.is_stable():
        raise DesignFailureError(f"{family} {kind} order {order} at {cut} Hz is unstable after discretization")
    return design


def iir_from_zpk(z, p, k, rate: float, label: str, kind: str = "lowpass", cutoffs=()) -> IirDesign:
    sos = sps.zpk2sos(z, p, k)
    design = IirDesign(label, kind, len(p), _as_cutoffs(cutoffs) if len(cutoffs) else (), float(rate), sos)
    if not design.is_stable():
        raise DesignFailureError(f"{label} is unstable")
    return design


# ---------------------------------------------------------------------------
# FIR
# ---------------------------------------------------------------------------


def _kaiser_length(transition: float, rate: float, stopband_db: float) -> tuple[int, float]:
    numtaps, beta = sps.kaiserord(stopband_db, transition / (rate / 2))
    if numtaps % 2 == 0:
        numtaps += 1
    return numtaps, beta


def design_fir_lowpass(
    cutoff: float,
    rate: float,
    transition: float | None = None,
    stopband_db: float = DEFAULT_STOPBAND_DB,
) -> FirDesign:
    """Linear-phase Kaiser-window lowpass; ``cutoff`` is the -6 dB point.

    ``transition`` is the full transition width in Hz (default: ``cutoff / 2``).
    """
    if not 0 < cutoff < rate / 2:
        raise InvalidArgumentError(f"cutoff {cutoff} must lie in (0, {rate / 2})")
    transition = cutoff / 2 if transition is None else transition
    numtaps, beta = _kaiser_length(transition, rate, stopband_db)
    taps = sps.firwin(numtaps, cutoff, window=("kaiser", beta), fs=rate)
    return FirDesign(_symmetrize(taps), rate, numtaps // 2, f"lowpass@{cutoff:g}")


def design_fir_bandpass(
    f_lo: float,
    f_hi: float,
    rate: float,
    transition: float | None = None,
    stopband_db: float = DEFAULT_STOPBAND_DB,
) -> FirDesign:
    if not 0 < f_lo < f_hi < rate / 2:
        raise InvalidArgumentError(f"band ({f_lo}, {f_hi}) must satisfy 0 < f_lo < f_hi < Nyquist")
    transition = (f_hi - f_lo) / 2 if transition is None else transition
    numtaps, beta = _kaiser_length(transition, rate, stopband_db)
    taps = sps.firwin(numtaps, [f_lo, f_hi], window=("kaiser", beta), pass_zero=False, fs=rate)
    return FirDesign(_symmetrize(taps), rate, numtaps // 2, f"bandpass@{f_lo:g}-{f_hi:g}")


def design_fir_gaussian(bandwidth: float, rate: float) -> FirDesign:
    """Gaussian-shaped lowpass FIR with -3 dB bandwidth ``bandwidth`` and unit DC gain."""
    sigma_t = math.sqrt(math.log(2)) / (2 * math.pi * bandwidth)
    half = int(math.ceil(6 * sigma_t * rate))
    t = np.arange(-half, half + 1) / rate
    taps = np.exp(-0.5 * (t / sigma_t) ** 2)
    return FirDesign(taps / taps.sum(), rate, half, f"gaussian@{bandwidth:g}")


def _symmetrize(taps: np.ndarray) -> np.ndarray:
    return 0.5 * (taps + taps[::-1])


def rrc_pulse(t: np.ndarray, rolloff: float) -> np.ndarray:
    """Root-raised-cosine pulse at times ``t`` in symbol periods (unnormalized)."""
    a = rolloff
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    at0 = np.isclose(t, 0.0, atol=1e-12)
    sing = np.isclose(np.abs(4 * a * t), 1.0, atol=1e-9) if a > 0 else np.zeros_like(at0)
    reg = ~(at0 | sing)
    tr = t[reg]
    out[reg] = (np.sin(np.pi * tr * (1 - a)) + 4 * a * tr * np.cos(np.pi * tr * (1 + a))) / (
        np.pi * tr * (1 - (4 * a * tr) ** 2)
    )
    out[at0] = 1 - a + 4 * a / np.pi
    if np.any(sing):
        out[sing] = (a / math.sqrt(2)) * (
            (1 + 2 / np.pi) * math.sin(np.pi / (4 * a)) + (1 - 2 / np.pi) * math.cos(np.pi / (4 * a))
        )
    return out


def design_rrc(b0: float, rolloff: float, span: int, rate: float) -> FirDesign:
    """Root-raised-cosine FIR whose half-power bandwidth is ``b0``.

    The symbol rate is ``2 * b0``; ``span`` is the length in symbols. Taps
    have unit energy, so RRC * RRC is 1 at lag zero.
    """
    if span < 8:
        raise InvalidArgumentError("RRC span must cover at least 8 symbol periods")
    if not 0 <= rolloff <= 1:
        raise InvalidArgumentError("rolloff must lie in [0, 1]")
    if not 0 < b0 < rate / 2:
        raise InvalidArgumentError("B0 must lie below Nyquist")
    sps_ = rate / (2 * b0)
    half = int(round(span * sps_ / 2))
    taps = rrc_pulse(np.arange(-half, half + 1) / sps_, rolloff)
    taps = _symmetrize(taps / math.sqrt(np.sum(taps**2)))
    return FirDesign(taps, rate, half, f"rrc@{b0:g}")


def make_complement(band: FirDesign) -> ComplementaryPair:
    """Spectral inversion: ``complement[n] = delta[n - D] - band[n]``."""
    if not band.is_linear_phase:
        raise InvalidArgumentError("complement requires a linear-phase (symmetric, odd-length) band filter")
    comp = -band.taps.copy()
    comp[band.group_delay] += 1.0
    return ComplementaryPair(band, FirDesign(comp, band.rate, band.group_delay, f"complement({band.label})"))


def excess_band_filter(
    signal_band: tuple[float, float],
    excess_extent: float,
    rate: float,
    stopband_db: float = DEFAULT_STOPBAND_DB,
) -> FirDesign:
    """Filter that rejects the signal band and passes the surrounding excess band.

    For a baseband signal (``f_lo == 0``) this is the complement of a lowpass
    covering ``[0, f_hi]`` cascaded with a lowpass at ``excess_extent``. For a
    passband signal the band filter is a bandpass and the excess band extends
    ``excess_extent / 2`` on each side of the band centre.
    """
    f_lo, f_hi = signal_band
    width = f_hi - f_lo
    if width <= 0 or f_lo < 0:
        raise InvalidArgumentError("signal band must satisfy 0 <= f_lo < f_hi")
    if not excess_extent > width:
        raise InvalidArgumentError("excess band must be wider than the signal band")
    guard = width / 2
    if f_lo == 0:
        band = design_fir_lowpass(f_hi + guard / 2, rate, guard, stopband_db)
        lo, hi = 0.0, excess_extent
    else:
        band = design_fir_bandpass(max(f_lo - guard / 2, guard / 4), f_hi + guard / 2, rate, guard, stopband_db)
        centre = 0.5 * (f_lo + f_hi)
        lo, hi = max(0.0, centre - excess_extent / 2), centre + excess_extent / 2
    inverted = make_complement(band).complement
    if hi >= 0.45 * rate:
        outer = None
    else:
        outer = design_fir_lowpass(hi, rate, max(guard, 0.1 * hi), stopband_db)
    if lo > 0:
        outer_hp = make_complement(design_fir_lowpass(lo, rate, max(guard, 0.1 * lo), stopband_db)).complement
        outer = outer_hp if outer is None else outer.cascade(outer_hp)
    result = inverted if outer is None else inverted.cascade(outer)
    return FirDesign(result.taps, rate, result.group_delay, f"excess({f_lo:g}-{f_hi:g},{excess_extent:g})")


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------


@njit(cache=True)
def _fir_run(taps, z, out):
    # z holds len(taps) - 1 history samples followed by the new input
    m = taps.size
    for n in range(out.size):
        acc = 0.0
        for k in range(m):
            acc += taps[k] * z[n + m - 1 - k]
        out[n] = acc


class StreamingFilter:
    """Per-stream filter state for an IIR or FIR design.

    Calling :meth:`process` on consecutive chunks gives exactly the same
    samples as one call on the concatenation.
    """

    def __init__(self, design):
        self.design = design
        self.reset()

    def reset(self) -> None:
        if isinstance(self.design, IirDesign):
            self._zi = np.zeros((self.design.sos.shape[0], 2))
        else:
            self._zi = np.zeros(max(self.design.taps.size - 1, 0))

    def process(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if isinstance(self.design, IirDesign):
            y, self._zi = sps.sosfilt(self.design.sos, x, zi=self._zi)
            return y
        taps = self.design.taps
        if taps.size == 1:
            return taps[0] * x
        # fixed summation order per output sample, so chunking cannot change a single bit
        z = np.concatenate([self._zi, x])
        y = np.empty(x.size)
        _fir_run(taps, z, y)
        self._zi = z[z.size - (taps.size - 1):]
        return y

    def process_signal(self, signal: Signal) -> Signal:
        _check_rate(self.design.rate, signal.sample_rate)
        return Signal(self.process(signal.samples), signal.sample_rate)


def apply(design, signal: Signal) -> Signal:
    """One-shot filtering from zero state; output has the input's length."""
    return StreamingFilter(design).process_signal(signal)


def apply_fast(design, signal: Signal) -> Signal:
    """Same as :func:`apply` for FIR designs, via overlap-add convolution."""
    if isinstance(design, IirDesign):
        return apply(design, signal)
    _check_rate(design.rate, signal.sample_rate)
    y = sps.oaconvolve(signal.samples, design.taps)[: len(signal)]
    return Signal(y, signal.sample_rate)


def apply_cascade(designs: Sequence, signal: Signal, fast: bool = False) -> Signal:
    run = apply_fast if fast else apply
    for d in designs:
        signal = run(d, signal)
    return signal


def warmup_length(*designs, minimum: int = 0) -> int:
    """Samples to discard before measuring: 4x the largest group delay."""
    worst = 0
    for d in designs:
        if d is None:
            continue
        if isinstance(d, FirDesign):
            gd = d.group_delay if d.group_delay is not None else d.taps.size
        else:
            # IIR: time for the impulse response to decay below 1e-6 of its peak
            h = np.abs(d.impulse_response(1 << 16))
            above = np.flatnonzero(h > 1e-6 * h.max())
            gd = int(above[-1]) // 4 + 1 if above.size else 0
        worst = max(worst, gd)
    return max(4 * worst, minimum)


def noise_gain(*designs, n: int = 1 << 16) -> float:
    """Sum of squared impulse-response values of the cascade (white-noise power gain)."""
    h = np.zeros(n)
    h[0] = 1.0
    for d in designs:
        if isinstance(d, IirDesign):
            h = sps.sosfilt(d.sos, h)
        else:
            h = sps.oaconvolve(h, d.taps)[:n]
    return float(np.sum(h**2))
