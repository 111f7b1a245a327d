"""Signal-quality metrics: baseband SNR, Shannon capacity, pileup threshold, PSD.

Capacity is the Shannon formula per unit bandwidth. For residuals that are
not Gaussian (typically after linear filtering of outlier noise) it is only
a proxy, and reports label it as such.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import signal as sps

from .filters import FirDesign, IirDesign
from .robust import peakedness_dbg
from .signal import InvalidArgumentError, Signal

SNR_CAP_DB = 100.0
# time-bandwidth product of a Gaussian filter: FWHM duration x half-amplitude bandwidth
GAUSSIAN_TBP = 2 * math.log(2) / math.pi


def capacity(snr_db: float) -> float:
    """Shannon capacity in bit/s/Hz for an SNR in dB (``-inf`` gives 0)."""
    if snr_db == -math.inf:
        return 0.0
    return math.log2(1.0 + 10.0 ** (snr_db / 10.0))


def snr_db(reference, output, cap_db: float = SNR_CAP_DB) -> tuple[float, bool]:
    """SNR of ``output`` against ``reference`` in dB, and whether it hit the cap."""
    ref = np.asarray(reference.samples if isinstance(reference, Signal) else reference, dtype=float)
    out = np.asarray(output.samples if isinstance(output, Signal) else output, dtype=float)
    if ref.shape != out.shape:
        raise InvalidArgumentError("reference and output lengths differ")
    p_sig = float(np.mean(ref**2))
    p_err = float(np.mean((out - ref) ** 2))
    if p_err == 0.0 or (p_sig > 0 and 10 * math.log10(p_sig / p_err) >= cap_db):
        return cap_db, True
    if p_sig == 0.0:
        return -math.inf, False
    return 10.0 * math.log10(p_sig / p_err), False


@dataclass
class SnrResult:
    snr_db: float
    capped: bool
    reference: Signal
    output: Signal


def baseband_snr(
    chain: Callable[[Signal], Signal],
    clean: Signal,
    noise: Signal,
    reference_chain: Callable[[Signal], Signal] | None = None,
    warmup: int = 0,
    cap_db: float = SNR_CAP_DB,
) -> SnrResult:
    """Baseband SNR of ``chain`` on ``clean + noise``.

    The reference is the linear (delay-matched) chain applied to the clean
    signal alone; by default ``chain`` itself serves as that linear chain.
    ``chain`` must build fresh filter state on every call.
    """
    reference_chain = reference_chain or chain
    ref = reference_chain(clean)
    out = chain(clean + noise)
    if len(ref) != len(out):
        raise InvalidArgumentError("chain output lengths differ between clean and noisy runs")
    value, capped = snr_db(ref.samples[warmup:], out.samples[warmup:], cap_db)
    return SnrResult(value, capped, ref, out)


@dataclass(frozen=True)
class PileupParams:
    """``lambda_c = frontend_bandwidth / time_bandwidth_product``."""

    frontend_bandwidth: float
    time_bandwidth_product: float
    duration: float

    @property
    def lambda_c(self) -> float:
        return self.frontend_bandwidth / self.time_bandwidth_product


def _fwhm(t: np.ndarray, h: np.ndarray) -> float:
    peak = int(np.argmax(h))
    half = h[peak] / 2
    above = h >= half
    # walk outwards from the peak to the first samples below half maximum
    left = peak
    while left > 0 and above[left - 1]:
        left -= 1
    right = peak
    while right < h.size - 1 and above[right + 1]:
        right += 1
    if left == 0 or right == h.size - 1:
        raise InvalidArgumentError("impulse response not resolved well enough for a FWHM")
    tl = np.interp(half, [h[left - 1], h[left]], [t[left - 1], t[left]])
    tr = np.interp(half, [h[right + 1], h[right]], [t[right + 1], t[right]])
    return float(tr - tl)


def _crossing(f: np.ndarray, mag: np.ndarray, level: float) -> float:
    i = int(np.argmax(mag < level))
    if i == 0:
        raise InvalidArgumentError("response never drops below the requested level")
    return float(np.interp(level, [mag[i], mag[i - 1]], [f[i], f[i - 1]]))


def time_bandwidth(frontend) -> tuple[float, float, float]:
    """(FWHM duration, half-amplitude bandwidth, -3 dB bandwidth) of a lowpass.

    IIR designs are measured on the continuous-time prototype they emulate;
    FIR designs on their taps, sinc-interpolated 64x.
    """
    if isinstance(frontend, IirDesign):
        if frontend.kind != "lowpass":
            raise InvalidArgumentError("pileup threshold needs a lowpass front end")
        b, a = frontend.analog_prototype()
        fc = frontend.cutoffs[0]
        t = np.linspace(0, 40 / fc, 40001)
        _, h = sps.impulse((b, a), T=t)
        f = np.linspace(0, 10 * fc, 20001)
        _, H = sps.freqs(b, a, worN=2 * np.pi * f)
        mag = np.abs(H) / abs(H[0])
    elif isinstance(frontend, FirDesign):
        taps = frontend.taps
        dc = taps.sum()
        if abs(dc) < 1e-9:
            raise InvalidArgumentError("pileup threshold needs a lowpass front end")
        up = 64
        padded = np.concatenate([np.zeros(taps.size), taps, np.zeros(taps.size)])
        h = sps.resample(padded, padded.size * up)
        t = np.arange(h.size) / (frontend.rate * up)
        f = np.linspace(0, frontend.rate / 2, 200001)
        mag = np.abs(frontend.frequency_response(f)) / abs(dc)
    else:
        raise InvalidArgumentError(f"unsupported front end {type(frontend).__name__}")
    duration = _fwhm(t, h)
    return duration, _crossing(f, mag, 0.5), _crossing(f, mag, 2**-0.5)


def pileup_threshold(frontend) -> PileupParams:
    """Rate above which filtered outlier pulses overlap into Gaussian-like noise.

    TBP is the impulse response's FWHM duration times the frequency at which
    the magnitude response halves (exactly ``2 ln 2 / pi`` for a Gaussian
    filter); the threshold is the -3 dB bandwidth over that TBP.
    """
    duration, f_half, f_3db = time_bandwidth(frontend)
    return PileupParams(f_3db, duration * f_half, duration)


def psd(signal: Signal, segment_length: int) -> tuple[np.ndarray, np.ndarray]:
    """Averaged-periodogram (Welch, Hann, 50% overlap) one-sided PSD."""
    if segment_length < 8:
        raise InvalidArgumentError("segment length must be at least 8 samples")
    if segment_length > len(signal):
        raise InvalidArgumentError("signal shorter than one PSD segment")
    f, p = sps.welch(
        signal.samples,
        fs=signal.sample_rate,
        window="hann",
        nperseg=segment_length,
        noverlap=segment_length // 2,
        detrend=False,
        scaling="density",
        return_onesided=True,
    )
    return f, p


def psd_power(freqs: np.ndarray, density: np.ndarray) -> float:
    """Integrated power of a one-sided PSD on a uniform grid."""
    df = freqs[1] - freqs[0]
    return float(np.sum(density) * df)


@dataclass
class MetricsReport:
    baseband_snr_db: float
    capacity_bits_per_s_per_hz: float
    peakedness_dbg: float | None = None
    clip_fraction: float | None = None
    snr_capped: bool = False
    capacity_is_proxy: bool = True
    psd: list[tuple[float, float]] | None = field(default=None, repr=False)

    @classmethod
    def from_snr(cls, snr: float, capped: bool = False, **extra) -> "MetricsReport":
        return cls(baseband_snr_db=snr, capacity_bits_per_s_per_hz=capacity(snr), snr_capped=capped, **extra)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_row(self) -> dict:
        row = self.to_dict()
        row.pop("psd")
        return row


def residual_report(reference: Signal, output: Signal, warmup: int = 0, clip_fraction=None) -> MetricsReport:
    value, capped = snr_db(reference.samples[warmup:], output.samples[warmup:])
    resid = output.samples[warmup:] - reference.samples[warmup:]
    try:
        k = peakedness_dbg(resid)
    except ValueError:
        k = None
    return MetricsReport.from_snr(value, capped, peakedness_dbg=k, clip_fraction=clip_fraction)


def write_rows_csv(path, rows: list[dict]) -> None:
    if not rows:
        raise InvalidArgumentError("no rows to write")
    names = list(rows[0])
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=names, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in names})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
