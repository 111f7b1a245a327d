"""Signal container and serialization.

A :class:`Signal` is an immutable, uniformly sampled real sequence with its
sample rate. Every stage of the toolkit consumes and produces signals.

Two on-disk formats are supported:

* CSV with header ``t,amplitude``
* raw binary: 8-byte magic ``ONMT0001``, sample rate as little-endian float64,
  then the samples as little-endian float64
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

BINARY_MAGIC = b"ONMT0001"
_HEADER = struct.Struct("<8sd")


class InvalidArgumentError(ValueError):
    """Raised when an operation receives arguments outside its domain."""


@dataclass(frozen=True, eq=False)
class Signal:
    """Real-valued samples taken at ``sample_rate`` Hz."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        if not self.sample_rate > 0 or not np.isfinite(self.sample_rate):
            raise InvalidArgumentError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentError("signal contains NaN or Inf samples")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Signal):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(self.samples, other.samples)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def mean_square(self) -> float:
        return float(np.mean(self.samples**2))

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.sample_rate)

    def __add__(self, other: "Signal") -> "Signal":
        if not isinstance(other, Signal):
            return NotImplemented
        if other.sample_rate != self.sample_rate:
            raise InvalidArgumentError("cannot add signals with different sample rates")
        if len(other) != len(self):
            raise InvalidArgumentError("cannot add signals of different lengths")
        return Signal(self.samples + other.samples, self.sample_rate)

    def scaled(self, gain: float) -> "Signal":
        return Signal(self.samples * gain, self.sample_rate)

    def delayed(self, n: int) -> "Signal":
        """Delay by ``n`` whole samples, zero-filling the start, same length."""
        out = np.zeros_like(self.samples)
        if n < len(self):
            out[n:] = self.samples[: len(self) - n]
        return Signal(out, self.sample_rate)

    # -- serialization -------------------------------------------------

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_string())

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "amplitude"])
        for t, a in zip(self.times, self.samples):
            writer.writerow([repr(float(t)), repr(float(a))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path) -> "Signal":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] < 2:
            raise InvalidArgumentError("CSV signal needs at least two rows to infer the sample rate")
        dt = (data[-1, 0] - data[0, 0]) / (data.shape[0] - 1)
        return cls(data[:, 1], 1.0 / dt)

    def to_bytes(self) -> bytes:
        return _HEADER.pack(BINARY_MAGIC, self.sample_rate) + self.samples.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Signal":
        if len(blob) < _HEADER.size:
            raise InvalidArgumentError("binary signal shorter than its header")
        magic, rate = _HEADER.unpack_from(blob)
        if magic != BINARY_MAGIC:
            raise InvalidArgumentError(f"bad magic {magic!r}")
        payload = blob[_HEADER.size:]
        if len(payload) % 8:
            raise InvalidArgumentError("binary payload is not a whole number of float64 samples")
        return cls(np.frombuffer(payload, dtype="<f8"), rate)

    def to_binary(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_binary(cls, path) -> "Signal":
        return cls.from_bytes(Path(path).read_bytes())


def save_signal(signal: Signal, path, fmt: str = "csv") -> None:
    if fmt == "csv":
        signal.to_csv(path)
    elif fmt == "bin":
        signal.to_binary(path)
    else:
        raise InvalidArgumentError(f"unknown signal format {fmt!r}")


def load_signal(path) -> Signal:
    """Load a signal, sniffing the binary magic before falling back to CSV."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_MAGIC))
    if head == BINARY_MAGIC:
        return Signal.from_binary(path)
    return Signal.from_csv(path)
