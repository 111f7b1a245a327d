import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from outliernoise.signal import BINARY_MAGIC, InvalidArgumentError, Signal, load_signal, save_signal


def test_rejects_bad_rate_and_non_finite():
    with pytest.raises(InvalidArgumentError):
        Signal([1.0, 2.0], 0.0)
    with pytest.raises(InvalidArgumentError):
        Signal([1.0, math.nan], 10.0)
    with pytest.raises(InvalidArgumentError):
        Signal([math.inf], 10.0)


def test_samples_are_read_only():
    s = Signal(np.arange(4.0), 10.0)
    with pytest.raises(ValueError):
        s.samples[0] = 5.0


def test_add_requires_matching_rate_and_length():
    a = Signal(np.ones(4), 10.0)
    with pytest.raises(InvalidArgumentError):
        a + Signal(np.ones(4), 20.0)
    with pytest.raises(InvalidArgumentError):
        a + Signal(np.ones(5), 10.0)
    assert np.array_equal((a + a).samples, 2 * np.ones(4))


def test_delayed_shifts_in_zeros():
    s = Signal(np.arange(1.0, 6.0), 1.0)
    assert np.array_equal(s.delayed(2).samples, [0, 0, 1, 2, 3])
    assert np.array_equal(s.delayed(0).samples, s.samples)


def test_csv_round_trip(tmp_path):
    s = Signal(np.random.default_rng(0).standard_normal(50), 64000.0)
    path = tmp_path / "s.csv"
    save_signal(s, path, "csv")
    assert path.read_text().splitlines()[0] == "t,amplitude"
    back = load_signal(path)
    assert np.array_equal(back.samples, s.samples)
    assert back.sample_rate == pytest.approx(64000.0, rel=1e-12)


def test_binary_layout(tmp_path):
    s = Signal([1.0, -2.5], 1000.0)
    path = tmp_path / "s.bin"
    save_signal(s, path, "bin")
    blob = path.read_bytes()
    assert blob[:8] == BINARY_MAGIC
    assert len(blob) == 16 + 2 * 8
    assert np.frombuffer(blob[8:16], "<f8")[0] == 1000.0
    assert np.array_equal(np.frombuffer(blob[16:], "<f8"), [1.0, -2.5])


def test_binary_bad_magic():
    with pytest.raises(InvalidArgumentError):
        Signal.from_bytes(b"XXXXXXXX" + bytes(8))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=64), st.floats(1.0, 1e7))
def test_binary_round_trip_is_exact(values, rate):
    s = Signal(values, rate)
    back = Signal.from_bytes(s.to_bytes())
    assert back == s
