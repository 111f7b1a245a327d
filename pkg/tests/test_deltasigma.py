import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from outliernoise.caf import default_caf_config
from outliernoise.deltasigma import (
    DeltaSigmaModulator,
    PipelineConfig,
    codesign_frontend,
    decimate,
    dsm_modulate,
    pack_bits,
    pipeline_process,
    pipeline_stages,
    unpack_bits,
)
from outliernoise.filters import design_iir
from outliernoise.generators import generate_tone
from outliernoise.signal import InvalidArgumentError, Signal

FS = 1e6
OUT = 1e4  # oversampling ratio 100
F0 = 503.0


def sine_fit(y, f, fs):
    n = np.arange(y.size) / fs
    a = np.c_[np.sin(2 * np.pi * f * n), np.cos(2 * np.pi * f * n), np.ones_like(n)]
    c, *_ = np.linalg.lstsq(a, y, rcond=None)
    return a @ c, c[2]


def sinad_db(y, f, fs):
    fit, dc = sine_fit(y, f, fs)
    return 10 * np.log10(np.mean((fit - dc) ** 2) / np.mean((y - fit) ** 2))


@pytest.fixture(scope="module")
def cfg():
    return PipelineConfig(FS, OUT, 25000.0, caf=default_caf_config(4000.0, FS, beta=6.0))


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=300))
@settings(max_examples=50, deadline=None)
def test_bitstream_is_binary(xs):
    bits = DeltaSigmaModulator().process(np.array(xs))
    assert set(np.unique(bits)) <= {-1.0, 1.0}


@pytest.mark.parametrize("level", [0.0, 0.5, -0.3])
def test_dc_tracking(level):
    bits = dsm_modulate(Signal(np.full(200_000, level), FS)).samples
    assert bits.mean() == pytest.approx(level, abs=0.01)


def test_clipper_contract():
    rng = np.random.default_rng(0)
    x = rng.uniform(-2, 2, 5000)
    a = DeltaSigmaModulator(0.8).process(x)
    b = DeltaSigmaModulator(0.8).process(np.clip(x, -0.8, 0.8))
    np.testing.assert_array_equal(a, b)


def test_integrators_bounded():
    m = DeltaSigmaModulator()
    rng = np.random.default_rng(1)
    peak = 0.0
    for _ in range(20):
        m.process(rng.uniform(-0.8, 0.8, 10_000))
        peak = max(peak, abs(m.v1), abs(m.v2))
    assert peak < 10


def test_step_matches_block():
    x = np.linspace(-1, 1, 300)
    m = DeltaSigmaModulator()
    np.testing.assert_array_equal([m.step(v) for v in x], DeltaSigmaModulator().process(x))


def test_bad_clip_level():
    with pytest.raises(InvalidArgumentError):
        DeltaSigmaModulator(1.5)


def test_pack_round_trip():
    bits = dsm_modulate(generate_tone(1e-3, 0.5, FS, 0.01)).samples
    blob = pack_bits(bits)
    assert len(blob) == (bits.size + 7) // 8
    np.testing.assert_array_equal(unpack_bits(blob, bits.size), bits)
    assert pack_bits([1, -1, -1, -1, -1, -1, -1, -1]) == b"\x01"


@pytest.mark.parametrize("family", ["bessel-codesign", "butterworth"])
def test_sinad_at_osr_100(family):
    c = PipelineConfig(FS, OUT, 25000.0, wideband_family=family)
    y = pipeline_process(c, generate_tone(1 / F0, 0.5, FS, 0.5)).samples[200:]
    assert sinad_db(y, F0, OUT) >= 60


def test_output_length_and_rate(cfg):
    x = generate_tone(1 / F0, 0.5, FS, 0.01234)
    y = pipeline_process(cfg, x)
    assert len(y) == len(x) // cfg.factor
    assert y.sample_rate == OUT


def test_non_integer_decimation():
    with pytest.raises(InvalidArgumentError):
        PipelineConfig(FS, 3000.0, 25000.0)


def test_rate_mismatch(cfg):
    with pytest.raises(InvalidArgumentError):
        pipeline_process(cfg, Signal(np.zeros(100), 2e6))


def test_bypassed_pipeline_superposition(cfg):
    x1 = generate_tone(1 / F0, 0.3, FS, 0.3)
    x2 = generate_tone(1 / 1301.0, 0.2, FS, 0.3)
    y1 = pipeline_process(cfg, x1, caf_enabled=False).samples[200:]
    y2 = pipeline_process(cfg, x2, caf_enabled=False).samples[200:]
    y12 = pipeline_process(cfg, x1 + x2, caf_enabled=False).samples[200:]
    floor = np.sqrt(np.mean((y1 - sine_fit(y1, F0, OUT)[0]) ** 2))
    err = np.sqrt(np.mean((y12 - y1 - y2) ** 2))
    assert err <= 3 * floor
    assert err < 1e-3 * np.sqrt(np.mean(y12**2))


def test_no_harm_sinad(cfg):
    x = generate_tone(1 / F0, 0.5, FS, 0.5)
    off = sinad_db(pipeline_process(cfg, x, caf_enabled=False).samples[200:], F0, OUT)
    on = sinad_db(pipeline_process(cfg, x, caf_enabled=True).samples[200:], F0, OUT)
    assert abs(on - off) <= 0.5


def test_stages_are_consistent(cfg):
    x = generate_tone(1 / F0, 0.5, FS, 0.05)
    st_ = pipeline_stages(cfg, x, caf_enabled=False)
    assert st_["output"] == decimate(st_["caf"], cfg.decimator, cfg.factor)


def test_codesign_matches_bessel4():
    fc, fs = 25000.0, FS
    a, b = codesign_frontend(fc, fs)
    assert a.is_stable() and b.is_stable()
    ref = design_iir("bessel", "lowpass", 4, fc, fs)
    f = np.linspace(1, fc, 400)
    prod = a.frequency_response(f) * b.frequency_response(f)
    dev = 20 * np.log10(np.abs(prod)) - 20 * np.log10(np.abs(ref.frequency_response(f)))
    assert np.max(np.abs(dev)) < 0.5


def test_codesign_sections_are_distinct():
    a, b = codesign_frontend(25000.0, FS)
    f = np.array([25000.0])
    # lower-Q section first: it droops at the cutoff while the higher-Q one holds up
    assert abs(a.frequency_response(f)[0]) < abs(b.frequency_response(f)[0])


def test_codesign_group_delay_flatter_than_butterworth():
    fc = 25000.0
    a, b = codesign_frontend(fc, FS)
    bw = design_iir("butterworth", "lowpass", 4, fc, FS)
    f = np.linspace(100, fc, 300)
    gd_bessel = a.group_delay(f) + b.group_delay(f)
    gd_bw = bw.group_delay(f)
    spread = lambda g: (g.max() - g.min()) / g.mean()  # noqa: E731
    assert spread(gd_bessel) < spread(gd_bw)


def test_codesign_infeasible_cutoff():
    with pytest.raises(InvalidArgumentError):
        codesign_frontend(60000.0, FS)
    with pytest.raises(InvalidArgumentError):
        codesign_frontend(25000.0, FS, order=6)
