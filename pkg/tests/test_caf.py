import math

import numpy as np
import pytest

from outliernoise.adic import AdicParams, basic_adic
from outliernoise.caf import (
    Caf,
    ChainVariant,
    bandstop_prefilter_process,
    caf_process,
    default_caf_config,
    derivative_chain_process,
    derivative_gain,
    leak_coefficient,
    shared_band_process,
)
from outliernoise.filters import (
    apply,
    apply_fast,
    design_fir_bandpass,
    design_fir_lowpass,
    design_iir,
    design_rrc,
    make_complement,
)
from outliernoise.generators import (
    generate_poisson_impulses,
    generate_rrc_signal,
    generate_square,
    generate_thermal,
    generate_tone,
)
from outliernoise.robust import peakedness_dbg
from outliernoise.signal import InvalidArgumentError, Signal

FS = 64000.0
B0 = 1000.0


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


@pytest.fixture(scope="module")
def cfg():
    return default_caf_config(B0, FS)


def test_bypass_is_pure_delay(cfg):
    x = generate_thermal(1.0, 1.0, FS, 0) + generate_poisson_impulses(1.0, 300.0, 1e-3, FS, 1)
    y = caf_process(cfg.bypassed(), x)
    assert np.max(np.abs(y.samples - x.delayed(cfg.delay).samples)) < 1e-12


@pytest.mark.parametrize("seed", [1, 2])
def test_clean_signal_passes_unchanged(seed):
    # band edge clears the RRC roll-off, so the excess band holds only stopband leakage
    cfg = default_caf_config(B0, FS, band_edge=1.5)
    x = generate_rrc_signal(B0, 2.0, FS, seed)
    y, taps = caf_process(cfg, x, taps=True)
    w = cfg.delay + cfg.adic.warmup
    assert not taps.clipped[w:].any()
    assert rms(y.samples[w:] - x.delayed(cfg.delay).samples[w:]) <= 1e-9


def test_rate_mismatch(cfg):
    with pytest.raises(InvalidArgumentError):
        caf_process(cfg, Signal(np.zeros(100), 48000.0))


def test_single_impulse_reduction(cfg):
    fe = design_iir("bessel", "lowpass", 2, 10 * B0, FS)
    mf = design_rrc(B0, 0.25, 32, FS)
    dur = 1.5
    base = generate_rrc_signal(B0, dur, FS, 3) + generate_thermal(dur, 0.01, FS, 4)
    imp = np.zeros(len(base))
    imp[int(1.0 * FS)] = 1e-3 * FS  # area 1e-3
    clean = apply(fe, base)
    noisy = apply(fe, base + Signal(imp, FS))
    ref = apply_fast(mf, caf_process(cfg.bypassed(), clean)).samples
    lin = apply_fast(mf, caf_process(cfg.bypassed(), noisy)).samples
    nl = apply_fast(mf, caf_process(cfg, noisy)).samples
    w = slice(int(0.9 * FS), None)
    reduction = 20 * np.log10(rms(lin[w] - ref[w]) / rms(nl[w] - ref[w]))
    assert reduction >= 10


def test_streaming_caf_matches_one_shot(cfg):
    x = (generate_rrc_signal(B0, 0.5, FS, 5) + generate_poisson_impulses(0.5, 200.0, 1e-3, FS, 6)).samples
    whole = caf_process(cfg, Signal(x, FS)).samples
    c = Caf(cfg)
    parts = [c.process(x[i:i + 5000]) for i in range(0, x.size, 5000)]
    np.testing.assert_allclose(np.concatenate(parts), whole, atol=1e-9)


def test_spectral_inversion_of_highpass_response():
    # a linear-phase highpass response sitting in a noise floor; the ADiC removes its central tap
    lp = design_fir_lowpass(B0, FS, 500.0)
    h = make_complement(lp).complement.taps
    noise = generate_thermal(1.0, 0.02**2, FS, 1).samples
    k = 40000
    x = noise.copy()
    x[k:k + h.size] += h
    y = basic_adic(Signal(x, FS), warmup=8192).samples
    r = (y - noise)[k:k + h.size]
    mag_r = np.abs(np.fft.rfft(r, 8192))
    mag_lp = np.abs(np.fft.rfft(lp.taps, 8192))
    mag_h = np.abs(np.fft.rfft(h, 8192))
    assert np.corrcoef(mag_h, mag_lp)[0, 1] < -0.9
    assert np.corrcoef(mag_r, mag_lp)[0, 1] >= 0.9


def test_leak_and_variant_validation():
    assert leak_coefficient(10.0, FS) == pytest.approx(1 - 2 * math.pi * 10 / FS)
    with pytest.raises(InvalidArgumentError):
        leak_coefficient(FS, FS)
    with pytest.raises(InvalidArgumentError):
        ChainVariant("plain-caf", leak=0.0)
    with pytest.raises(InvalidArgumentError):
        ChainVariant("bandstop-then-caf")
    assert ChainVariant("derivative-caf-integrate", leak=0.99).leak == 0.99


@pytest.mark.parametrize("stage", ["none", "caf"])
def test_derivative_chain_unit_gain_for_tone(stage):
    fs, T = 1000.0, 1.0
    f0 = 3.0 / T
    rho = leak_coefficient(0.01 * f0, fs)
    x = generate_tone(T / 3, 1.0, fs, 60.0)
    st = None if stage == "none" else default_caf_config(1.0, fs, band_edge=4.0, transition=1.0, corner=20.0, beta=3.0,
                                                        warmup=4000)
    y = derivative_chain_process(st, x, rho, f0).samples
    tail = slice(int(40 * fs), None)
    gain_db = 20 * np.log10(rms(y[tail]) / rms(x.samples[tail]))
    assert gain_db == pytest.approx(0.0, abs=0.1)
    assert abs(derivative_gain(f0, fs, rho)) > 0


def test_square_wave_derivative_is_impulsive():
    sq = generate_square(1.0, 1.0, 1000.0, 20.0)
    assert peakedness_dbg(np.diff(sq.samples)) > 10


def test_bandstop_prefilter_is_stage_after_bandstop(cfg):
    bs = make_complement(design_fir_bandpass(1750.0, 4250.0, FS, 500.0, 80.0)).complement
    x = generate_thermal(0.5, 1.0, FS, 7)
    y = bandstop_prefilter_process(cfg, bs, x)
    assert y == caf_process(cfg, apply_fast(bs, x))


def test_shared_band_is_bare_adic():
    p = AdicParams(tau=1e-3, beta=3.0, warmup=2048)
    x = generate_thermal(0.2, 1.0, FS, 8)
    from outliernoise.adic import feedback_adic

    assert shared_band_process(p, x) == feedback_adic(x, p)
