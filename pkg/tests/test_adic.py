import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal as sps

import oracles
from outliernoise.adic import AdicParams, BasicAdic, FeedbackAdic, adic_fence_source, basic_adic, blank, feedback_adic
from outliernoise.filters import apply_fast, excess_band_filter
from outliernoise.generators import generate_poisson_impulses, generate_rrc_signal, generate_thermal, generate_tone
from outliernoise.robust import hampel_oracle
from outliernoise.signal import InvalidArgumentError, Signal

FS = 64000.0


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def test_blank_examples():
    assert blank(0.5, -1.0, 1.0) == 0.5
    assert blank(2.0, -1.0, 1.0) == 0.0
    assert blank(1.0, -1.0, 1.0) == 1.0
    assert blank(-1.0, -1.0, 1.0) == -1.0
    np.testing.assert_array_equal(blank(np.array([-2.0, 0.1, 3.0]), -1, 1), [0.0, 0.1, 0.0])
    with pytest.raises(InvalidArgumentError):
        blank(0.0, 1.0, -1.0)


def test_basic_adic_replaces_impulse_with_dcl():
    x = np.sin(np.arange(5000) * 0.01)
    x[3000] = 40.0
    y, tr = BasicAdic(warmup=1024).process(x, trace=True)
    assert y[3000] == tr["dcl"][3000]
    inside = ~tr["clipped"]
    assert np.array_equal(y[inside], x[inside])
    assert tr["clipped"][3000]


def test_basic_adic_chirp_against_hampel():
    n = 200_000
    t = np.arange(n) / FS
    chirp = Signal(np.sin(2 * np.pi * (50 * t + 100 * t**2)), FS)
    imp = generate_poisson_impulses(n / FS, 200.0, 5e-4, FS, 1)
    x = chirp + imp
    # trackers must be slower than the chirp itself: time constant IQR / step >> one cycle
    y, tr = basic_adic(x, warmup=4096, step=2e-4, trace=True)
    w = slice(4096, None)
    hit = imp.samples[w] != 0
    # chirp fences sit near +-2.8; impulses clearly beyond them are all replaced
    big = np.abs(x.samples[w]) > 4.0
    assert np.all(tr["clipped"][w][big])
    assert not np.any(tr["clipped"][w][~hit])
    h = hampel_oracle(x, 31).samples
    assert rms((y.samples - h)[w]) <= 0.1 * rms(x.samples[w])


def test_basic_adic_excess_band_against_hampel():
    # matched thresholds: beta = 3 puts the fence at (0.674 + 3 * 1.349) sigma = 4.72 sigma
    n = 200_000
    eb = excess_band_filter((0.0, 1250.0), 20000.0, FS)
    mix = (
        generate_rrc_signal(1000.0, n / FS, FS, 2)
        + generate_thermal(n / FS, 0.01, FS, 3)
        + generate_poisson_impulses(n / FS, 50.0, 1.5e-4, FS, 4)
    )
    d = apply_fast(eb, mix).samples
    y = basic_adic(Signal(d, FS), warmup=4096, beta=3.0).samples
    h = hampel_oracle(d, 255, oracles.GAUSS_Q3 * 7)
    w = slice(4096, None)
    assert rms((y - h)[w]) <= 0.1 * rms(d[w])


def test_feedback_passthrough_is_bit_exact():
    x = generate_thermal(0.2, 1.0, FS, 0).samples
    y, tr = FeedbackAdic(AdicParams(tau=1e-3, beta=3.0, warmup=2048), FS).process(x, trace=True)
    keep = ~tr.clipped
    assert np.array_equal(y[keep], x[keep])


def test_feedback_outlier_holds_chi():
    params = AdicParams(tau=1e-3, fences=(-1.0, 1.0))
    x = np.zeros(100)
    x[50:53] = 10.0
    y, tr = FeedbackAdic(params, FS).process(x, trace=True)
    assert np.all(tr.clipped[50:53])
    assert np.all(y[50:53] == tr.chi[50:53])
    assert tr.chi[50] == tr.chi[51] == tr.chi[52] == tr.chi[53]


def test_feedback_tau_precondition():
    with pytest.raises(InvalidArgumentError):
        FeedbackAdic(AdicParams(tau=1.0 / FS), FS)
    with pytest.raises(InvalidArgumentError):
        AdicParams(tau=0.0)


def test_chi_is_first_order_lowpass_without_fences():
    fc = 100.0
    tau = 1.0 / (2 * math.pi * fc)
    x = generate_tone(1.0 / fc, 1.0, FS, 2.0).samples
    params = AdicParams(tau=tau, fences=(-np.inf, np.inf))
    y, tr = FeedbackAdic(params, FS).process(x, trace=True)
    assert np.array_equal(y, x)
    a = 1.0 / (tau * FS)
    ref = sps.lfilter([0.0, a], [1.0, -(1.0 - a)], x)
    np.testing.assert_allclose(tr.chi, ref, rtol=0, atol=1e-12)
    tail = slice(int(FS), None)
    ratio_db = 20 * np.log10(rms(tr.chi[tail]) / rms(x[tail]))
    assert ratio_db == pytest.approx(-3.01, abs=0.2)


def test_external_fences_reproduce_blank():
    params = adic_fence_source("external", (-1.0, 1.0), tau=1e-3)
    x = np.random.default_rng(1).standard_normal(5000) * 0.8
    y, tr = FeedbackAdic(params, FS).process(x, trace=True)
    violated = blank(tr.u, -1.0, 1.0) != tr.u
    assert np.array_equal(tr.clipped, violated | ((tr.u == 0) & False))
    assert np.all(tr.alpha_minus == -1.0) and np.all(tr.alpha_plus == 1.0)


def test_fence_source_errors():
    with pytest.raises(InvalidArgumentError):
        adic_fence_source("external", (1.0, -1.0), tau=1e-3)
    with pytest.raises(InvalidArgumentError):
        adic_fence_source("external", None, tau=1e-3)
    with pytest.raises(InvalidArgumentError):
        adic_fence_source("bogus", tau=1e-3)


def test_self_tracked_fences_settle_on_gaussian():
    # a tiny tau keeps chi near zero, so u is the Gaussian input itself
    x = generate_thermal(400_000 / FS, 1.0, FS, 5).samples
    params = AdicParams(tau=1.0, beta=1.5, step=0.002, warmup=1)
    _, tr = FeedbackAdic(params, FS).process(x, trace=True)
    late = slice(200_000, None)
    assert np.mean(tr.alpha_plus[late]) == pytest.approx(oracles.GAUSS_FENCE_1P5, rel=0.15)
    assert np.mean(tr.alpha_minus[late]) == pytest.approx(-oracles.GAUSS_FENCE_1P5, rel=0.15)


def test_wider_beta_clips_less():
    x = (generate_thermal(1.0, 1.0, FS, 6) + generate_poisson_impulses(1.0, 500.0, 1e-4, FS, 7)).samples
    rates = []
    for beta in (1.0, 1.5, 2.0, 3.0):
        _, tr = FeedbackAdic(AdicParams(tau=1e-3, beta=beta, warmup=4096), FS).process(x, trace=True)
        rates.append(tr.clipped.mean())
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert rates[0] > rates[-1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.5, 4.0), st.floats(10.0, 3000.0), st.booleans())
def test_intermittency(seed, beta, lam, freeze):
    x = (generate_thermal(0.1, 1.0, FS, seed) + generate_poisson_impulses(0.1, lam, 2e-4, FS, seed + 1)).samples
    params = AdicParams(tau=2e-4, beta=beta, warmup=512, track_during_clip=not freeze)
    y, tr = FeedbackAdic(params, FS).process(x, trace=True)
    violated = (tr.u < tr.alpha_minus) | (tr.u > tr.alpha_plus)
    assert np.array_equal(y != x, violated)


@pytest.mark.parametrize("beta", [3.0, 3.5, 4.0])
def test_no_harm_on_gaussian(beta):
    x = generate_thermal(1e6 / FS, 1.0, FS, 8).samples
    w = 8192
    y, tr = FeedbackAdic(AdicParams(tau=1e-3, beta=beta, warmup=w), FS).process(x, trace=True)
    assert tr.clipped[w:].mean() <= 0.005
    assert rms(y[w:] - x[w:]) <= 0.01 * rms(x[w:])


def test_idempotent_on_clean_band_limited_input():
    x = generate_rrc_signal(1000.0, 2.0, FS, 9)
    params = AdicParams(tau=1.0 / (2 * math.pi * 4000.0), beta=5.0, warmup=8192)
    once, tr1 = feedback_adic(x, params, trace=True)
    twice, tr2 = feedback_adic(once, params, trace=True)
    assert not np.any(tr2.clipped & ~tr1.clipped)
    assert once == twice


def test_warmup_is_passthrough_and_chunking_is_exact():
    x = (generate_thermal(0.2, 1.0, FS, 10) + generate_poisson_impulses(0.2, 300.0, 1e-3, FS, 11)).samples
    params = AdicParams(tau=1e-3, warmup=3000)
    a = FeedbackAdic(params, FS)
    whole = a.process(x)
    assert np.array_equal(whole[:3000], x[:3000])
    b = FeedbackAdic(params, FS)
    parts = [b.process(x[i:i + 777]) for i in range(0, x.size, 777)]
    assert np.array_equal(np.concatenate(parts), whole)


def test_trace_csv(tmp_path):
    _, tr = feedback_adic(Signal(np.linspace(-1, 1, 20), FS), AdicParams(tau=1e-3, fences=(-0.5, 0.5)), trace=True)
    tr.to_csv(tmp_path / "t.csv", FS)
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,x,u,alpha_minus,alpha_plus,chi,clipped"
