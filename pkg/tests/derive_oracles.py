"""Recompute the frozen values in oracles.py from closed forms (mpmath only).

Run ``python3 tests/derive_oracles.py``; nothing here imports the package.
"""

import mpmath as mp

mp.mp.dps = 30


def gaussian_quartile():
    return mp.sqrt(2) * mp.erfinv(mp.mpf(1) / 2)


def bessel2_pileup_ratio():
    """lambda_c / f_3dB-cutoff for the analog 2nd-order Bessel, H(s) = 3 / (s^2 + 3 s + 3).

    The prototype is rescaled so that |H| = 1/sqrt(2) at w = 1 (cutoff 1 rad/s).
    """
    mag2 = lambda w, k: 9 / ((3 - (w / k) ** 2) ** 2 + (3 * w / k) ** 2)
    k = mp.findroot(lambda k: mag2(1, k) - mp.mpf(1) / 2, 1.3)
    # poles of 3 / (s^2 + 3 s + 3) scaled by k: s = k (-3/2 +- j sqrt(3)/2)
    a, b = 1.5 * k, mp.sqrt(3) / 2 * k
    h = lambda t: mp.exp(-a * t) * mp.sin(b * t)  # impulse response up to a constant
    tpk = mp.atan(b / a) / b
    half = h(tpk) / 2
    t1 = mp.findroot(lambda t: h(t) - half, tpk / 3)
    t2 = mp.findroot(lambda t: h(t) - half, 3 * tpk)
    fwhm = t2 - t1  # seconds for a 1 rad/s cutoff
    w_half = mp.findroot(lambda w: mag2(w, k) - mp.mpf(1) / 4, 1.7)
    f_half = w_half / (2 * mp.pi)
    f_3db = 1 / (2 * mp.pi)
    tbp = fwhm * f_half
    return f_3db / tbp / f_3db, tbp  # lambda_c in units of the cutoff frequency


if __name__ == "__main__":
    z = gaussian_quartile()
    print("GAUSS_Q3 =", mp.nstr(z, 17))
    print("GAUSS_FENCE_1P5 =", mp.nstr(z * (1 + 2 * mp.mpf("1.5")), 17))
    for name, k in (("SINE", mp.mpf(3) / 2), ("SQUARE", 1), ("TRIANGLE", mp.mpf(9) / 5)):
        print(f"PEAKEDNESS_{name} =", mp.nstr(10 * mp.log10(k / 3), 17))
    ratio, tbp = bessel2_pileup_ratio()
    print("BESSEL2_LAMBDA_C_OVER_CUTOFF =", mp.nstr(ratio, 17))
    print("BESSEL2_TBP =", mp.nstr(tbp, 17))
    print("GAUSSIAN_TBP =", mp.nstr(2 * mp.log(2) / mp.pi, 17))
    print("CAPACITY_10DB =", mp.nstr(mp.log(11, 2), 17))
