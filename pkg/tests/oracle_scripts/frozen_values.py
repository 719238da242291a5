"""Standalone oracle computations for frozen test values.

Depends only on numpy; it must never import ris_lab. The channel draw order
mirrors the documented generator contract:

    rng = numpy.random.default_rng(seed)
    for vector in (h_h, h_v, g_h, g_v):
        vector = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / sqrt(2) * scale

Run with ``python3 tests/oracle_scripts/frozen_values.py``.
"""
import itertools
import math

import numpy as np


def rayleigh(seed, n, path_loss_db=0.0):
    rng = np.random.default_rng(seed)
    scale = 10 ** (-path_loss_db / 20)
    out = []
    for _ in range(4):
        re = rng.standard_normal(n)
        im = rng.standard_normal(n)
        out.append((re + 1j * im) / math.sqrt(2) * scale)
    return out  # h_h, h_v, g_h, g_v


def gain(vecs, codes, alpha=1.0, background=0j):
    h_h, h_v, g_h, g_v = vecs
    total = complex(background)
    acc = 0j
    for n, code in enumerate(codes):
        hb = code & 1
        vb = code >> 1
        acc += (-1) ** hb * g_h[n] * h_h[n] + (-1) ** vb * g_v[n] * h_v[n]
    total += alpha * acc
    return abs(total) ** 2


def main():
    vecs = rayleigh(42, 4)
    print("cascade seed42 codes[0,1,2,3]:", repr(gain(vecs, [0, 1, 2, 3])))

    vecs = rayleigh(7, 4)
    best, best_codes = -1.0, None
    for codes in itertools.product(range(4), repeat=4):
        g = gain(vecs, codes)
        if g > best:
            best, best_codes = g, codes
    print("exhaustive seed7 2x2:", repr(best), best_codes)

    # Frame simulation: channel seed 5, noise seed 5, codes [0,1,2,3],
    # tx -10 dBm, noise -10 dBm, F=50, 1000 samples per frame, QPSK.
    vecs = rayleigh(5, 4)
    h_h, h_v, g_h, g_v = vecs
    coef = 0j
    for n, code in enumerate([0, 1, 2, 3]):
        coef += (-1) ** (code & 1) * g_h[n] * h_h[n] + (-1) ** (code >> 1) * g_v[n] * h_v[n]
    amp = coef * math.sqrt(10 ** (-10 / 10))
    sigma2 = 10 ** (-10 / 10)
    rng = np.random.default_rng(5)
    means = []
    for _ in range(50):
        m = rng.integers(0, 4, 1000)
        x = np.exp(2j * np.pi * m / 4)
        noise = math.sqrt(sigma2 / 2) * (rng.standard_normal(1000) + 1j * rng.standard_normal(1000))
        r = amp * x + noise
        means.append(np.mean(np.abs(r) ** 2))
    print("frames seed5:", repr(10 * math.log10(sum(means) / len(means))))


if __name__ == "__main__":
    main()
