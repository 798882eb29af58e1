"""Deterministic synthetic strong-motion record.

The 1940 El Centro record is not redistributed with this package.  In its
place a seeded Kanai-Tajimi / Clough-Penzien filtered noise record with a
Jennings-type envelope is generated: 4000 samples at 0.01 s, in units of g,
scaled to a peak of 0.319 g.
"""

import numpy as np


def synthetic_record(n=4000, dt=0.01, pga=0.319, seed=1940, wg=5 * np.pi, xig=0.6,
                     wf=0.1 * 5 * np.pi, xif=0.6):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n)
    w = 2 * np.pi * np.fft.rfftfreq(n, dt)
    r = (w / wg) ** 2
    kt = (1 + 4 * xig**2 * r) / ((1 - r) ** 2 + 4 * xig**2 * r)
    rf = (w / wf) ** 2
    cp = rf**2 / ((1 - rf) ** 2 + 4 * xif**2 * rf)
    x = np.fft.irfft(np.fft.rfft(noise) * np.sqrt(kt * cp), n)
    t = np.arange(n) * dt
    env = np.where(t < 1.5, (t / 1.5) ** 2, np.where(t < 10.0, 1.0, np.exp(-0.18 * (t - 10.0))))
    x = x * env
    # taper both ends and remove the mean so the record starts and ends at rest
    x -= np.mean(x)
    x[:20] *= np.linspace(0, 1, 20)
    x[-50:] *= np.linspace(1, 0, 50)
    return pga * x / np.max(np.abs(x))


G = 9.806
