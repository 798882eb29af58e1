"""Frequency-domain solution of linear systems with frequency-dependent
matrices, plus the transform, taper, padding and decay helpers used by the
hybrid solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GroundMotion, complex_modes
from .newmark import TimeHistory


class SingularDynamicStiffnessError(np.linalg.LinAlgError):
    pass


@dataclass
class SpectrumHalf:
    df: float
    values: np.ndarray
    n_time: int

    @property
    def omega(self):
        return 2 * np.pi * self.df * np.arange(self.values.shape[0])


def forward_half_fft(x, n_total=None, dt=1.0) -> SpectrumHalf:
    """Half spectrum of ``x`` zero-padded to ``n_total``, scaled by 1/n."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0] if n_total is None else int(n_total)
    if n < x.shape[0]:
        raise ValueError("n_total shorter than the signal")
    X = np.fft.rfft(x, n, axis=0) / n
    return SpectrumHalf(1.0 / (n * dt), X, n)


def inverse_half_fft(X: SpectrumHalf):
    """Real signal of length ``n_time`` from its half spectrum."""
    return np.fft.irfft(np.asarray(X.values) * X.n_time, X.n_time, axis=0)


def pad_length_hint(xi1, omega1, dt):
    """Samples needed for free vibration to fall below 1% of its start."""
    return int(np.ceil(-np.log(0.01) / (dt * xi1 * omega1)))


def decay_extension(y_end, slope_end, n_decay):
    """Cubic over samples ``1..n_decay`` starting from value ``y_end`` and
    per-sample slope ``slope_end`` and ending at zero with zero slope."""
    if n_decay < 2:
        raise ValueError("n_decay must be at least 2")
    y = np.asarray(y_end, dtype=float)
    m = np.asarray(slope_end, dtype=float)
    n = float(n_decay)
    s = np.arange(1, n_decay + 1, dtype=float)
    s = s.reshape((-1,) + (1,) * y.ndim)
    c2 = (-3 * y - 2 * m * n) / n**2
    c3 = (2 * y + m * n) / n**3
    return y + m * s + c2 * s**2 + c3 * s**3


def taper_and_pad(x, dt, irf_length_hint, taper_fraction=0.05, min_taper=16):
    """Blend the last segment of ``x`` to zero with a C1 cubic and append
    ``irf_length_hint`` zeros."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    nt = min(max(int(round(taper_fraction * n)), min_taper), n - 2)
    out = x.copy()
    if nt >= 2:
        k = n - nt - 1
        slope = x[k] - x[k - 1] if k > 0 else np.zeros_like(x[k])
        out[k + 1:] = decay_extension(x[k], slope, nt)
    pad = np.zeros((int(irf_length_hint),) + x.shape[1:])
    return np.concatenate([out, pad], axis=0)


def _eval(mat, w):
    if callable(mat):
        return np.asarray(mat(w))
    return np.broadcast_to(np.asarray(mat), w.shape + np.shape(mat))


def dynamic_stiffness(M, C, K, w, extra=None):
    """``-w^2 M + i w C(w) + K(w) [+ extra(w)]`` for an array of ``w``."""
    w = np.asarray(w, dtype=float)
    D = (-(w**2)[:, None, None] * np.asarray(M)[None] + 1j * w[:, None, None] * _eval(C, w)
         + _eval(K, w))
    if extra is not None:
        D = D + extra(w)
    return D


def default_pad(M, C, K, dt, n):
    Cs = C(np.zeros(1))[0] if callable(C) else C
    Ks = K(np.zeros(1))[0] if callable(K) else K
    try:
        w, xi = complex_modes(np.asarray(M), np.real(Cs), np.real(Ks))
        pos = xi > 0
        hint = pad_length_hint(xi[pos][0], w[pos][0], dt) if pos.any() else n
    except Exception:
        hint = n
    return max(int(hint), 256)


def solve_frequency_domain(M, C, K, L, gm: GroundMotion, n_pad=None, extra=None,
                           labels=(), force=None) -> TimeHistory:
    """Response to ``-M L ag`` (plus an optional external force series of
    shape (nt, n)) by solving every FFT bin.  ``C`` and ``K`` may be arrays
    or callables returning (nw, n, n) stacks."""
    M = np.asarray(M, dtype=float)
    L = np.asarray(L, dtype=float)
    ag = gm.values
    n = ag.size
    dt = gm.dt
    if n_pad is None:
        n_pad = default_pad(M, C, K, dt, n)
    N = n + int(n_pad)
    P = -np.outer(ag, M @ L)
    if force is not None:
        P = P + force
    Ph = forward_half_fft(P, N, dt)
    w = Ph.omega
    D = dynamic_stiffness(M, C, K, w, extra)
    rhs = Ph.values.astype(complex)
    # a DOF without static stiffness (e.g. an internal dashpot-coupled
    # inertia) makes bin 0 singular; its w -> 0 limit is used instead
    if w.size > 1 and np.linalg.cond(D[0]) > 1e14:
        D[0] = dynamic_stiffness(M, C, K, np.array([1e-9 * w[1]]), extra)[0]
    try:
        U = np.linalg.solve(D, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        bad = [k for k in range(w.size) if np.linalg.cond(D[k]) > 1e15]
        raise SingularDynamicStiffnessError(
            f"singular dynamic stiffness at bin {bad[0] if bad else '?'}") from exc
    u = inverse_half_fft(SpectrumHalf(Ph.df, U, N))[:n]
    v = inverse_half_fft(SpectrumHalf(Ph.df, 1j * w[:, None] * U, N))[:n]
    a = inverse_half_fft(SpectrumHalf(Ph.df, -(w**2)[:, None] * U, N))[:n]
    return TimeHistory(dt, u, v, a, tuple(labels))
