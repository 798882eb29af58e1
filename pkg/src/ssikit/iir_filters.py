"""Recursive (IIR) evaluation of impedance reaction forces.

Filters use ``H(z) = sum b_p z^-p / (1 + sum a_p z^-p)`` so that
``R[n] = sum b_p u[n-p] - sum a_p R[n-p]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter


class SingularNormalSystemError(np.linalg.LinAlgError):
    pass


class RepeatedPoleError(ValueError):
    pass


MAX_ROOT_DEGREE = 64


def _roots(coeffs):
    c = np.asarray(coeffs, dtype=complex)
    if c.size - 1 > MAX_ROOT_DEGREE:
        raise ValueError(f"polynomial degree above {MAX_ROOT_DEGREE}")
    return np.roots(c)


@dataclass(frozen=True)
class IirFilter:
    b: np.ndarray
    a: np.ndarray
    dt: float = 1.0
    condition: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if a.size < 1:
            raise ValueError("the filter needs at least one feedback coefficient")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def denominator(self):
        return np.r_[1.0, self.a]

    @property
    def poles(self):
        return _roots(self.denominator)

    @property
    def stable(self):
        return bool(np.all(np.abs(self.poles) < 1))

    def response(self, Omega):
        """Frequency response at discrete-time frequencies ``Omega`` (rad/sample)."""
        z = np.exp(-1j * np.asarray(Omega, dtype=float))
        num = np.polynomial.polynomial.polyval(z, self.b)
        den = np.polynomial.polynomial.polyval(z, self.denominator)
        return num / den

    def response_omega(self, omega):
        """Frequency response at physical frequencies (rad/s)."""
        return self.response(np.asarray(omega, dtype=float) * self.dt)

    def impulse_response(self, n):
        x = np.zeros(n)
        x[0] = 1.0
        return lfilter(self.b, self.denominator, x)

    def to_text(self):
        fmt = lambda v: " ".join(f"{x:.17g}" for x in v)  # noqa: E731
        return f"# dt {self.dt!r}\nb: {fmt(self.b)}\na: {fmt(self.a)}\n"

    @classmethod
    def from_text(cls, text):
        dt, b, a = 1.0, None, None
        for line in text.splitlines():
            s = line.strip()
            if s.startswith("#"):
                parts = s[1:].split()
                if len(parts) == 2 and parts[0] == "dt":
                    dt = float(parts[1])
            elif s.startswith("b:"):
                b = [float(x) for x in s[2:].split()]
            elif s.startswith("a:"):
                a = [float(x) for x in s[2:].split()]
        if b is None or a is None:
            raise ValueError("missing 'b:' or 'a:' line")
        return cls(b, a, dt)


def iir_force(filt: IirFilter, u_history, R_history):
    """Next output of the recursion given inputs up to ``u[n]`` (last entry)
    and past outputs ``R[0..n-1]``."""
    u = np.asarray(u_history, dtype=float)
    R = np.asarray(R_history, dtype=float)
    n = u.size - 1
    out = 0.0
    for p, bp in enumerate(filt.b):
        if n - p < 0:
            break
        out += bp * u[n - p]
    for p, ap in enumerate(filt.a, start=1):
        if n - p < 0 or n - p >= R.size:
            break
        out -= ap * R[n - p]
    return out


def iir_force_series(filt: IirFilter, u):
    return lfilter(filt.b, filt.denominator, np.asarray(u, dtype=float))


# ---------------------------------------------------------------------------
# exact recursive evaluation from DFT samples

class RecursiveDftEvaluator:
    """One first-order recursion per DFT bin of the sampled regular
    impedance.  The sum over all bins reproduces the circular convolution
    of the inverse DFT kernel with the trapezoid average of the input."""

    def __init__(self, S_samples, dt):
        s = np.asarray(S_samples, dtype=complex)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("need at least 2 samples")
        self.S = s
        self.N = s.size
        self.dt = float(dt)
        omega = 2 * np.pi * np.fft.fftfreq(self.N, self.dt)
        self.z = np.exp(1j * omega * self.dt)
        self.R = np.zeros(self.N, dtype=complex)

    @classmethod
    def from_function(cls, S, n, dt):
        """Samples ``S`` on the ``n``-bin grid with conjugate symmetry so the
        force is real."""
        w = 2 * np.pi * np.arange(n // 2 + 1) / (n * dt)
        half = np.asarray(S(w), dtype=complex)
        full = np.empty(n, dtype=complex)
        full[: n // 2 + 1] = half
        if n % 2 == 0:
            full[n // 2] = half[-1].real
            full[n // 2 + 1:] = np.conj(half[1:-1][::-1])
        else:
            full[n // 2 + 1:] = np.conj(half[1:][::-1])
        return cls(full, dt)

    def reset(self):
        self.R[:] = 0

    def step(self, u_prev, u_now):
        self.R = self.z * self.R + self.S / (2 * self.N) * (u_prev + u_now)
        return float(np.sum(self.R).real)

    def series(self, u):
        """Forces for a whole displacement series starting from rest."""
        self.reset()
        u = np.asarray(u, dtype=float)
        out = np.empty(u.size)
        prev = 0.0
        for n, x in enumerate(u):
            out[n] = self.step(prev, x)
            prev = x
        return out


def recursive_force_step(ev: RecursiveDftEvaluator, u_prev, u_now):
    return ev.step(u_prev, u_now)


# ---------------------------------------------------------------------------
# rational fitting

def _basis(Omega, n):
    return np.exp(-1j * np.multiply.outer(Omega, np.arange(n)))


def fit_iir_least_squares(Omega, S, n_b, n_a, weights=None, dt=1.0, iterations=0) -> IirFilter:
    """Equation-error fit of ``sum b_p e^{-i W p} / (1 + sum a_p e^{-i W p})``
    to samples ``S`` at discrete-time frequencies ``Omega`` in [0, pi).

    Minimizes ``sum w_k |S_k D_k - N_k|^2``, whose real normal equations
    are ``A x = c``.  ``iterations > 0`` repeats the fit with weights
    ``w_k / |D_k|^2`` from the previous denominator, which moves the
    objective towards the output error.
    """
    W = np.asarray(Omega, dtype=float)
    s = np.asarray(S, dtype=complex)
    if W.size < n_a + n_b + 1:
        raise ValueError("not enough samples for the requested orders")
    if np.any(W < 0) or np.any(W >= np.pi):
        raise ValueError("frequencies must lie in [0, pi)")
    w0 = np.ones(W.size) if weights is None else np.asarray(weights, dtype=float)
    Eb = _basis(W, n_b + 1)
    Ea = _basis(W, n_a + 1)[:, 1:]
    Phi = np.hstack([Eb, -s[:, None] * Ea])
    wt = w0
    for _ in range(int(iterations) + 1):
        x, cond = _solve_weighted(Phi, s, wt)
        den = 1 + Ea @ x[n_b + 1:]
        wt = w0 / np.maximum(np.abs(den) ** 2, 1e-300)
    return IirFilter(x[: n_b + 1], x[n_b + 1:], dt, condition=cond)


def _solve_weighted(Phi, s, wt):
    """Minimizer of the weighted equation error.  The normal matrix
    ``Re(Phi^H W Phi)`` squares the conditioning of the problem, so the
    same minimizer is computed from the stacked real system by SVD."""
    r = np.sqrt(wt)
    P = Phi * r[:, None]
    rhs = s * r
    A = np.vstack([P.real, P.imag])
    c = np.r_[rhs.real, rhs.imag]
    x, _, rank, sv = np.linalg.lstsq(A, c, rcond=None)
    if rank < A.shape[1] or not np.all(np.isfinite(x)):
        raise SingularNormalSystemError("normal system is singular")
    cond = float((sv[0] / sv[-1]) ** 2)
    return x, cond


def fit_error(filt: IirFilter, Omega, S):
    """Equation-error objective of the fit."""
    s = np.asarray(S, dtype=complex)
    z = np.exp(-1j * np.asarray(Omega, dtype=float))
    num = np.polynomial.polynomial.polyval(z, filt.b)
    den = np.polynomial.polynomial.polyval(z, filt.denominator)
    return float(np.sum(np.abs(s * den - num) ** 2))


def stabilize_poles(filt: IirFilter) -> IirFilter:
    """Reflect poles on or outside the unit circle to ``1/conj(p)`` and keep
    the DC magnitude.  Poles exactly on the circle are pulled radially in
    by a relative 1e-9 so the result is strictly stable."""
    p = filt.poles
    bad = np.abs(p) >= 1
    if not bad.any():
        return filt
    q = p.copy()
    q[bad] = 1 / np.conj(p[bad])
    on = np.abs(q) >= 1
    q[on] = q[on] / np.abs(q[on]) * (1 - 1e-9)
    den = np.real(np.poly(q))
    new = IirFilter(filt.b, den[1:], filt.dt, filt.condition)
    g_old = abs(filt.response(0.0))
    g_new = abs(new.response(0.0))
    if g_old > 0 and g_new > 0 and np.isfinite(g_old):
        new = IirFilter(filt.b * g_old / g_new, den[1:], filt.dt, filt.condition)
    return new


def partial_fraction_to_z(poles, residues, dt_hat) -> IirFilter:
    """Rational form of ``sum A_j e^{s_j dt/2} / (1 - e^{s_j dt} z^-1)``."""
    s = np.atleast_1d(np.asarray(poles, dtype=complex))
    A = np.atleast_1d(np.asarray(residues, dtype=complex))
    if s.shape != A.shape:
        raise ValueError("poles and residues must have equal length")
    zp = np.exp(s * dt_hat)
    for i in range(zp.size):
        for j in range(i):
            if abs(zp[i] - zp[j]) <= 1e-10 * max(abs(zp[i]), 1e-300):
                raise RepeatedPoleError("repeated poles are not supported")
    gains = A * np.exp(s * dt_hat / 2)
    num = np.zeros(zp.size, dtype=complex)
    for j in range(zp.size):
        others = np.delete(zp, j)
        num += gains[j] * np.r_[np.poly(others), np.zeros(zp.size - 1 - others.size)]
    den = np.poly(zp)
    for x in (num, den):
        if np.max(np.abs(x.imag), initial=0) > 1e-9 * max(np.max(np.abs(x)), 1.0):
            raise ValueError("poles/residues are not closed under conjugation")
    return IirFilter(num.real, den.real[1:], dt_hat)


def bilinear_sdof_reference(omega_n, xi, dt) -> IirFilter:
    """Tustin discretization of ``(2 xi w s + w^2) / (s^2 + 2 xi w s + w^2)``
    (absolute-acceleration transfer of a base-excited oscillator)."""
    if not omega_n * dt < np.pi:
        raise ValueError("omega_n * dt must be below pi")
    x = 4 * xi * omega_n * dt
    y = (omega_n * dt) ** 2
    den = 4 + x + y
    b = np.array([x + y, 2 * y, -x + y]) / den
    a = np.array([2 * y - 8, 4 - x + y]) / den
    return IirFilter(b, a, dt)


def sdof_frf(omega, omega_n, xi):
    """Continuous-time absolute-acceleration transfer function."""
    s = 1j * np.asarray(omega, dtype=float)
    return (2 * xi * omega_n * s + omega_n**2) / (s**2 + 2 * xi * omega_n * s + omega_n**2)
