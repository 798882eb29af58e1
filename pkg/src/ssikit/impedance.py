"""Impedance (dynamic stiffness) functions: analytical families, sampled
tables, singular/regular decomposition and harmonic extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .model import LumpedFoundation


class OutOfRangeError(ValueError):
    pass


class GridTooCoarseError(ValueError):
    pass


class DegenerateFitError(ValueError):
    pass


class ImpedanceFunction:
    """Complex dynamic stiffness ``S(w) = k(w) + i w c(w)``.

    Built either from a closure of non-negative ``w`` or from a sampled
    table.  Negative frequencies are answered by conjugate symmetry.  Tables
    are interpolated with natural cubic splines on the real and imaginary
    parts; ``nearest=True`` maps each query to the closest table frequency.
    """

    def __init__(self, func: Callable | None = None, omega=None, values=None, nearest=False):
        self._func = func
        self.nearest = nearest
        if func is None:
            w = np.asarray(omega, dtype=float)
            s = np.asarray(values, dtype=complex)
            if w.ndim != 1 or w.shape != s.shape:
                raise ValueError("omega and values must be matching 1-D arrays")
            if w.size < 4:
                raise ValueError("a table needs at least 4 points")
            if np.any(np.diff(w) <= 0):
                raise ValueError("table frequencies must be strictly increasing")
            self.omega, self.values = w, s
            self._re = CubicSpline(w, s.real, bc_type="natural")
            self._im = CubicSpline(w, s.imag, bc_type="natural")
        else:
            self.omega = self.values = None

    @classmethod
    def table(cls, omega, values, nearest=False):
        return cls(None, omega, values, nearest)

    @property
    def kind(self):
        return "analytical-closure" if self._func is not None else "sampled-table"

    def _eval_pos(self, w):
        if self._func is not None:
            return np.asarray(self._func(w), dtype=complex)
        if self.nearest:
            idx = np.clip(np.searchsorted(self.omega, w), 1, self.omega.size - 1)
            left = self.omega[idx - 1]
            idx = np.where(np.abs(w - left) <= np.abs(self.omega[idx] - w), idx - 1, idx)
            return self.values[idx]
        lo, hi = self.omega[0], self.omega[-1]
        span = hi - lo
        if np.any(w < lo - 1e-12 * span) or np.any(w > hi + 1e-12 * span):
            raise OutOfRangeError(f"frequency outside table range [{lo}, {hi}] rad/s")
        w = np.clip(w, lo, hi)
        return self._re(w) + 1j * self._im(w)

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        s = self._eval_pos(np.abs(w))
        return np.where(w < 0, np.conj(s), s)


# ---------------------------------------------------------------------------
# analytical families

def rod_exponential_area(a0):
    """Dimensionless stiffness of a rod with exponentially growing area."""
    a0 = np.abs(np.asarray(a0, dtype=float))
    s = np.sqrt(np.abs(1.0 - 4.0 * a0**2))
    return np.where(a0 <= 0.5, 0.5 * (1.0 + s) + 0j, 0.5 + 0.5j * s)


def rod_exponential_area_regular(a0):
    a0 = np.asarray(a0, dtype=float)
    return rod_exponential_area(a0) - 0.5 - 1j * a0


def rod_exponential_area_kernel(t_hat):
    """Regular-part impulse response ``J1(t/2) / (2 t)`` (value 1/8 at 0)."""
    from scipy.special import j1

    t = np.asarray(t_hat, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, j1(safe / 2) / (2 * safe), 0.125)


def rod_elastic_foundation(a0):
    """Dimensionless stiffness of a rod on an elastic foundation.  Returns
    ``(total, regular)`` with ``regular = total - i a0``."""
    a0 = np.asarray(a0, dtype=float)
    a = np.abs(a0)
    s = np.sqrt(np.abs(a**2 - 1.0))
    total = np.where(a < 1.0, s + 0j, 1j * s)
    total = np.where(a0 < 0, np.conj(total), total)
    return total, total - 1j * a0


def rod_elastic_foundation_kernel(t_hat):
    """Regular-part impulse response ``J1(t) / t`` (value 1/2 at 0)."""
    from scipy.special import j1

    t = np.asarray(t_hat, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, j1(safe) / safe, 0.5)


@dataclass(frozen=True)
class VeletsosVerbicRocking:
    K_st: float
    b1: float
    b2: float
    b3: float
    r: float
    Vs: float

    def __post_init__(self):
        if not self.b2 > 0:
            raise ValueError("b2 must be positive")

    def dimensionless(self, a0):
        a0 = np.asarray(a0, dtype=float)
        x = self.b2 * a0
        return self.K_st * (1 - self.b1 * x**2 / (1 + 1j * x) - self.b3 * a0**2)

    def __call__(self, omega):
        return self.dimensionless(np.asarray(omega, dtype=float) * self.r / self.Vs)


def rocking_if_from_cone(found: LumpedFoundation, omega):
    """Rocking impedance of the cone model with the internal DOF condensed
    out (foundation inertia excluded)."""
    w = np.asarray(omega, dtype=float)
    return found.k_rock(w) + 1j * w * found.c_rock(w)


def sway_if_from_cone(found: LumpedFoundation, omega):
    w = np.asarray(omega, dtype=float)
    return found.k0h + 1j * w * found.c0h


def cone_impedances(found: LumpedFoundation):
    return (ImpedanceFunction(lambda w: sway_if_from_cone(found, w)),
            ImpedanceFunction(lambda w: rocking_if_from_cone(found, w)))


# ---------------------------------------------------------------------------
# singular / regular decomposition

@dataclass(frozen=True)
class SingularPart:
    m_inf: float
    c_inf: float
    k_inf: float
    s0: float

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        return self.k_inf - self.m_inf * w**2 + 1j * w * self.c_inf


def singular_decompose(S, omega_grid, check=True) -> SingularPart:
    """Singular part evaluated at the top of a uniform grid, and the value
    at time zero of the regular part's impulse response.

    ``S`` may be a callable or an array of samples on ``omega_grid``.
    """
    w = np.asarray(omega_grid, dtype=float)
    s = np.asarray(S(w) if callable(S) else S, dtype=complex)
    if w.size < 3:
        raise GridTooCoarseError("need at least 3 frequencies")
    dw = w[1] - w[0]
    if not np.allclose(np.diff(w), dw, rtol=1e-8, atol=0):
        raise ValueError("singular_decompose needs a uniform grid")
    if check and w.size >= 7:
        d2 = np.real(s[-5:] - 2 * s[-6:-1] + s[-7:-2])
        scale = np.max(np.abs(s.real[-7:])) + 1e-300
        big = np.abs(d2) > 1e-9 * scale
        if big.any() and np.unique(np.sign(d2[big])).size > 1:
            raise GridTooCoarseError("second difference changes sign near the top of the grid")
    d2 = s[-1] - 2 * s[-2] + s[-3]
    m_inf = -0.5 * np.real(d2) / dw**2
    c_inf = np.imag(s[-1] / w[-1])
    k_inf = np.real(s[-1] + m_inf * w[-1] ** 2)
    sr = s - (k_inf - m_inf * w**2 + 1j * w * c_inf)
    s0 = 2 / np.pi * np.sum(np.real(sr)) * dw
    return SingularPart(float(m_inf), float(c_inf), float(k_inf), float(s0))


# ---------------------------------------------------------------------------
# harmonic extraction

def _phasor(x, t, omega):
    A = np.column_stack([np.sin(omega * t), np.cos(omega * t), np.ones_like(t)])
    cs = np.linalg.lstsq(A, x, rcond=None)[0]
    return cs[0] + 1j * cs[1]


def extract_impedance_harmonic(force, disp, omega, dt, settle_fraction=0.5):
    """Steady-state impedance from a harmonic test.  Both series are fitted
    with ``a sin(wt) + b cos(wt)`` over the tail after ``settle_fraction``
    of the record; the ratio of the phasors is ``(A/D) e^{-i phi}``."""
    f = np.asarray(force, dtype=float)
    u = np.asarray(disp, dtype=float)
    n0 = int(np.floor(settle_fraction * f.size))
    t = np.arange(f.size)[n0:] * dt
    if (t[-1] - t[0]) * omega / (2 * np.pi) < 3 - 1e-9:
        raise DegenerateFitError("fewer than 3 cycles after the settling segment")
    F = _phasor(f[n0:], t, omega)
    U = _phasor(u[n0:], t, omega)
    if abs(U) <= 1e-14 * max(np.max(np.abs(u)), 1e-300) or abs(U) == 0:
        raise DegenerateFitError("displacement amplitude is negligible")
    return F / U
