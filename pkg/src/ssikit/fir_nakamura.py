"""Delayed stiffness/damping tap representation of an impedance function.

The reaction force is ``F(t) = sum_j k_j u(t - j dt) + c_j v(t - j dt)``
plus an optional instantaneous mass tap ``m0 a(t)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .newmark import NewmarkParams


class SingularSystemError(np.linalg.LinAlgError):
    def __init__(self, msg, condition=np.inf):
        super().__init__(msg)
        self.condition = condition


class MisalignedTapError(ValueError):
    pass


@dataclass(frozen=True)
class FirFilter:
    dt_tap: float
    k_taps: np.ndarray
    c_taps: np.ndarray
    m0: float = 0.0
    condition: float = float("nan")

    def __post_init__(self):
        if not self.dt_tap > 0:
            raise ValueError("dt_tap must be positive")
        k = np.atleast_1d(np.asarray(self.k_taps, dtype=float))
        c = np.atleast_1d(np.asarray(self.c_taps, dtype=float))
        if c.size not in (k.size, k.size - 1):
            raise ValueError("damping taps must match the stiffness taps (or be one shorter)")
        object.__setattr__(self, "k_taps", k)
        object.__setattr__(self, "c_taps", c)

    @property
    def n_taps(self):
        return self.k_taps.size

    def tap(self, j):
        """(k_j, c_j), zero beyond the stored taps."""
        k = self.k_taps[j] if j < self.k_taps.size else 0.0
        c = self.c_taps[j] if j < self.c_taps.size else 0.0
        return k, c

    def scaled_damping(self, factor):
        return FirFilter(self.dt_tap, self.k_taps, self.c_taps * factor, self.m0, self.condition)

    def to_text(self):
        buf = io.StringIO()
        buf.write(f"# dt_tap {self.dt_tap!r}\n")
        if self.m0:
            buf.write(f"# m0 {self.m0!r}\n")
        c = np.r_[self.c_taps, np.zeros(self.n_taps - self.c_taps.size)]
        np.savetxt(buf, np.column_stack([self.k_taps, c]), fmt="%.17g")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text):
        dt = None
        m0 = 0.0
        rows = []
        for line in text.splitlines():
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                parts = s[1:].split()
                if len(parts) == 2 and parts[0] == "dt_tap":
                    dt = float(parts[1])
                elif len(parts) == 2 and parts[0] == "m0":
                    m0 = float(parts[1])
                continue
            rows.append([float(x) for x in s.split()])
        if dt is None:
            raise ValueError("missing dt_tap header")
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        return cls(dt, arr[:, 0], arr[:, 1], m0)


def fir_frequency_grid(f_max, n):
    """``n`` equally spaced frequencies (rad/s) ending at ``f_max`` Hz.
    Zero is excluded since its imaginary equation is identically zero."""
    return 2 * np.pi * np.arange(1, n + 1) * f_max / n


def fir_system(omega, dt_tap, n_taps, mass=False):
    """Stacked real/imaginary coefficient matrix for the tap unknowns
    ``[k_0..k_{N-1}, c_0..c_{N-1} (, m0)]``."""
    w = np.asarray(omega, dtype=float)
    th = np.outer(w, np.arange(n_taps) * dt_tap)
    top = np.hstack([np.cos(th), w[:, None] * np.sin(th)])
    bot = np.hstack([-np.sin(th), w[:, None] * np.cos(th)])
    if mass:
        top = np.hstack([top, -(w**2)[:, None]])
        bot = np.hstack([bot, np.zeros((w.size, 1))])
    return np.vstack([top, bot])


def fit_fir(S, omega, dt_tap=None, n_taps=None, mass=False, cond_limit=1e14) -> FirFilter:
    """Taps reproducing ``S`` at the sample frequencies ``omega`` (rad/s).

    With as many taps as frequencies (and no mass tap) the system is square
    and the reconstruction interpolates the samples; with more samples it
    is solved in the least-squares sense through the normal equations.
    """
    w = np.asarray(omega, dtype=float)
    s = np.asarray(S(w) if callable(S) else S, dtype=complex)
    if n_taps is None:
        n_taps = w.size
    if dt_tap is None:
        dt_tap = 2 * np.pi / np.max(w)
    A = fir_system(w, dt_tap, n_taps, mass)
    rhs = np.r_[s.real, s.imag]
    if A.shape[0] < A.shape[1]:
        raise ValueError("fewer equations than unknowns")
    if A.shape[0] == A.shape[1]:
        cond = np.linalg.cond(A)
        if not cond < cond_limit:
            raise SingularSystemError(f"tap system is singular (condition {cond:.3g})", cond)
        x = np.linalg.solve(A, rhs)
    else:
        N = A.T @ A
        cond = np.linalg.cond(N)
        if not cond < cond_limit:
            raise SingularSystemError(f"normal equations are singular (condition {cond:.3g})",
                                      cond)
        x = np.linalg.solve(N, A.T @ rhs)
    m0 = float(x[-1]) if mass else 0.0
    return FirFilter(dt_tap, x[:n_taps], x[n_taps:2 * n_taps], m0, float(cond))


def fir_reconstruct(filt: FirFilter, omega):
    w = np.asarray(omega, dtype=float)
    tk = np.arange(filt.k_taps.size) * filt.dt_tap
    tc = np.arange(filt.c_taps.size) * filt.dt_tap
    k = np.exp(-1j * np.multiply.outer(w, tk)) @ filt.k_taps
    c = np.exp(-1j * np.multiply.outer(w, tc)) @ filt.c_taps
    return k + 1j * w * c - w**2 * filt.m0


def truncate(filt: FirFilter, rel=1e-3) -> FirFilter:
    """Drop trailing taps whose stiffness and damping fall below ``rel`` of
    the first tap."""
    k0 = abs(filt.k_taps[0]) or 1.0
    c0 = abs(filt.c_taps[0]) if filt.c_taps.size else 1.0
    c0 = c0 or 1.0
    n = filt.n_taps
    while n > 1:
        k, c = filt.tap(n - 1)
        if abs(k) >= rel * k0 or abs(c) >= rel * c0:
            break
        n -= 1
    return FirFilter(filt.dt_tap, filt.k_taps[:n], filt.c_taps[:n], filt.m0, filt.condition)


def fir_force(filt: FirFilter, u_history, v_history, a_now=0.0, dt=None):
    """Reaction force at the last sample of the histories.  ``dt`` is the
    analysis step (defaults to the tap interval)."""
    u = np.asarray(u_history, dtype=float)
    v = np.asarray(v_history, dtype=float)
    dt = filt.dt_tap if dt is None else dt
    ratio = filt.dt_tap / dt
    r = int(round(ratio))
    if r < 1 or abs(ratio - r) > 1e-9 * ratio:
        raise MisalignedTapError("tap interval is not an integer multiple of the analysis step")
    n = u.shape[0] - 1
    f = filt.m0 * a_now
    for j in range(filt.n_taps):
        idx = n - j * r
        if idx < 0:
            break
        k, c = filt.tap(j)
        f = f + k * u[idx] + c * v[idx]
    return f


def fir_force_series(filt: FirFilter, u, v, a=None, dt=None):
    """Force at every sample of the histories."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    dt = filt.dt_tap if dt is None else dt
    ratio = filt.dt_tap / dt
    r = int(round(ratio))
    if r < 1 or abs(ratio - r) > 1e-9 * ratio:
        raise MisalignedTapError("tap interval is not an integer multiple of the analysis step")
    f = np.zeros_like(u)
    n = u.shape[0]
    for j in range(filt.n_taps):
        s = j * r
        if s >= n:
            break
        k, c = filt.tap(j)
        f[s:] += k * u[:n - s] + c * v[:n - s]
    if a is not None:
        f = f + filt.m0 * np.asarray(a, dtype=float)
    return f


# ---------------------------------------------------------------------------
# stability certificate

def _tap_matrices(filters, dofs, n, j):
    Kj = np.zeros((n, n))
    Cj = np.zeros((n, n))
    for flt, d in zip(filters, dofs):
        Kj[d, d], Cj[d, d] = flt.tap(j)
    return Kj, Cj


def fir_operators(M, C, K, filters, dofs, params: NewmarkParams):
    """``H1`` and the list ``[H0_1 .. H0_nj]`` of the tap-coupled Newmark
    recursion ``H1 x[n+1] = sum_j H0_j x[n+1-j]`` with ``x = [u, v, a]``."""
    M, C, K = (np.array(x, dtype=float) for x in (M, C, K))
    n = M.shape[0]
    g, b, dt = params.gamma, params.beta, params.dt
    for flt in filters:
        ratio = flt.dt_tap / dt
        if abs(ratio - 1) > 1e-9:
            raise MisalignedTapError("the certificate needs the tap interval equal to dt")
    Mb, Cb, Kb = M.copy(), C.copy(), K.copy()
    K0, C0 = _tap_matrices(filters, dofs, n, 0)
    Kb += K0
    Cb += C0
    for flt, d in zip(filters, dofs):
        Mb[d, d] += flt.m0
    Kh = Mb / (b * dt**2) + g / (b * dt) * Cb + Kb
    Ch = -Mb / (b * dt) + (1 - g / b) * Cb
    Mh = -(1 / (2 * b) - 1) * Mb + dt * (1 - g / (2 * b)) * Cb
    I = np.eye(n)
    Z = np.zeros((n, n))
    H1 = np.block([[Kh, Z, Z], [-g / (b * dt) * I, I, Z], [-1 / (b * dt**2) * I, Z, I]])
    nj = max(f.n_taps for f in filters) if filters else 1
    H0 = []
    for j in range(1, nj + 1):
        Kj, Cj = _tap_matrices(filters, dofs, n, j)
        if j == 1:
            H = np.block([[Kh - Kb - Kj, -Ch - Cj, -Mh],
                          [-g / (b * dt) * I, (1 - g / b) * I, dt * (1 - g / (2 * b)) * I],
                          [-1 / (b * dt**2) * I, -1 / (b * dt) * I, -(1 / (2 * b) - 1) * I]])
        else:
            H = np.block([[-Kj, -Cj, Z], [Z, Z, Z], [Z, Z, Z]])
        H0.append(H)
    return H1, H0


def fir_stability_certificate(M, C, K, filters, dofs, params: NewmarkParams, horizon_steps=100):
    """Spectral radii of the operators ``A_k`` mapping ``x_0`` to
    ``x_{k+1}`` for ``k = 0 .. n_j + horizon_steps``.

    Returns ``(stable, rho)`` where ``stable`` requires every radius below
    one and a decreasing sequence.
    """
    H1, H0 = fir_operators(M, C, K, filters, dofs, params)
    nj = len(H0)
    try:
        lu = np.linalg.inv(H1)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("H1 is singular") from exc
    G = [lu @ H for H in H0]
    nx = H1.shape[0]
    A = []
    rho = np.empty(nj + horizon_steps + 1)
    for k in range(rho.size):
        # x_{k+1} = sum_j G_j x_{k+1-j}; x_0 is the identity, earlier states are zero
        acc = np.zeros((nx, nx))
        for j in range(1, nj + 1):
            m = k + 1 - j
            if m == 0:
                acc += G[j - 1]
            elif m > 0:
                acc += G[j - 1] @ A[m - 1]
        A.append(acc)
        rho[k] = np.max(np.abs(np.linalg.eigvals(acc)))
    stable = bool(np.all(rho < 1) and np.all(np.diff(rho) < 0))
    return stable, rho


def simulate_fir_recursion(M, C, K, filters, dofs, params: NewmarkParams, x0, n_steps):
    """Free response of the tap-coupled recursion from ``x0``; returns the
    state history of shape (n_steps + 1, 3 n)."""
    H1, H0 = fir_operators(M, C, K, filters, dofs, params)
    G = [np.linalg.solve(H1, H) for H in H0]
    X = np.zeros((n_steps + 1, H1.shape[0]))
    X[0] = x0
    for k in range(n_steps):
        acc = np.zeros(H1.shape[0])
        for j in range(1, len(G) + 1):
            m = k + 1 - j
            if m < 0:
                break
            acc += G[j - 1] @ X[m]
        X[k + 1] = acc
    return X


def fir_newmark_solve(model, filters, dofs, gm, params: NewmarkParams | None = None,
                      newton=(1e-8, 50)):
    """Newmark integration with tap-represented boundary impedances.

    Instantaneous taps join the matrices; delayed taps enter as a force
    computed from the stored boundary history.  The tap interval must be
    an integer multiple of the analysis step.
    """
    from .newmark import (TimeHistory, initial_state, newmark_step_linear,
                          newmark_step_nonlinear)

    params = params or NewmarkParams(gm.dt)
    dofs = list(dofs)
    M, C, K = model.M.copy(), model.C.copy(), model.K.copy()
    steps = []
    for flt, d in zip(filters, dofs):
        k0, c0 = flt.tap(0)
        K[d, d] += k0
        C[d, d] += c0
        M[d, d] += flt.m0
        ratio = flt.dt_tap / params.dt
        r = int(round(ratio))
        if r < 1 or abs(ratio - r) > 1e-9 * ratio:
            raise MisalignedTapError("tap interval is not an integer multiple of the analysis step")
        steps.append(r)
    tm = model.with_matrices(M=M, C=C, K=K)
    load = tm.seismic_load(gm.values)
    n = load.shape[0]
    U = np.zeros((n, tm.n))
    V = np.zeros_like(U)
    A = np.zeros_like(U)
    state = initial_state(tm, load[0])
    U[0], V[0], A[0] = state.u, state.v, state.a
    linear = tm.is_linear
    for i in range(1, n):
        extra = np.zeros(tm.n)
        for flt, d, r in zip(filters, dofs, steps):
            for j in range(1, flt.n_taps):
                idx = i - j * r
                if idx < 0:
                    break
                kj, cj = flt.tap(j)
                extra[d] -= kj * U[idx, d] + cj * V[idx, d]
        if linear:
            state = newmark_step_linear(tm, state, load[i], extra, params)
        else:
            state = newmark_step_nonlinear(tm, state, load[i], extra, params, newton)
        U[i], V[i], A[i] = state.u, state.v, state.a
    return TimeHistory(params.dt, U, V, A, tm.layout.labels)
