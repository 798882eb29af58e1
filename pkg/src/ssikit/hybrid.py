"""Hybrid time/frequency solvers.

HTFD integrates the model in time with a frequency-independent reference
substructure at the boundary DOFs and corrects the frequency dependence
with a pseudo-force computed in the frequency domain.  HFTD solves an
equivalent linear model in the frequency domain and corrects the
superstructure nonlinearity with a pseudo-force computed in time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .freq_solver import (decay_extension, default_pad, dynamic_stiffness, forward_half_fft,
                          inverse_half_fft, SpectrumHalf)
from .impedance import singular_decompose
from .model import GroundMotion, NonConvergenceError, SystemModel
from .newmark import NewmarkParams, TimeHistory, initial_state, integrate, spring_arrays

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReferenceSubstructure:
    M_ref: np.ndarray
    C_ref: np.ndarray
    K_ref: np.ndarray

    def __post_init__(self):
        for name in ("M_ref", "C_ref", "K_ref"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), float)))
        n = self.M_ref.shape[0]
        for x in (self.M_ref, self.C_ref, self.K_ref):
            if x.shape != (n, n):
                raise ValueError("reference matrices must be square and equally sized")

    def __call__(self, w):
        w = np.asarray(w, dtype=float)[:, None, None]
        return -(w**2) * self.M_ref + 1j * w * self.C_ref + self.K_ref


@dataclass(frozen=True)
class HtfdConfig:
    window_steps: int
    tol: float = 1e-3
    max_iter: int = 1000
    n_decay: int = 100
    n_zero: int = 100
    newmark: NewmarkParams = None
    newton: tuple = (1e-8, 50)
    divergence_limit: float = 1e8

    def __post_init__(self):
        if self.window_steps < 1:
            raise ValueError("window_steps must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class HybridResult:
    history: TimeHistory
    pseudo_force: np.ndarray
    converged: bool
    diagnostics: list = field(default_factory=list)  # (window, iteration, eps)

    @property
    def iterations(self):
        return len(self.diagnostics)


def _diag_stack(parts, attr):
    return np.diag([getattr(p, attr) for p in parts])


def singular_matrices(parts):
    """Diagonal (M_inf, C_inf, K_inf, S0) matrices from per-DOF singular parts."""
    return tuple(_diag_stack(parts, a) for a in ("m_inf", "c_inf", "k_inf", "s0"))


def htfd_reference_damping(sing, M_ref, K_ref, params: NewmarkParams):
    """Reference damping that makes the iteration matrix vanish."""
    Mi, Ci, Ki, S0 = singular_matrices(sing) if isinstance(sing, (list, tuple)) else (
        np.atleast_2d(sing.m_inf), np.atleast_2d(sing.c_inf), np.atleast_2d(sing.k_inf),
        np.atleast_2d(sing.s0))
    g, b, dt = params.gamma, params.beta, params.dt
    M_ref = np.atleast_2d(M_ref)
    K_ref = np.atleast_2d(K_ref)
    return Ci + b * dt / g * (Ki - K_ref + S0 * dt) + (Mi - M_ref) / (g * dt)


def htfd_convergence_indicator(sing, ref: ReferenceSubstructure, M_bb, params: NewmarkParams):
    """``max |eig(A0^-1 dA)|`` of the HTFD iteration."""
    Mi, Ci, Ki, S0 = singular_matrices(sing) if isinstance(sing, (list, tuple)) else (
        np.atleast_2d(sing.m_inf), np.atleast_2d(sing.c_inf), np.atleast_2d(sing.k_inf),
        np.atleast_2d(sing.s0))
    g, b, dt = params.gamma, params.beta, params.dt
    A0 = (np.atleast_2d(M_bb) + ref.M_ref) / (b * dt**2) + g / (b * dt) * ref.C_ref + ref.K_ref
    dA = ((Mi - ref.M_ref) / (b * dt**2) + g / (b * dt) * (Ci - ref.C_ref) + Ki - ref.K_ref
          + S0 * dt)
    try:
        X = np.linalg.solve(A0, dA)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("A0 is singular") from exc
    return float(np.max(np.abs(np.linalg.eigvals(X))))


def fft_grid(n_steps, cfg: HtfdConfig, dt):
    N = n_steps + cfg.n_decay + cfg.n_zero
    return N, 2 * np.pi * np.fft.rfftfreq(N, dt)


def impedance_matrix(S_full, w):
    """Stack of diagonal boundary impedance matrices from per-DOF functions
    (or a callable already returning (nw, nb, nb))."""
    if callable(S_full) and not isinstance(S_full, (list, tuple)):
        return np.asarray(S_full(w), dtype=complex)
    nb = len(S_full)
    out = np.zeros((w.size, nb, nb), dtype=complex)
    for i, S in enumerate(S_full):
        out[:, i, i] = S(w)
    return out


def _with_reference(model: SystemModel, ref: ReferenceSubstructure, b):
    M, C, K = model.M.copy(), model.C.copy(), model.K.copy()
    M[np.ix_(b, b)] += ref.M_ref
    C[np.ix_(b, b)] += ref.C_ref
    K[np.ix_(b, b)] += ref.K_ref
    return model.with_matrices(M=M, C=C, K=K)


def _relative_change(f1, f0):
    with np.errstate(over="ignore", invalid="ignore"):
        n0 = np.linalg.norm(f0)
        n1 = np.linalg.norm(f1 - f0)
        if n0 == 0:
            return 0.0 if np.linalg.norm(f1) == 0 else 1.0
        eps = n1 / n0
    return eps if np.isfinite(eps) else np.inf


def htfd_solve(model: SystemModel, S_full, ref: ReferenceSubstructure, gm: GroundMotion,
               cfg: HtfdConfig, boundary=None, raise_on_failure=False) -> HybridResult:
    """Windowed HTFD iteration.

    ``model`` holds the superstructure and foundation masses without soil
    terms; ``S_full`` is a list of per-boundary-DOF impedance functions.
    ``boundary`` selects the DOFs that carry ``S_full`` and the reference
    substructure (default: the layout's boundary DOFs).  Each window
    re-integrates from its start state (identical to a restart
    from t = 0 because earlier pseudo-forces are frozen) with the current
    pseudo-force applied as ``-f_ps`` at the boundary DOFs.
    """
    params = cfg.newmark or NewmarkParams(gm.dt)
    bidx = np.atleast_1d(np.array(model.layout.boundary if boundary is None else boundary))
    nb = bidx.size
    if ref.M_ref.shape[0] != nb:
        raise ValueError("reference substructure size does not match the boundary set")
    ag = gm.values
    n = ag.size
    tmodel = _with_reference(model, ref, bidx)
    load = tmodel.seismic_load(ag)
    N, w = fft_grid(n, cfg, gm.dt)
    dS = impedance_matrix(S_full, w) - ref(w)

    fps = np.zeros((n, nb))
    U = np.zeros((n, model.n))
    V = np.zeros_like(U)
    A = np.zeros_like(U)
    state = initial_state(tmodel, load[0])
    U[0], V[0], A[0] = state.u, state.v, state.a
    diags = []
    converged = True
    starts = list(range(0, n - 1, cfg.window_steps))
    for iw, s0 in enumerate(starts):
        e = min(s0 + cfg.window_steps, n - 1)  # last sample index in the window
        sl = slice(s0 + 1, e + 1)
        it = 0
        while True:
            extra = np.zeros((e - s0 + 1, model.n))
            extra[:, bidx] = -fps[s0:e + 1]
            try:
                th, end_state = integrate(tmodel, load[s0:e + 1], params, extra, state.copy(),
                                          newton=cfg.newton)
            except NonConvergenceError as exc:
                diags.append((iw, it + 1, np.inf))
                converged = False
                log.warning("window %d: Newton failure (%s)", iw, exc)
                break
            U[s0:e + 1], V[s0:e + 1], A[s0:e + 1] = th.u, th.v, th.a
            ub = np.zeros((N, nb))
            ub[:e + 1] = U[:e + 1][:, bidx]
            slope = ub[e] - ub[e - 1] if e > 0 else np.zeros(nb)
            nd = min(cfg.n_decay, N - e - 1)
            if nd >= 2:
                ub[e + 1:e + 1 + nd] = decay_extension(ub[e], slope, nd)
            with np.errstate(over="ignore", invalid="ignore"):
                Ub = forward_half_fft(ub, N, gm.dt)
                F = np.einsum("kij,kj->ki", dS, Ub.values)
                f1 = inverse_half_fft(SpectrumHalf(Ub.df, F, N))
            eps = _relative_change(f1[sl], fps[sl])
            fps[sl] = f1[sl]
            it += 1
            diags.append((iw, it, float(eps)))
            log.debug("window %d iteration %d eps %.3e", iw, it, eps)
            if eps < cfg.tol:
                # the response corresponds to the previous pseudo-force; one
                # more pass aligns it with the converged force
                extra[:, bidx] = -fps[s0:e + 1]
                th, end_state = integrate(tmodel, load[s0:e + 1], params, extra, state.copy(),
                                          newton=cfg.newton)
                U[s0:e + 1], V[s0:e + 1], A[s0:e + 1] = th.u, th.v, th.a
                break
            if it >= cfg.max_iter or not np.isfinite(eps) or eps > cfg.divergence_limit:
                converged = False
                break
        if not converged:
            log.warning("window %d did not converge (last eps %.3e)", iw, diags[-1][2])
            break
        state = end_state
    hist = TimeHistory(gm.dt, U, V, A, model.layout.labels)
    res = HybridResult(hist, fps, converged, diags)
    if not converged and raise_on_failure:
        raise NonConvergenceError("HTFD window did not converge", result=res,
                                  window=diags[-1][0], eps=diags[-1][2])
    return res


# ---------------------------------------------------------------------------
# HFTD

def hftd_stability_indicator(S0, S):
    """``max |eig(I - S0^-1 S)|`` for matrices (or scalars) evaluated at the
    frequency of interest."""
    S0 = np.atleast_2d(np.asarray(S0, dtype=complex))
    S = np.atleast_2d(np.asarray(S, dtype=complex))
    try:
        X = np.eye(S0.shape[0]) - np.linalg.solve(S0, S)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("S0 is singular") from exc
    return float(np.max(np.abs(np.linalg.eigvals(X))))


def _spring_pseudo_force(model: SystemModel, u):
    """``K_el u - f(u)`` along a displacement history (materials start
    virgin at t = 0)."""
    si, sj, sk, sfy, sh = spring_arrays(model)
    f = np.zeros_like(u)
    for s in range(si.size):
        if not np.isfinite(sfy[s]):
            continue
        d = u[:, si[s]] - (u[:, sj[s]] if sj[s] >= 0 else 0.0)
        corr = _material_history(sk[s], sfy[s], sh[s], d)
        f[:, si[s]] -= corr
        if sj[s] >= 0:
            f[:, sj[s]] += corr
    return f


def _material_history(k, fy, hm, d):
    """``f(d) - k d`` for a displacement history."""
    up = q = 0.0
    out = np.empty_like(d)
    for t in range(d.size):
        f_trial = k * (d[t] - up)
        xi = f_trial - q
        phi = abs(xi) - fy
        if phi > 0:
            sg = 1.0 if xi > 0 else -1.0
            dg = phi / (k + hm)
            up += dg * sg
            q += hm * dg * sg
            f_trial -= k * dg * sg
        out[t] = f_trial - k * d[t]
    return out


try:
    from numba import njit as _njit

    _material_history = _njit(cache=True)(_material_history)
except ImportError:  # pragma: no cover
    pass


def hftd_solve(model: SystemModel, S_bb, gm: GroundMotion, window_steps, tol=1e-3,
               max_iter=1000, n_pad=None, raise_on_failure=False) -> HybridResult:
    """Windowed HFTD iteration on an equivalent linear (initial elastic)
    model.  ``model.K`` and ``model.C`` hold the elastic superstructure and
    foundation masses; ``S_bb`` lists boundary impedance functions."""
    ag = gm.values
    n = ag.size
    dt = gm.dt
    bidx = np.array(model.layout.boundary)

    def extra(w):
        out = np.zeros((w.size, model.n, model.n), dtype=complex)
        out[:, bidx[:, None], bidx[None, :]] = impedance_matrix(S_bb, w)
        return out

    if n_pad is None:
        Kst = model.K.copy()
        Kst[bidx, bidx] += np.real(np.diagonal(impedance_matrix(S_bb, np.zeros(1))[0]))
        Cst = model.C.copy()
        wprobe = np.array([1.0])
        Cst[bidx, bidx] += np.imag(np.diagonal(impedance_matrix(S_bb, wprobe)[0]))
        n_pad = default_pad(model.M, Cst, Kst, dt, n)
    N = n + int(n_pad)
    w = 2 * np.pi * np.fft.rfftfreq(N, dt)
    D = dynamic_stiffness(model.M, model.C, model.K, w, extra)
    if w.size > 1 and np.linalg.cond(D[0]) > 1e14:
        D[0] = dynamic_stiffness(model.M, model.C, model.K, np.array([1e-9 * w[1]]), extra)[0]
    H = np.linalg.inv(D)
    load = model.seismic_load(ag)

    def solve(fps):
        with np.errstate(over="ignore", invalid="ignore"):
            P = forward_half_fft(load + fps, N, dt)
            Uf = np.einsum("kij,kj->ki", H, P.values)
            return inverse_half_fft(SpectrumHalf(P.df, Uf, N))[:n], Uf, P.df

    fps = np.zeros((n, model.n))
    diags = []
    converged = True
    for iw, s0 in enumerate(range(0, n, window_steps)):
        sl = slice(s0, min(s0 + window_steps, n))
        it = 0
        while True:
            u, _, _ = solve(fps)
            with np.errstate(over="ignore", invalid="ignore"):
                f1 = _spring_pseudo_force(model, u[:sl.stop])
            eps = _relative_change(f1[sl], fps[sl])
            fps[sl] = f1[sl]
            it += 1
            diags.append((iw, it, float(eps)))
            if eps < tol:
                break
            if it >= max_iter or not np.isfinite(eps) or eps > 1e8:
                converged = False
                break
        if not converged:
            break
    u, Uf, df = solve(fps)
    v = inverse_half_fft(SpectrumHalf(df, 1j * w[:, None] * Uf, N))[:n]
    a = inverse_half_fft(SpectrumHalf(df, -(w**2)[:, None] * Uf, N))[:n]
    res = HybridResult(TimeHistory(dt, u, v, a, model.layout.labels), fps, converged, diags)
    if not converged and raise_on_failure:
        raise NonConvergenceError("HFTD window did not converge", result=res,
                                  window=diags[-1][0], eps=diags[-1][2])
    return res


def boundary_singular_parts(S_full, n_steps, cfg: HtfdConfig, dt, check=True):
    """Per-DOF singular parts on the HTFD transform grid."""
    _, w = fft_grid(n_steps, cfg, dt)
    return [singular_decompose(S, w, check=check) for S in S_full]
