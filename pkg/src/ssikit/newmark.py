"""Newmark-beta integration (linear and Newton-iterated nonlinear) and the
amplification-matrix stability analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NonConvergenceError, SystemModel

try:  # optional acceleration; the kernels are plain numpy-compatible Python
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


class SingularStiffnessError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class NewmarkParams:
    dt: float
    gamma: float = 0.5
    beta: float = 0.25

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    def coefficients(self):
        g, b, dt = self.gamma, self.beta, self.dt
        return (1 / (b * dt**2), g / (b * dt), 1 / (b * dt), 1 / (2 * b) - 1,
                g / b - 1, dt * (g / (2 * b) - 1))


@dataclass
class TimeHistory:
    dt: float
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    labels: tuple = ()

    @property
    def n(self):
        return self.u.shape[0]

    @property
    def t(self):
        return np.arange(self.n) * self.dt


@dataclass
class State:
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    up: np.ndarray | None = None
    q: np.ndarray | None = None

    def copy(self):
        return State(self.u.copy(), self.v.copy(), self.a.copy(),
                     None if self.up is None else self.up.copy(),
                     None if self.q is None else self.q.copy())


# ---------------------------------------------------------------------------
# spring bookkeeping shared by the step functions and the batch kernel

def spring_arrays(model: SystemModel):
    s = model.springs
    si = np.array([x.i for x in s], dtype=np.int64)
    sj = np.array([x.j for x in s], dtype=np.int64)
    sk = np.array([x.material.k for x in s], dtype=float)
    sfy = np.array([x.material.f_yield for x in s], dtype=float)
    sh = np.array([x.material.hardening_modulus for x in s], dtype=float)
    return si, sj, sk, sfy, sh


@njit(cache=True)
def _spring_force(K, u, si, sj, sk, sfy, sh, up, q, up_new, q_new, Kt):
    f = K @ u
    for a in range(K.shape[0]):
        for b in range(K.shape[1]):
            Kt[a, b] = K[a, b]
    for s in range(si.size):
        i, j = si[s], sj[s]
        d = u[i]
        if j >= 0:
            d -= u[j]
        k = sk[s]
        fy = sfy[s]
        hm = sh[s]
        f_trial = k * (d - up[s])
        xi = f_trial - q[s]
        phi = abs(xi) - fy
        if phi <= 0.0:
            fs, kt = f_trial, k
            up_new[s], q_new[s] = up[s], q[s]
        else:
            sg = 1.0 if xi > 0.0 else -1.0
            dg = phi / (k + hm)
            up_new[s] = up[s] + dg * sg
            q_new[s] = q[s] + hm * dg * sg
            fs = f_trial - k * dg * sg
            kt = k * hm / (k + hm)
        corr = fs - k * d
        dk = kt - k
        f[i] += corr
        Kt[i, i] += dk
        if j >= 0:
            f[j] -= corr
            Kt[j, j] += dk
            Kt[i, j] -= dk
            Kt[j, i] -= dk
    return f


@njit(cache=True)
def _kernel(M, C, K, P, u0, v0, a0, dt, gamma, beta, si, sj, sk, sfy, sh, up0, q0,
            tol, max_iter):
    nt, n = P.shape
    U = np.zeros((nt, n))
    V = np.zeros((nt, n))
    A = np.zeros((nt, n))
    U[0], V[0], A[0] = u0, v0, a0
    c0 = 1.0 / (beta * dt * dt)
    c1 = gamma / (beta * dt)
    c2 = 1.0 / (beta * dt)
    c3 = 1.0 / (2.0 * beta) - 1.0
    c4 = gamma / beta - 1.0
    c5 = dt * (gamma / (2.0 * beta) - 1.0)
    up = up0.copy()
    q = q0.copy()
    up_t = up0.copy()
    q_t = q0.copy()
    Kt = np.zeros((n, n))
    linear = si.size == 0
    if linear:
        Khat_inv = np.linalg.inv(K + c0 * M + c1 * C)
    status = 0
    for k in range(nt - 1):
        un, vn, an = U[k], V[k], A[k]
        rhs = P[k + 1] + M @ (c0 * un + c2 * vn + c3 * an) + C @ (c1 * un + c4 * vn + c5 * an)
        if linear:
            u = Khat_inv @ rhs
        else:
            u = un.copy()
            r0 = -1.0
            it = 0
            while True:
                f = _spring_force(K, u, si, sj, sk, sfy, sh, up, q, up_t, q_t, Kt)
                r = rhs - (c0 * (M @ u) + c1 * (C @ u) + f)
                nr = np.sqrt(np.sum(r * r))
                if r0 < 0.0:
                    r0 = nr
                if nr <= tol * r0 or nr == 0.0:
                    break
                if it >= max_iter:
                    status = k + 1
                    break
                du = np.linalg.solve(Kt + c0 * M + c1 * C, r)
                u = u + du
                it += 1
            if status:
                break
            for s in range(si.size):
                up[s] = up_t[s]
                q[s] = q_t[s]
        a = c0 * (u - un) - c2 * vn - c3 * an
        v = vn + dt * ((1.0 - gamma) * an + gamma * a)
        U[k + 1], V[k + 1], A[k + 1] = u, v, a
    return U, V, A, up, q, status


# ---------------------------------------------------------------------------
# public API

def initial_state(model: SystemModel, load0, u0=None, v0=None):
    n = model.n
    u = np.zeros(n) if u0 is None else np.asarray(u0, dtype=float).copy()
    v = np.zeros(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    ns = len(model.springs)
    up, q = np.zeros(ns), np.zeros(ns)
    f = _internal_numpy(model, u, up, q)[0]
    rhs = np.asarray(load0, dtype=float) - model.C @ v - f
    try:
        a = np.linalg.solve(model.M, rhs)
    except np.linalg.LinAlgError:
        a = np.linalg.lstsq(model.M, rhs, rcond=None)[0]
    return State(u, v, a, up, q)


def _internal_numpy(model, u, up, q):
    si, sj, sk, sfy, sh = spring_arrays(model)
    Kt = np.zeros_like(model.K)
    up_t, q_t = up.copy(), q.copy()
    f = _spring_force(model.K, np.asarray(u, dtype=float), si, sj, sk, sfy, sh, up, q,
                      up_t, q_t, Kt)
    return f, Kt, up_t, q_t


def newmark_step_linear(model: SystemModel, state: State, load_now, extra_force_now=None,
                        params: NewmarkParams = None) -> State:
    """One linear step; ``load_now`` and ``extra_force_now`` are the loads
    at the new time level."""
    c0, c1, c2, c3, c4, c5 = params.coefficients()
    M, C, K = model.M, model.C, model.K
    p = np.asarray(load_now, dtype=float)
    if extra_force_now is not None:
        p = p + extra_force_now
    u, v, a = state.u, state.v, state.a
    rhs = p + M @ (c0 * u + c2 * v + c3 * a) + C @ (c1 * u + c4 * v + c5 * a)
    Khat = K + c0 * M + c1 * C
    try:
        un = np.linalg.solve(Khat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularStiffnessError("effective stiffness is singular") from exc
    an = c0 * (un - u) - c2 * v - c3 * a
    vn = v + params.dt * ((1 - params.gamma) * a + params.gamma * an)
    return State(un, vn, an, state.up, state.q)


def newmark_step_nonlinear(model: SystemModel, state: State, load_now, extra_force_now=None,
                           params: NewmarkParams = None, newton=(1e-8, 50),
                           tangent="consistent") -> State:
    """One Newton-iterated step.  Material state in ``state`` is only
    replaced by the returned state (trial/commit split).  ``tangent="fd"``
    uses a finite-difference tangent instead of the material tangent."""
    tol, max_iter = newton
    c0, c1, c2, c3, c4, c5 = params.coefficients()
    M, C = model.M, model.C
    p = np.asarray(load_now, dtype=float)
    if extra_force_now is not None:
        p = p + extra_force_now
    u0, v0, a0 = state.u, state.v, state.a
    up = state.up if state.up is not None else np.zeros(len(model.springs))
    q = state.q if state.q is not None else np.zeros(len(model.springs))
    rhs = p + M @ (c0 * u0 + c2 * v0 + c3 * a0) + C @ (c1 * u0 + c4 * v0 + c5 * a0)
    u = u0.copy()
    r0 = None
    for it in range(max_iter + 1):
        f, Kt, up_t, q_t = _internal_numpy(model, u, up, q)
        r = rhs - (c0 * (M @ u) + c1 * (C @ u) + f)
        nr = np.linalg.norm(r)
        if r0 is None:
            r0 = nr
        if nr <= tol * r0 or nr == 0.0:
            break
        if it == max_iter:
            raise NonConvergenceError("Newton iteration did not converge", residual=nr)
        if tangent == "fd":
            h = 1e-7 * max(np.max(np.abs(u)), 1e-6)
            Kt = np.empty_like(Kt)
            for jcol in range(u.size):
                du = np.zeros_like(u)
                du[jcol] = h
                fp = _internal_numpy(model, u + du, up, q)[0]
                fm = _internal_numpy(model, u - du, up, q)[0]
                Kt[:, jcol] = (fp - fm) / (2 * h)
        u = u + np.linalg.solve(Kt + c0 * M + c1 * C, r)
    an = c0 * (u - u0) - c2 * v0 - c3 * a0
    vn = v0 + params.dt * ((1 - params.gamma) * a0 + params.gamma * an)
    return State(u, vn, an, up_t, q_t)


def integrate(model: SystemModel, load, params: NewmarkParams, extra_force=None,
              state0: State | None = None, newton=(1e-8, 50)) -> tuple[TimeHistory, State]:
    """Integrate ``M a + C v + f(u) = load + extra_force`` over all rows of
    ``load`` (shape (nt, n)); row 0 is the initial time.  Returns the history
    and the final committed state (including material state)."""
    P = np.array(load, dtype=float, copy=True)
    if P.ndim == 1:
        P = P[:, None]
    if extra_force is not None:
        P += extra_force
    if state0 is None:
        state0 = initial_state(model, P[0])
    si, sj, sk, sfy, sh = spring_arrays(model)
    # elastic springs are fully represented by K
    active = np.isfinite(sfy)
    si, sj, sk, sfy, sh = si[active], sj[active], sk[active], sfy[active], sh[active]
    ns = len(model.springs)
    up0 = state0.up if state0.up is not None else np.zeros(ns)
    q0 = state0.q if state0.q is not None else np.zeros(ns)
    up_a, q_a = np.ascontiguousarray(up0[active]), np.ascontiguousarray(q0[active])
    M, C, K = (np.ascontiguousarray(x) for x in (model.M, model.C, model.K))
    try:
        U, V, A, upf, qf, status = _kernel(M, C, K, np.ascontiguousarray(P),
                                           state0.u.astype(float), state0.v.astype(float),
                                           state0.a.astype(float), params.dt, params.gamma,
                                           params.beta, si, sj, sk, sfy, sh, up_a, q_a,
                                           newton[0], newton[1])
    except np.linalg.LinAlgError as exc:
        raise SingularStiffnessError("effective stiffness is singular") from exc
    th = TimeHistory(params.dt, U, V, A, model.layout.labels)
    if status:
        raise NonConvergenceError(f"Newton iteration did not converge at step {status}",
                                  result=th, step=int(status))
    up_full, q_full = up0.copy(), q0.copy()
    up_full[active], q_full[active] = upf, qf
    final = State(U[-1].copy(), V[-1].copy(), A[-1].copy(), up_full, q_full)
    return th, final


def run_ground_motion(model: SystemModel, ag, dt, params: NewmarkParams | None = None,
                      extra_force=None, newton=(1e-8, 50)) -> TimeHistory:
    params = params or NewmarkParams(dt)
    return integrate(model, model.seismic_load(ag), params, extra_force, newton=newton)[0]


# ---------------------------------------------------------------------------
# stability analysis

def amplification_matrix(params: NewmarkParams, omega_n, xi, form="exact"):
    """One-step propagator of ``[u, v, a]`` for a linear SDOF.

    ``form="exact"`` equals ``H1^-1 H0`` for any gamma and damping.
    ``form="printed"`` is the widely reproduced closed form whose (1,3) and
    (3,3) entries carry ``gamma^2/2`` and ``b2 (1 - b1)``; the two agree
    when ``xi = 0``.
    """
    g, b, dt = params.gamma, params.beta, params.dt
    b1 = dt**2 * omega_n**2
    b2 = 2 * xi * dt * omega_n
    if form == "exact":
        e13 = dt**2 * ((0.5 - b) + b2 * (g / 2 - b))
        e33 = -(b2 * (1 - g) + b1 * (0.5 - b))
    elif form == "printed":
        e13 = dt**2 * ((0.5 - b) + b2 * (g**2 / 2 - b))
        e33 = -(b2 * (1 - b1) + b1 * (0.5 - b))
    else:
        raise ValueError(form)
    A = np.array([
        [1 + g * b2, dt * (1 + b2 * (g - b)), e13],
        [-g * b1 / dt, 1 + b1 * (b - g), dt * ((1 - g) + b1 * (b - g / 2))],
        [-b1 / dt**2, -(b1 + b2) / dt, e33],
    ])
    return A / (1 + g * b2 + b * b1)


def operator_matrices(m, c, k, params: NewmarkParams):
    """``H1`` and ``H0`` with ``H1 x_{n+1} = H0 x_n`` for a linear SDOF."""
    g, b, dt = params.gamma, params.beta, params.dt
    H1 = np.array([[k, c, m], [0, 1, -g * dt], [1, 0, -b * dt**2]], dtype=float)
    H0 = np.array([[0, 0, 0], [0, 1, (1 - g) * dt], [1, dt, (0.5 - b) * dt**2]], dtype=float)
    return H1, H0


def eigenvalues_half_gamma(beta, b1, b2):
    """Non-trivial eigenvalues of the operator for gamma = 1/2."""
    root = np.sqrt(np.asarray(b1**2 * (beta - 0.25) + b1 - b2**2 / 4, dtype=complex))
    num = 1 + b1 * (beta - 0.5)
    den = 1 + b2 / 2 + beta * b1
    return (num + 1j * root) / den, (num - 1j * root) / den


def stability_map(beta_grid, dtT_grid, xi=0.0):
    """Spectral radius on a (len(dtT_grid), len(beta_grid)) grid, gamma = 1/2."""
    beta = np.asarray(beta_grid, dtype=float)[None, :]
    dtT = np.asarray(dtT_grid, dtype=float)[:, None]
    b1 = (2 * np.pi * dtT) ** 2
    b2 = 2 * xi * 2 * np.pi * dtT
    l1, l2 = eigenvalues_half_gamma(beta, b1, b2)
    return np.maximum(np.abs(l1), np.abs(l2))
