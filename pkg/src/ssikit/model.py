"""Domain types, system assembly for lumped soil-structure models, and
story materials.

DOF convention for the assembled models: superstructure displacements are
measured relative to the rigid-body motion of the foundation, followed by
foundation sway ``u_f``, foundation rocking ``phi`` and (for the physical
cone model) the internal rocking DOF ``phi1``.  Foundation DOFs are relative
to the free field, so the seismic load is ``-M @ L * ag`` with ``L`` the unit
horizontal influence vector on ``u_f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np


class InvalidParameterError(ValueError):
    pass


# ---------------------------------------------------------------------------
# basic containers

@dataclass(frozen=True)
class DofLayout:
    labels: tuple
    boundary: tuple = ()

    def __post_init__(self):
        n = len(self.labels)
        b = tuple(int(i) for i in self.boundary)
        if len(set(b)) != len(b) or any(i < 0 or i >= n for i in b):
            raise InvalidParameterError("boundary indices must be unique and in range")
        object.__setattr__(self, "boundary", b)

    @property
    def n(self):
        return len(self.labels)

    def index(self, label):
        return self.labels.index(label)


@dataclass
class NonlinearMaterial:
    """Uniaxial story spring: elastic, elastic-perfectly-plastic or linear
    kinematic hardening (``alpha`` is the post-yield stiffness ratio)."""

    k: float
    u_yield: float = np.inf
    alpha: float = 0.0
    variant: str = "kinematic-hardening"

    def __post_init__(self):
        if self.variant not in ("elastic", "elastic-perfectly-plastic", "kinematic-hardening"):
            raise InvalidParameterError(f"unknown material variant {self.variant!r}")
        if self.variant == "elastic":
            self.u_yield = np.inf
        if self.variant == "elastic-perfectly-plastic":
            self.alpha = 0.0
        if not self.u_yield > 0:
            raise InvalidParameterError("u_yield must be positive")
        if not 0.0 <= self.alpha < 1.0:
            raise InvalidParameterError("alpha must lie in [0, 1)")

    @property
    def f_yield(self):
        return self.k * self.u_yield

    @property
    def hardening_modulus(self):
        return self.alpha * self.k / (1.0 - self.alpha)

    def initial_state(self):
        return (0.0, 0.0)


def return_map(k, fy, hmod, u, up, q):
    """Total-strain return map.  ``up`` is the plastic offset and ``q`` the
    back force.  Returns (force, tangent, up_new, q_new)."""
    f_trial = k * (u - up)
    xi = f_trial - q
    phi = abs(xi) - fy
    if phi <= 0.0:
        return f_trial, k, up, q
    s = 1.0 if xi > 0.0 else -1.0
    dg = phi / (k + hmod)
    up_new = up + dg * s
    q_new = q + hmod * dg * s
    return f_trial - k * dg * s, k * hmod / (k + hmod), up_new, q_new


def material_force(mat: NonlinearMaterial, u_trial, state=None):
    """Force, tangent and trial state for a total displacement ``u_trial``."""
    up, q = state if state is not None else mat.initial_state()
    fy = mat.f_yield if np.isfinite(mat.u_yield) else np.inf
    f, kt, up, q = return_map(mat.k, fy, mat.hardening_modulus, float(u_trial), up, q)
    return f, kt, (up, q)


@dataclass(frozen=True)
class Spring:
    """Material connecting DOF ``i`` to DOF ``j`` (``j = -1`` is the base)."""

    i: int
    j: int
    material: NonlinearMaterial


@dataclass(frozen=True)
class GroundMotion:
    dt: float
    accel: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.accel, dtype=float).ravel()
        if not self.dt > 0:
            raise InvalidParameterError("dt must be positive")
        if a.size == 0:
            raise InvalidParameterError("ground motion is empty")
        object.__setattr__(self, "accel", a)

    @property
    def values(self):
        return self.accel * self.scale

    @property
    def n(self):
        return self.accel.size

    @property
    def duration(self):
        return self.n * self.dt


@dataclass
class SystemModel:
    M: np.ndarray
    C: np.ndarray
    K: np.ndarray
    L: np.ndarray
    layout: DofLayout
    springs: tuple = ()

    def __post_init__(self):
        self.M = np.atleast_2d(np.asarray(self.M, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.K = np.atleast_2d(np.asarray(self.K, dtype=float))
        self.L = np.asarray(self.L, dtype=float).ravel()
        n = self.layout.n
        for name in ("M", "C", "K"):
            if getattr(self, name).shape != (n, n):
                raise InvalidParameterError(f"{name} does not match the DOF layout")
        if self.L.shape != (n,):
            raise InvalidParameterError("L does not match the DOF layout")
        self.springs = tuple(self.springs)

    @property
    def n(self):
        return self.layout.n

    @property
    def is_linear(self):
        return all(not np.isfinite(s.material.u_yield) for s in self.springs)

    def seismic_load(self, ag):
        """``-M L ag`` for every sample of ``ag``; shape (nt, n)."""
        return -np.outer(np.asarray(ag, dtype=float), self.M @ self.L)

    def with_matrices(self, **kw):
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# foundation parameters

@dataclass(frozen=True)
class LumpedFoundation:
    """Lumped sway/rocking foundation coefficients with an internal rocking
    DOF (inertia ``I1r`` linked to the foundation through dashpot ``c1r``)."""

    k0h: float
    c0h: float
    k0r: float
    c0r: float
    c1r: float
    I1r: float
    fk: float = 0.0
    fc: float = 0.0

    @property
    def kr_inf(self):
        return self.k0r - self.c1r**2 / self.I1r if self.I1r > 0 else self.k0r

    def k_rock(self, omega):
        w2 = np.asarray(omega, dtype=float) ** 2
        if self.I1r == 0 or self.c1r == 0:
            return self.k0r + 0 * w2
        return self.k0r - self.I1r * self.c1r**2 * w2 / (self.c1r**2 + self.I1r**2 * w2)

    def c_rock(self, omega):
        w2 = np.asarray(omega, dtype=float) ** 2
        if self.I1r == 0 or self.c1r == 0:
            return self.c0r + 0 * w2
        return self.c0r + self.I1r**2 * self.c1r * w2 / (self.c1r**2 + self.I1r**2 * w2)


@dataclass(frozen=True)
class ConeFoundationParams(LumpedFoundation):
    r: float = 1.0
    e: float = 0.0
    rho: float = 1.0
    nu: float = 0.25
    Vs: float = 1.0
    G: float = 1.0
    gamma0h: float = 0.0
    gamma0r: float = 0.0
    gamma1r: float = 0.0
    mu1r: float = 0.0
    kr_embedded: float = 0.0


def cone_foundation_params(r, e, rho, nu, Vs, rocking_form="script"):
    """Cone-model coefficients for a cylindrical foundation of radius ``r``
    embedded ``e`` in a half-space.

    ``rocking_form="script"`` subtracts the sidewall correction
    ``G r^3 / (2 (2 - nu)) (1 + e/r) (e/r)^2`` from the embedded rocking
    stiffness; ``"embedded"`` keeps the plain embedded value.  Damping and
    inertia coefficients always scale the plain embedded stiffness.
    """
    if not (r > 0 and Vs > 0 and rho > 0):
        raise InvalidParameterError("r, rho and Vs must be positive")
    if not 0 < nu < 0.5:
        raise InvalidParameterError("nu must lie in (0, 0.5)")
    if e < 0:
        raise InvalidParameterError("embedment must be non-negative")
    if rocking_form not in ("script", "embedded"):
        raise InvalidParameterError(f"unknown rocking form {rocking_form!r}")
    er = e / r
    G = rho * Vs**2
    k0h = 8 * G * r / (2 - nu) * (1 + er)
    g0h = 0.68 + 0.57 * np.sqrt(er)
    c0h = r / Vs * g0h * k0h
    kr_emb = 8 * G * r**3 / (3 * (1 - nu)) * (1 + 2.3 * er + 0.58 * er**3)
    if rocking_form == "script":
        k0r = kr_emb - G * r**3 / (2 * (2 - nu)) * (1 + er) * er**2
    else:
        k0r = kr_emb
    g0r = 0.15631 * er - 0.08906 * er**2 - 0.00874 * er**3
    g1r = 0.4 + 0.03 * er**2
    mu1r = 0.33 + 0.1 * er**2
    return ConeFoundationParams(
        k0h=k0h, c0h=c0h, k0r=k0r,
        c0r=r / Vs * g0r * kr_emb,
        c1r=r / Vs * g1r * kr_emb,
        I1r=(r / Vs) ** 2 * mu1r * kr_emb,
        fk=0.25 * e, fc=0.32 * e + 0.03 * e * er**2,
        r=r, e=e, rho=rho, nu=nu, Vs=Vs, G=G,
        gamma0h=g0h, gamma0r=g0r, gamma1r=g1r, mu1r=mu1r, kr_embedded=kr_emb,
    )


# ---------------------------------------------------------------------------
# superstructure

@dataclass(frozen=True)
class Story:
    """One story: floor mass, story stiffness, story height, floor rotary
    inertia, optional viscous story dashpot and optional yield displacement."""

    mass: float
    k: float
    height: float
    inertia: float = 0.0
    c: float = 0.0
    u_yield: float = np.inf
    alpha: float = 0.0


def shear_building_matrices(stories: Sequence[Story]):
    """Mass and stiffness of a shear building in floor displacements
    relative to the base."""
    m = np.array([s.mass for s in stories], dtype=float)
    k = np.array([s.k for s in stories], dtype=float)
    n = m.size
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] += k[i]
        if i > 0:
            K[i - 1, i - 1] += k[i]
            K[i - 1, i] -= k[i]
            K[i, i - 1] -= k[i]
    return np.diag(m), K


def story_dashpots(stories: Sequence[Story]):
    n = len(stories)
    C = np.zeros((n, n))
    for i, s in enumerate(stories):
        C[i, i] += s.c
        if i > 0:
            C[i - 1, i - 1] += s.c
            C[i - 1, i] -= s.c
            C[i, i - 1] -= s.c
    return C


def fixed_base_frequencies(stories: Sequence[Story]):
    """Natural frequencies (Hz) of the superstructure on a rigid base."""
    from scipy.linalg import eigh

    Ms, Ks = shear_building_matrices(stories)
    lam = eigh(Ks, Ms, eigvals_only=True)
    return np.sqrt(np.abs(lam)) / (2 * np.pi)


def _story_springs(stories, offset=0):
    out = []
    for i, s in enumerate(stories):
        if np.isfinite(s.u_yield):
            mat = NonlinearMaterial(s.k, s.u_yield, s.alpha)
        else:
            mat = NonlinearMaterial(s.k, variant="elastic")
        out.append(Spring(offset + i, offset + i - 1 if i > 0 else -1, mat))
    return tuple(out)


def _assemble(stories, found: LumpedFoundation, e, mf, If, rayleigh, internal, eccentric):
    ns = len(stories)
    if ns < 1:
        raise InvalidParameterError("at least one story is required")
    n = ns + 2 + (1 if internal else 0)
    iu, ip = ns, ns + 1
    z = e + np.cumsum([s.height for s in stories])

    M = np.zeros((n, n))
    for i, s in enumerate(stories):
        t = np.zeros(n)
        t[i], t[iu], t[ip] = 1.0, 1.0, z[i]
        M += s.mass * np.outer(t, t)
        M[ip, ip] += s.inertia
    t = np.zeros(n)
    t[iu], t[ip] = 1.0, e / 2
    M += mf * np.outer(t, t)
    M[ip, ip] += If

    Ms, Ks = shear_building_matrices(stories)
    Cs = story_dashpots(stories)
    if rayleigh is not None:
        Cs = Cs + rayleigh[0] * Ms + rayleigh[1] * Ks
    C = np.zeros((n, n))
    K = np.zeros((n, n))
    C[:ns, :ns] = Cs
    K[:ns, :ns] = Ks

    fk, fc = (found.fk, found.fc) if eccentric else (0.0, 0.0)
    K[iu, iu] += found.k0h
    K[iu, ip] += found.k0h * fk
    K[ip, iu] += found.k0h * fk
    K[ip, ip] += found.k0h * fk**2
    C[iu, iu] += found.c0h
    C[iu, ip] += found.c0h * fc
    C[ip, iu] += found.c0h * fc
    C[ip, ip] += found.c0h * fc**2

    labels = [f"u{i + 1}" for i in range(ns)] + ["uf", "phi"]
    if internal:
        labels.append("phi1")
    L = np.zeros(n)
    L[iu] = 1.0
    return M, C, K, L, labels, (iu, ip)


def build_physical_model(found: LumpedFoundation, stories: Sequence[Story], *, e, mf,
                         If=0.0, rayleigh=None, eccentric=False) -> SystemModel:
    """Lumped physical (cone) model with the internal rocking DOF.

    Returns ``ns + 3`` DOFs ``[u_1..u_ns, uf, phi, phi1]``.
    """
    M, C, K, L, labels, (iu, ip) = _assemble(stories, found, e, mf, If, rayleigh, True, eccentric)
    i1 = ip + 1
    M[i1, i1] = found.I1r
    K[ip, ip] += found.k0r
    C[ip, ip] += found.c0r + found.c1r
    C[ip, i1] -= found.c1r
    C[i1, ip] -= found.c1r
    C[i1, i1] += found.c1r
    return SystemModel(M, C, K, L, DofLayout(tuple(labels), (iu, ip)), _story_springs(stories))


def build_base_model(found: LumpedFoundation, stories: Sequence[Story], *, e, mf, If=0.0,
                     rayleigh=None, eccentric=False, include_foundation=False) -> SystemModel:
    """Model without the internal DOF: ``[u_1..u_ns, uf, phi]``.

    With ``include_foundation=False`` only superstructure stiffness and
    damping are assembled, so the soil enters solely through boundary
    impedances.  With ``True`` the frequency-independent sway terms are
    included and the rocking DOF is left for a frequency-dependent term.
    """
    if include_foundation:
        M, C, K, L, labels, bnd = _assemble(stories, found, e, mf, If, rayleigh, False, eccentric)
    else:
        zero = LumpedFoundation(0, 0, 0, 0, 0, 0)
        M, C, K, L, labels, bnd = _assemble(stories, zero, e, mf, If, rayleigh, False, False)
    return SystemModel(M, C, K, L, DofLayout(tuple(labels), bnd), _story_springs(stories))


def actual_model_matrices(found: LumpedFoundation, stories, *, e, mf, If=0.0, rayleigh=None):
    """Three-part description of the actual model: the static model (with
    sway terms) plus callables ``K(w)`` and ``C(w)`` that add the
    frequency-dependent rocking stiffness and damping."""
    base = build_base_model(found, stories, e=e, mf=mf, If=If, rayleigh=rayleigh,
                            include_foundation=True)
    ip = base.layout.boundary[1]

    def K_of(w):
        K = np.broadcast_to(base.K, np.shape(w) + base.K.shape).copy()
        K[..., ip, ip] += found.k_rock(w)
        return K

    def C_of(w):
        C = np.broadcast_to(base.C, np.shape(w) + base.C.shape).copy()
        C[..., ip, ip] += found.c_rock(w)
        return C

    return base, C_of, K_of


def build_approximate_model(found: LumpedFoundation, stories, omega, *, e, mf, If=0.0,
                            rayleigh=None) -> SystemModel:
    """Actual model with the rocking impedance frozen at ``omega``."""
    base, C_of, K_of = actual_model_matrices(found, stories, e=e, mf=mf, If=If, rayleigh=rayleigh)
    return base.with_matrices(C=C_of(np.float64(omega)), K=K_of(np.float64(omega)))


def complex_modes(M, C, K):
    """Underdamped modes from the first-order companion form.  Returns
    (omega, xi) sorted by frequency with conjugate pairs merged."""
    from scipy.linalg import eig, solve

    n = M.shape[0]
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -solve(M, K)
    A[n:, n:] = -solve(M, C)
    lam = eig(A, right=False)
    lam = lam[np.abs(lam.imag) > 1e-9 * np.maximum(np.abs(lam), 1.0)]
    lam = lam[lam.imag > 0]
    w = np.abs(lam)
    xi = -lam.real / w
    order = np.argsort(w)
    return w[order], xi[order]


# ---------------------------------------------------------------------------
# reference fixtures

@dataclass
class SsiFixture:
    stories: tuple
    found: LumpedFoundation
    e: float
    mf: float
    If: float
    rayleigh: tuple | None = None
    h: float = 0.0
    Vs: float = 0.0
    extra: dict = field(default_factory=dict)

    def physical(self, **kw):
        return build_physical_model(self.found, self.stories, e=self.e, mf=self.mf, If=self.If,
                                    rayleigh=self.rayleigh, **kw)

    def base(self, **kw):
        return build_base_model(self.found, self.stories, e=self.e, mf=self.mf, If=self.If,
                                rayleigh=self.rayleigh, **kw)

    def actual(self):
        return actual_model_matrices(self.found, self.stories, e=self.e, mf=self.mf, If=self.If,
                                     rayleigh=self.rayleigh)

    def approximate(self, omega):
        return build_approximate_model(self.found, self.stories, omega, e=self.e, mf=self.mf,
                                       If=self.If, rayleigh=self.rayleigh)

    def with_yield(self, u_yield, alpha=0.0):
        uy = np.broadcast_to(np.asarray(u_yield, dtype=float), (len(self.stories),))
        st = tuple(replace(s, u_yield=float(y), alpha=alpha) for s, y in zip(self.stories, uy))
        return replace(self, stories=st)


def table41_fixture(a0_fix=4.0, Tn=0.4, h_r=3.0, e_r=1.0, mass_ratio=0.5, mf_m=0.5,
                    xi=0.02, nu=0.25, r=8.0, m=1.0, rocking_form="script") -> SsiFixture:
    """Single-story soil-structure fixture driven by dimensionless controls."""
    wn = 2 * np.pi / Tn
    ks = m * wn**2
    cs = 2 * xi * m * wn
    h = h_r * r
    e = e_r * r
    rho = m / mass_ratio / (h * r**2)
    Vs = wn * h / a0_fix
    found = cone_foundation_params(r, e, rho, nu, Vs, rocking_form=rocking_form)
    mf = mf_m * m
    story = Story(mass=m, k=ks, height=h, inertia=0.25 * m * r**2, c=cs)
    return SsiFixture((story,), found, e=e, mf=mf, If=0.25 * mf * r**2, h=h, Vs=Vs,
                      extra=dict(wn=wn, ks=ks, cs=cs, r=r, xi=xi))


def table52_fixture() -> SsiFixture:
    """Five-story building on lumped sway/rocking springs."""
    ns = 5
    epsy = (0.0099, 0.0092, 0.0079, 0.0059, 0.0033)
    st = tuple(Story(mass=9.7014e3, k=1.3132e7, height=3.5, inertia=4.5842e5 / ns)
               for _ in range(ns))
    found = LumpedFoundation(k0h=5.5335e8, c0h=2.1377e7, k0r=3.2611e10, c0r=1.1138e8,
                             c1r=8.2829e8, I1r=4.4365e7)
    return SsiFixture(st, found, e=3.0742, mf=4.8507e3, If=4.5842e4, rayleigh=(0.78, 0.0024),
                      h=3.5 * ns, extra=dict(epsy=epsy))


def table63_building() -> tuple:
    """Five-story shear building with kinematic-hardening stories."""
    m = (1e5, 1e4, 1e4, 1e4, 1e4)
    k = (1e8, 1e8, 1e7, 1e7, 1e7)
    uy = (1e-3, 1e-4, 1e-3, 1e-3, 1e-3)
    return tuple(Story(mass=mi, k=ki, height=3.0, u_yield=y, alpha=0.1)
                 for mi, ki, y in zip(m, k, uy))


# ---------------------------------------------------------------------------
# design-code utilities

class NonConvergenceError(RuntimeError):
    def __init__(self, msg, result=None, **info):
        super().__init__(msg)
        self.result = result
        self.info = info


def period_lengthening(k_s, m_s, h_s, impedance_sway: Callable, impedance_rock: Callable,
                       xi=0.0, xi0=0.0, tol=1e-10, max_iter=200):
    """Flexible-to-fixed period ratio with stiffnesses evaluated at the
    flexible-base frequency (fixed-point iteration), and the flexible-base
    damping ratio.  Returns ``(T_ratio, xi_flex)``."""
    wn = np.sqrt(k_s / m_s)
    ratio = 1.0
    for _ in range(max_iter):
        w = wn / ratio
        ku = float(np.real(impedance_sway(w)))
        kt = float(np.real(impedance_rock(w)))
        new = np.sqrt(1.0 + k_s / ku + k_s * h_s**2 / kt)
        if abs(new - ratio) / new < tol:
            ratio = new
            break
        ratio = new
    else:
        raise NonConvergenceError("period lengthening iteration did not converge",
                                  last_ratio=ratio)
    return ratio, xi0 + xi / ratio**3
