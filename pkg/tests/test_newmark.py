import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssikit.model import (DofLayout, NonlinearMaterial, Spring, SystemModel)
from ssikit.newmark import (NewmarkParams, SingularStiffnessError, amplification_matrix,
                            initial_state, integrate, newmark_step_linear,
                            newmark_step_nonlinear, operator_matrices, stability_map)


def sdof(m=1.0, c=0.0, k=1.0, uy=np.inf, alpha=0.0):
    mat = NonlinearMaterial(k, uy, alpha) if np.isfinite(uy) else NonlinearMaterial(k, variant="elastic")
    return SystemModel([[m]], [[c]], [[k]], [1.0], DofLayout(("u",)), (Spring(0, -1, mat),))


def test_zero_load_stays_at_rest():
    P = sdof(k=4.0)
    th, _ = integrate(P, np.zeros((50, 1)), NewmarkParams(0.1))
    assert np.all(th.u == 0) and np.all(th.a == 0)


def test_undamped_free_vibration_amplitude():
    wn = 2 * np.pi
    P = sdof(k=wn**2)
    p = NewmarkParams(0.01)
    st = initial_state(P, [0.0], u0=[1.0])
    u = [1.0]
    for _ in range(1000):
        st = newmark_step_linear(P, st, [0.0], None, p)
        u.append(st.u[0])
    u = np.array(u)
    for c in range(10):
        seg = u[c * 100:(c + 1) * 100 + 1]
        assert np.max(np.abs(seg)) == pytest.approx(1.0, rel=5e-3)
    assert u[100] == pytest.approx(1.0, abs=5e-3)


def test_integrate_matches_single_steps():
    P = SystemModel(np.diag([2.0, 1.0]), [[0.3, -0.1], [-0.1, 0.2]], [[30.0, -10.0], [-10.0, 10.0]],
                    [1.0, 1.0], DofLayout(("a", "b")))
    rng = np.random.default_rng(0)
    load = rng.standard_normal((200, 2))
    p = NewmarkParams(0.02)
    th, _ = integrate(P, load, p)
    st = initial_state(P, load[0])
    for i in range(1, 200):
        st = newmark_step_linear(P, st, load[i], None, p)
        np.testing.assert_allclose(th.u[i], st.u, rtol=1e-10, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(dtT=st.floats(0.005, 2.0), xi=st.floats(0.0, 0.3), beta=st.sampled_from([0.25, 1 / 6, 0.3]),
       gamma=st.sampled_from([0.5, 0.6]))
def test_step_equals_amplification_operator(dtT, xi, beta, gamma):
    wn = 3.0
    dt = dtT * 2 * np.pi / wn
    P = sdof(c=2 * xi * wn, k=wn**2)
    p = NewmarkParams(dt, gamma=gamma, beta=beta)
    A = amplification_matrix(p, wn, xi)
    st = initial_state(P, [0.0], u0=[1.0], v0=[0.5])
    x = np.r_[st.u, st.v, st.a]
    for _ in range(5):
        st = newmark_step_linear(P, st, [0.0], None, p)
        x = A @ x
        np.testing.assert_allclose(np.r_[st.u, st.v, st.a], x, rtol=1e-12,
                                   atol=1e-12 * np.max(np.abs(x)))


def test_printed_operator_agrees_when_undamped():
    p = NewmarkParams(0.05, gamma=0.6, beta=0.3)
    np.testing.assert_allclose(amplification_matrix(p, 7.0, 0.0, "printed"),
                               amplification_matrix(p, 7.0, 0.0), rtol=1e-14)


def test_operator_matrices_reproduce_amplification():
    p = NewmarkParams(0.02)
    wn, xi = 5.0, 0.05
    H1, H0 = operator_matrices(1.0, 2 * xi * wn, wn**2, p)
    np.testing.assert_allclose(np.linalg.solve(H1, H0), amplification_matrix(p, wn, xi),
                               atol=1e-12)


def test_spectral_radius_limits():
    p = NewmarkParams(1e-7)
    assert np.max(np.abs(np.linalg.eigvals(amplification_matrix(p, 1.0, 0.0)))) == pytest.approx(1.0)
    for dt in (0.001, 0.1, 10.0, 1e3):
        lam = np.linalg.eigvals(amplification_matrix(NewmarkParams(dt), 2.0, 0.0))
        lam = lam[np.argsort(-np.abs(lam))][:2]
        np.testing.assert_allclose(np.abs(lam), 1.0, rtol=1e-10)
    A = amplification_matrix(NewmarkParams(1.0, beta=1 / 6), 2 * np.pi / 0.5, 0.0)
    assert np.max(np.abs(np.linalg.eigvals(A))) > 1


def test_stability_map_examples():
    rho = stability_map([0.2], [1.0])
    assert rho[0, 0] > 1
    rho = stability_map([0.25, 0.3], [0.01, 0.02], xi=0.05)
    assert np.all(rho < 1)


def test_stability_map_matches_operator():
    beta = np.array([0.1, 0.2, 0.25, 0.4])
    dtT = np.array([0.05, 0.3, 1.0])
    rho = stability_map(beta, dtT, xi=0.02)
    for i, r in enumerate(dtT):
        for j, b in enumerate(beta):
            A = amplification_matrix(NewmarkParams(r * 2 * np.pi, beta=b), 1.0, 0.02)
            assert rho[i, j] == pytest.approx(np.max(np.abs(np.linalg.eigvals(A))), rel=1e-9)


def test_elastic_nonlinear_step_equals_linear():
    P = sdof(c=0.1, k=9.0)
    p = NewmarkParams(0.05)
    s1 = s2 = initial_state(P, [0.0])
    for i in range(50):
        f = [np.sin(0.3 * i)]
        s1 = newmark_step_linear(P, s1, f, None, p)
        s2 = newmark_step_nonlinear(P, s2, f, None, p)
        np.testing.assert_allclose(s1.u, s2.u, rtol=1e-12, atol=1e-15)


def test_epp_force_plateau():
    k, uy = 100.0, 0.01
    P = sdof(m=1.0, c=20.0, k=k, uy=uy)
    P.springs[0].material.alpha = 0.0
    p = NewmarkParams(0.01)
    st = initial_state(P, [0.0])
    forces = []
    for i in range(1, 400):
        st = newmark_step_nonlinear(P, st, [2 * k * uy * min(i / 300, 1.0)], None, p)
        forces.append(k * (st.u[0] - st.up[0]))
    forces = np.array(forces)
    assert np.max(forces) == pytest.approx(k * uy, rel=1e-9)
    assert np.all(forces[-50:] == pytest.approx(k * uy, rel=1e-9))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 1000), alpha=st.floats(0.0, 0.3))
def test_fd_tangent_matches_consistent(seed, alpha):
    P = sdof(m=1.0, c=0.2, k=50.0, uy=0.01, alpha=alpha)
    p = NewmarkParams(0.02)
    f = np.random.default_rng(seed).standard_normal(60) * 1.5
    s1 = s2 = initial_state(P, [0.0])
    for x in f:
        s1 = newmark_step_nonlinear(P, s1, [x], None, p)
        s2 = newmark_step_nonlinear(P, s2, [x], None, p, tangent="fd")
    np.testing.assert_allclose(s1.u, s2.u, rtol=1e-6, atol=1e-10)


def test_permanent_drift_after_yielding(sdof_nonlinear):
    _, truth = sdof_nonlinear
    u1 = truth.u[:, 0]
    assert abs(np.mean(u1[-200:])) > 0.01 * np.max(np.abs(u1))


def test_singular_effective_stiffness():
    P = SystemModel([[0.0]], [[0.0]], [[0.0]], [1.0], DofLayout(("u",)))
    st = initial_state(P, [0.0])
    with pytest.raises(SingularStiffnessError):
        newmark_step_linear(P, st, [1.0], None, NewmarkParams(0.1))


def test_params_validation():
    with pytest.raises(ValueError):
        NewmarkParams(0.0)
    with pytest.raises(ValueError):
        NewmarkParams(0.1, beta=0.0)
