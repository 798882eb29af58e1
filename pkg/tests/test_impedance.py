import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssikit.impedance import (DegenerateFitError, GridTooCoarseError, ImpedanceFunction,
                              OutOfRangeError, VeletsosVerbicRocking, cone_impedances,
                              extract_impedance_harmonic, rocking_if_from_cone,
                              rod_elastic_foundation, rod_exponential_area,
                              rod_exponential_area_kernel, singular_decompose)
from ssikit.model import LumpedFoundation, table41_fixture

FD = table41_fixture().found


def test_rod_exponential_area_values():
    assert rod_exponential_area(0.0) == 1.0
    assert rod_exponential_area(0.5) == pytest.approx(0.5)
    assert rod_exponential_area(1.0) == pytest.approx(0.5 + 0.5j * np.sqrt(3.0))


def test_rod_elastic_foundation_values():
    assert rod_elastic_foundation(0.0)[0] == 1.0
    assert rod_elastic_foundation(np.sqrt(2.0))[0] == pytest.approx(1j)
    assert abs(rod_elastic_foundation(100.0)[1]) < 0.01


def test_exponential_kernel_origin():
    assert rod_exponential_area_kernel(0.0) == 0.125
    assert rod_exponential_area_kernel(1e-6) == pytest.approx(0.125, rel=1e-9)


def test_rocking_static_value():
    assert rocking_if_from_cone(FD, 0.0) == pytest.approx(FD.k0r)
    assert FD.k0r == pytest.approx(78310, rel=1e-4)


def test_rocking_high_frequency_limits():
    w = 1e6
    s = rocking_if_from_cone(FD, w)
    assert s.real == pytest.approx(FD.k0r - FD.c1r**2 / FD.I1r, rel=1e-6)
    assert s.real == pytest.approx(43160, rel=1e-3)
    assert s.imag / w == pytest.approx(FD.c0r + FD.c1r, rel=1e-6)
    assert s.imag / w == pytest.approx(3388, rel=1e-3)


def test_rocking_decoupled_internal_dof():
    fd = LumpedFoundation(k0h=1.0, c0h=1.0, k0r=500.0, c0r=3.0, c1r=0.0, I1r=10.0)
    w = np.linspace(0, 50, 11)
    np.testing.assert_allclose(rocking_if_from_cone(fd, w), 500.0 + 3j * w)


def test_singular_part_of_cone_rocking():
    w = np.linspace(0, 2e4, 200001)
    sp = singular_decompose(lambda x: rocking_if_from_cone(FD, x), w)
    assert abs(sp.m_inf) < 1e-6
    assert sp.c_inf == pytest.approx(FD.c0r + FD.c1r, rel=1e-6)
    assert sp.k_inf == pytest.approx(FD.k0r - FD.c1r**2 / FD.I1r, rel=1e-5)
    assert sp.s0 == pytest.approx(FD.c1r**3 / FD.I1r**2, rel=1e-2)
    assert sp.s0 == pytest.approx(4.14e5, rel=1e-2)


def test_singular_s0_finite_grid_closed_form():
    # the integral of Re S over [0, W] has a closed form
    W = 300.0
    w = np.linspace(0, W, 30001)
    sp = singular_decompose(lambda x: rocking_if_from_cone(FD, x), w, check=False)
    c, I = FD.c1r, FD.I1r
    integral = c**3 / I**2 * np.arctan(I * W / c) + (FD.k0r - c**2 / I) * W
    integral += -sp.k_inf * W + sp.m_inf * W**3 / 3
    assert sp.s0 == pytest.approx(2 / np.pi * integral, rel=1e-3)


def test_singular_constant_and_dashpot():
    w = np.linspace(0, 100, 128)
    sp = singular_decompose(lambda x: 7.0 + 0 * x, w)
    assert (sp.m_inf, sp.c_inf, sp.k_inf) == pytest.approx((0.0, 0.0, 7.0), abs=1e-9)
    assert sp.s0 == pytest.approx(0.0, abs=1e-9)
    sp = singular_decompose(lambda x: 3j * x, w)
    assert (sp.m_inf, sp.c_inf, sp.k_inf) == pytest.approx((0.0, 3.0, 0.0), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(m=st.floats(0.0, 1e3), c=st.floats(0.0, 1e4), k=st.floats(1.0, 1e6),
       n=st.integers(64, 400), wmax=st.floats(1.0, 1e3))
def test_singular_recovers_spring_dashpot_mass(m, c, k, n, wmax):
    w = np.linspace(0, wmax, n)
    sp = singular_decompose(lambda x: k - m * x**2 + 1j * x * c, w)
    scale = k + m * wmax**2 + c * wmax
    assert abs(sp.m_inf - m) * wmax**2 <= 1e-6 * scale
    assert abs(sp.c_inf - c) * wmax <= 1e-6 * scale
    assert abs(sp.k_inf - k) <= 1e-6 * scale


def test_singular_needs_three_points():
    with pytest.raises(GridTooCoarseError):
        singular_decompose(lambda x: 1 + 0 * x, np.array([0.0, 1.0]))


def test_table_reproduces_knots():
    w = np.linspace(0, 10, 12)
    s = np.cos(w) + 1j * w**2
    S = ImpedanceFunction.table(w, s)
    np.testing.assert_allclose(S(w), s, rtol=1e-14, atol=1e-14)
    assert S.kind == "sampled-table"


def test_table_out_of_range():
    S = ImpedanceFunction.table(np.arange(5.0), np.ones(5))
    with pytest.raises(OutOfRangeError):
        S(np.array([5.5]))
    near = ImpedanceFunction.table(np.arange(5.0), np.arange(5.0) + 0j, nearest=True)
    np.testing.assert_allclose(near(np.array([0.4, 2.6, 9.0])), [0.0, 3.0, 4.0])


def test_table_validation():
    with pytest.raises(ValueError):
        ImpedanceFunction.table(np.arange(3.0), np.ones(3))
    with pytest.raises(ValueError):
        ImpedanceFunction.table(np.array([0.0, 2.0, 1.0, 3.0]), np.ones(4))


FAMILIES = [
    ImpedanceFunction(lambda w: rod_exponential_area(w)),
    ImpedanceFunction(lambda w: rod_elastic_foundation(w)[0]),
    *cone_impedances(FD),
    ImpedanceFunction(VeletsosVerbicRocking(2.0, 0.5, 0.6, 0.1, 8.0, 100.0)),
]


@settings(max_examples=40, deadline=None)
@given(i=st.integers(0, len(FAMILIES) - 1), w=st.floats(0.0, 500.0))
def test_conjugate_symmetry(i, w):
    S = FAMILIES[i]
    pos, neg = S(np.array([w]))[0], S(np.array([-w]))[0]
    assert neg.real == pytest.approx(pos.real)
    assert neg.imag == pytest.approx(-pos.imag)


def test_veletsos_verbic_static():
    vv = VeletsosVerbicRocking(K_st=3.5, b1=0.5, b2=0.6, b3=0.1, r=1.0, Vs=1.0)
    assert vv(0.0) == 3.5 + 0j
    with pytest.raises(ValueError):
        VeletsosVerbicRocking(1.0, 0.5, 0.0, 0.1, 1.0, 1.0)


def test_harmonic_spring():
    w, k, dt = 5.0, 200.0, 0.001
    t = np.arange(20000) * dt
    F = 3.0 * np.sin(w * t)
    u = F / k
    assert extract_impedance_harmonic(F, u, w, dt) == pytest.approx(k)


def test_harmonic_dashpot():
    w, c, dt, A = 5.0, 40.0, 0.001, 2.0
    t = np.arange(20000) * dt
    F = A * np.sin(w * t)
    u = -A / (w * c) * np.cos(w * t)
    assert extract_impedance_harmonic(F, u, w, dt) == pytest.approx(1j * w * c)


def test_harmonic_too_short():
    t = np.arange(100) * 0.01
    with pytest.raises(DegenerateFitError):
        extract_impedance_harmonic(np.sin(t), np.sin(t), 1.0, 0.01)
