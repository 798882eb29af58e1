import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssikit.model import (InvalidParameterError, LumpedFoundation, NonlinearMaterial, Story,
                          build_physical_model, complex_modes, cone_foundation_params,
                          fixed_base_frequencies, material_force, period_lengthening,
                          table41_fixture, table52_fixture, table63_building)


def test_cone_coefficients_embedded():
    p = cone_foundation_params(r=8.0, e=8.0, rho=2.0, nu=0.25, Vs=100.0)
    assert p.gamma0h == pytest.approx(1.25)
    assert p.gamma1r == pytest.approx(0.43)
    assert p.mu1r == pytest.approx(0.43)


def test_cone_coefficients_surface():
    p = cone_foundation_params(r=8.0, e=0.0, rho=2.0, nu=0.25, Vs=100.0)
    assert p.gamma0h == pytest.approx(0.68)
    assert p.gamma0r == 0.0
    assert p.fk == 0.0 and p.fc == 0.0


def test_cone_table_values():
    fd = table41_fixture().found
    # the table rounds to at most four significant digits
    expect = dict(k0h=846.0, c0h=90.0, k0r=78310.0, c0r=406.0, c1r=2982.0, I1r=253.0)
    for name, v in expect.items():
        assert getattr(fd, name) == pytest.approx(v, rel=5e-3), name


@pytest.mark.parametrize("kw", [dict(nu=0.5), dict(nu=0.0), dict(Vs=0.0), dict(e=-1.0)])
def test_cone_rejects_bad_parameters(kw):
    args = dict(r=8.0, e=8.0, rho=2.0, nu=0.25, Vs=100.0)
    args.update(kw)
    with pytest.raises(InvalidParameterError):
        cone_foundation_params(**args)


def test_mass_matrix_symmetric():
    for f in (table41_fixture(), table52_fixture()):
        M = f.physical().M
        assert np.max(np.abs(M - M.T)) <= 1e-12 * np.linalg.norm(M)
        assert np.min(np.linalg.eigvalsh(M)) > -1e-12 * np.linalg.norm(M)


def test_physical_model_layout():
    P = table41_fixture().physical()
    assert P.layout.labels == ("u1", "uf", "phi", "phi1")
    assert P.layout.boundary == (1, 2)
    np.testing.assert_allclose(P.K, P.K.T)


def test_flexible_base_frequency(sdof):
    P = sdof.physical()
    w, xi = complex_modes(P.M, P.C, P.K)
    a0 = w[0] * sdof.h / sdof.Vs
    assert a0 == pytest.approx(1.8, rel=0.02)


def test_rigid_base_limit():
    f = table41_fixture()
    rigid = LumpedFoundation(k0h=1e13, c0h=0.0, k0r=1e16, c0r=0.0, c1r=0.0, I1r=1.0)
    P = build_physical_model(rigid, f.stories, e=f.e, mf=1e-6, If=1e-6)
    w, _ = complex_modes(P.M, P.C, P.K)
    assert w[0] == pytest.approx(2 * np.pi / 0.4, rel=5e-3)


def test_fixed_base_frequencies():
    fr = fixed_base_frequencies(table63_building())
    np.testing.assert_allclose(fr, [2.11, 4.82, 6.35, 9.04, 17.50], rtol=0.01)


def test_epp_elastic_branch():
    mat = NonlinearMaterial(247.0, 0.0009, variant="elastic-perfectly-plastic")
    f, kt, _ = material_force(mat, 0.0005)
    assert f == pytest.approx(0.1235)
    assert kt == pytest.approx(247.0)


def test_epp_plateau():
    mat = NonlinearMaterial(247.0, 0.0009, variant="elastic-perfectly-plastic")
    f, kt, _ = material_force(mat, 0.002)
    assert f == pytest.approx(247.0 * 0.0009)
    assert kt == 0.0


def test_kinematic_hardening_monotonic():
    mat = NonlinearMaterial(1e8, 0.001, alpha=0.1)
    state = None
    for u in np.linspace(0, 0.003, 31)[1:]:
        f, kt, state = material_force(mat, u, state)
    assert f == pytest.approx(1.2e5)
    assert kt == pytest.approx(1e7)


def test_material_rejects_bad_yield():
    with pytest.raises(InvalidParameterError):
        NonlinearMaterial(1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        NonlinearMaterial(1.0, 1.0, variant="plastic")


@settings(max_examples=60, deadline=None)
@given(peak=st.floats(1e-4, 5e-3), back=st.floats(1e-6, 1e-4), alpha=st.floats(0.0, 0.5))
def test_unloading_slope_is_elastic(peak, back, alpha):
    mat = NonlinearMaterial(1e8, 0.001, alpha=alpha)
    state = None
    for u in np.linspace(0, peak, 20)[1:]:
        f1, _, state = material_force(mat, u, state)
    f2, _, _ = material_force(mat, peak - back, state)
    assert (f1 - f2) / back == pytest.approx(1e8, rel=1e-6)


def test_period_rigid_limit():
    big = lambda w: 1e18 + 0 * np.asarray(w)  # noqa: E731
    ratio, xi = period_lengthening(100.0, 1.0, 10.0, big, big, xi=0.05)
    assert ratio == pytest.approx(1.0, abs=1e-9)
    assert xi == pytest.approx(0.05)


def test_period_closed_form():
    ks, h = 100.0, 10.0
    ratio, xi = period_lengthening(ks, 1.0, h, lambda w: ks + 0 * w, lambda w: ks * h**2 + 0 * w,
                                   xi=0.05)
    assert ratio == pytest.approx(np.sqrt(3.0))
    assert xi == pytest.approx(0.05 / np.sqrt(3.0) ** 3)


@settings(max_examples=50, deadline=None)
@given(ku=st.floats(1e1, 1e6), kt=st.floats(1e2, 1e8), soften=st.floats(0.05, 0.99))
def test_period_monotone_in_rocking_stiffness(ku, kt, soften):
    ks, h = 1000.0, 5.0
    r1, _ = period_lengthening(ks, 1.0, h, lambda w: ku + 0 * w, lambda w: kt + 0 * w)
    r2, _ = period_lengthening(ks, 1.0, h, lambda w: ku + 0 * w, lambda w: soften * kt + 0 * w)
    assert r2 >= r1


def test_with_yield_sets_story_yield():
    f = table52_fixture()
    fy = f.with_yield(f.extra["epsy"])
    assert [s.u_yield for s in fy.stories] == list(f.extra["epsy"])
    assert not fy.physical().is_linear
    assert f.physical().is_linear


def test_story_list_required():
    with pytest.raises(InvalidParameterError):
        build_physical_model(table41_fixture().found, (), e=1.0, mf=1.0)


def test_story_defaults():
    s = Story(mass=1.0, k=1.0, height=1.0)
    assert np.isinf(s.u_yield)
