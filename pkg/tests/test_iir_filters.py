import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import bilinear, lfilter

from ssikit.iir_filters import (IirFilter, RecursiveDftEvaluator, RepeatedPoleError,
                                bilinear_sdof_reference, fit_error, fit_iir_least_squares,
                                iir_force, iir_force_series, partial_fraction_to_z,
                                stabilize_poles)


def test_single_real_pole():
    f = partial_fraction_to_z([-1.0], [1.0], 0.1)
    assert f.b[0] == pytest.approx(np.exp(-0.05))
    assert f.a[0] == pytest.approx(-np.exp(-0.1))


def test_conjugate_pair_gives_real_coefficients():
    s = np.array([-0.5 + 3j, -0.5 - 3j])
    A = np.array([1.0 - 2j, 1.0 + 2j])
    f = partial_fraction_to_z(s, A, 0.05)
    assert f.b.dtype == float and f.a.dtype == float
    # impulse response equals the sum of sampled exponentials
    n = np.arange(40)
    h = np.real(np.sum(A[:, None] * np.exp(s[:, None] * 0.05 * (n + 0.5)), axis=0))
    np.testing.assert_allclose(f.impulse_response(40), h, atol=1e-12)


def test_repeated_pole():
    with pytest.raises(RepeatedPoleError):
        partial_fraction_to_z([-1.0, -1.0], [1.0, 2.0], 0.1)


@pytest.mark.parametrize("wn,xi,dt", [(2 * np.pi * 5, 0.05, 0.005), (3.0, 0.2, 0.1), (10.0, 0.0, 0.02)])
def test_bilinear_matches_scipy(wn, xi, dt):
    f = bilinear_sdof_reference(wn, xi, dt)
    b, a = bilinear([2 * xi * wn, wn**2], [1.0, 2 * xi * wn, wn**2], fs=1 / dt)
    np.testing.assert_allclose(f.b, b / a[0], rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(f.a, a[1:] / a[0], rtol=1e-12)


def test_bilinear_properties():
    f = bilinear_sdof_reference(2 * np.pi, 0.0, 0.01)
    np.testing.assert_allclose(np.abs(f.poles), 1.0, rtol=1e-12)
    g = bilinear_sdof_reference(2 * np.pi * 5, 0.05, 0.005)
    assert g.response(0.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        bilinear_sdof_reference(400.0, 0.05, 0.01)


def test_fit_recovers_known_filter():
    true = IirFilter([0.3, -0.1, 0.05], [-0.9, 0.4])
    W = np.linspace(0, 3.0, 50)
    f = fit_iir_least_squares(W, true.response(W), 2, 2)
    np.testing.assert_allclose(f.b, true.b, atol=1e-8)
    np.testing.assert_allclose(f.a, true.a, atol=1e-8)


def test_fit_constant():
    W = np.linspace(0, 3.0, 20)
    f = fit_iir_least_squares(W, np.full(20, 4.0 + 0j), 0, 1)
    np.testing.assert_allclose(f.response(W), 4.0, atol=1e-9)


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit_iir_least_squares(np.linspace(0, 1, 3), np.ones(3), 2, 2)
    with pytest.raises(ValueError):
        fit_iir_least_squares(np.linspace(0, 4, 10), np.ones(10), 1, 1)


def test_stabilize_reflects_outside_pole():
    f = IirFilter([1.0], [-1.25])
    g = stabilize_poles(f)
    assert g.poles[0] == pytest.approx(0.8)
    assert abs(g.response(0.0)) == pytest.approx(abs(f.response(0.0)))
    h = IirFilter([1.0], [-0.5])
    assert stabilize_poles(h) is h


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**16), n=st.integers(1, 8))
def test_stabilize_always_inside(seed, n):
    rng = np.random.default_rng(seed)
    f = IirFilter(rng.standard_normal(3), 3 * rng.standard_normal(n))
    assert np.max(np.abs(stabilize_poles(f).poles)) < 1


def test_force_zero_history():
    f = IirFilter([1.0, 0.5], [-0.3])
    assert iir_force(f, np.zeros(6), np.zeros(5)) == 0.0


def test_impulse_response_long_division():
    f = IirFilter([1.0, 0.5], [-0.3, 0.02])
    h = np.zeros(20)
    x = np.zeros(20)
    x[0] = 1.0
    for n in range(20):
        h[n] = iir_force(f, x[: n + 1], h[:n])
    np.testing.assert_allclose(f.impulse_response(20), h, rtol=1e-14)
    np.testing.assert_allclose(iir_force_series(f, x), lfilter(f.b, f.denominator, x))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**16), k=st.integers(0, 20))
def test_time_invariance(seed, k):
    rng = np.random.default_rng(seed)
    f = IirFilter([0.4, 0.1], [-0.5, 0.1])
    u = rng.standard_normal(60)
    y = iir_force_series(f, u)
    ys = iir_force_series(f, np.r_[np.zeros(k), u])
    np.testing.assert_allclose(ys[k:], y, rtol=1e-12, atol=1e-12)


def test_recursive_dft_matches_circular_convolution():
    N, dt = 64, 0.05
    rng = np.random.default_rng(7)
    ev = RecursiveDftEvaluator.from_function(lambda w: 3.0 / (1 + 0.2j * w) + 0.5j * w, N, dt)
    kernel = np.fft.ifft(ev.S)
    u = rng.standard_normal(N)
    ubar = 0.5 * (u + np.r_[0.0, u[:-1]])
    ref = np.array([np.sum(kernel[: n + 1][::-1] * ubar[: n + 1]).real for n in range(N)])
    np.testing.assert_allclose(ev.series(u), ref, atol=1e-10 * np.max(np.abs(ref)))


def test_recursive_dft_zero_input():
    ev = RecursiveDftEvaluator(np.ones(16, complex), 0.1)
    assert np.all(ev.series(np.zeros(30)) == 0)


def test_fit_residual_does_not_grow_with_order():
    # richer models cannot fit worse in the equation-error sense
    W = np.linspace(0, 2.5, 60)
    S = 1 / (1 + 1j * W) + 0.3 * np.exp(-2j * W)
    errs = [fit_error(fit_iir_least_squares(W, S, n, n), W, S) for n in (1, 2, 4)]
    assert errs[1] <= errs[0] * (1 + 1e-9) and errs[2] <= errs[1] * (1 + 1e-9)


def test_text_round_trip():
    f = IirFilter([0.1, 1e-17, -3.5], [0.25, -0.125], dt=0.02)
    g = IirFilter.from_text(f.to_text())
    np.testing.assert_array_equal(g.b, f.b)
    np.testing.assert_array_equal(g.a, f.a)
    assert g.dt == f.dt
