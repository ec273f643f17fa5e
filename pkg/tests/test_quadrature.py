import warnings

import numpy as np
import pytest

from paraxial_moments.quadrature import (
    NonConvergenceWarning,
    QuadratureSpec,
    grid_axis,
    grid_fourier_2d,
    integrate_2d,
    integrate_nested_4d,
    inverse_grid_fourier_2d,
)

FOURIER_GAUSS = 4 * np.pi * np.exp(-1)  # int exp(-|x|^2/4 + i x_1) dx


def gauss(x):
    return np.exp(-np.sum(x * x, axis=-1))


def test_gaussian_integral():
    res = integrate_2d(gauss, 1.0)
    assert res.converged
    assert res.value == pytest.approx(np.pi, rel=1e-12)


def test_oscillatory_gaussian_integral():
    res = integrate_2d(lambda x: np.exp(-np.sum(x * x, axis=-1) / 4), 2.0,
                       phase=np.array([1.0, 0.0]))
    assert abs(res.value - FOURIER_GAUSS) < 1e-10
    # dense Riemann sum oracle
    x = np.linspace(-16, 16, 1601)
    h = x[1] - x[0]
    X, Y = np.meshgrid(x, x, indexing="ij")
    riemann = np.sum(np.exp(-(X**2 + Y**2) / 4 + 1j * X)) * h * h
    assert abs(res.value - riemann) < 1e-10


def test_zero_integrand():
    res = integrate_2d(lambda x: np.zeros(len(x)), 1.0)
    assert res.value == 0 and res.converged


def test_fast_phase_uses_grid_path():
    a = np.array([30.0, 10.0])
    res = integrate_2d(lambda x: np.exp(-np.sum(x * x, axis=-1) / 4), 2.0, phase=a)
    assert res.method == "fourier-grid"
    assert abs(res.value - 4 * np.pi * np.exp(-a @ a)) < 1e-12


def test_shifted_center():
    c = np.array([3.0, -2.0])
    res = integrate_2d(lambda x: gauss(x - c), 1.0, center=c)
    assert res.value == pytest.approx(np.pi, rel=1e-12)


def test_refinement_monotone_on_random_gaussians():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = rng.uniform(0.3, 3.0)
        c = rng.uniform(-1, 1, 2)
        res = integrate_2d(lambda x: np.exp(-a * np.sum((x - c) ** 2, axis=-1)),
                           1 / np.sqrt(a), center=c)
        assert res.value == pytest.approx(np.pi / a, rel=1e-10)
        assert all(b <= a_ * (1 + 1e-9) or b < 1e-13
                   for a_, b in zip(res.history, res.history[1:]))


def test_linearity():
    f = lambda x: np.exp(-np.sum(x * x, axis=-1)) * (1 + x[:, 0] ** 2)  # noqa: E731
    g = lambda x: np.exp(-2 * np.sum(x * x, axis=-1)) * np.cos(x[:, 1])  # noqa: E731
    a, b = 1.7, -0.4
    lhs = integrate_2d(lambda x: a * f(x) + b * g(x), 1.0).value
    rhs = a * integrate_2d(f, 1.0).value + b * integrate_2d(g, 1.0).value
    assert abs(lhs - rhs) < 1e-11


def test_nonconvergence_flag():
    spec = QuadratureSpec(rel_tol=1e-15, abs_tol=0, max_level=3)
    with pytest.warns(NonConvergenceWarning):
        res = integrate_2d(lambda x: np.exp(-np.sum(np.abs(x), axis=-1) ** 1.5), 1.0, spec)
    assert not res.converged
    assert np.isfinite(res.value) and res.err > 0


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_level=1)


def test_nested_4d_gaussian():
    f = lambda o, i: np.exp(-np.sum(o * o, -1)[:, None] - np.sum(i * i, -1))  # noqa: E731
    box = lambda o: (np.full_like(o, -6.0), np.full_like(o, 6.0))  # noqa: E731
    res = integrate_nested_4d(f, (0, 0), 1.0, box, QuadratureSpec(truncation_sigmas=6))
    assert res.converged
    assert res.value == pytest.approx(np.pi**2, rel=1e-10)


def test_delta_has_flat_spectrum():
    s = np.zeros((16, 16))
    s[8, 8] = 1.0
    spec, _ = grid_fourier_2d(s, 1.0)
    assert np.allclose(spec, 1.0, atol=1e-15)


def test_gaussian_transform_pair():
    n, h = 256, 0.1
    x = grid_axis(n, h)
    X, Y = np.meshgrid(x, x, indexing="ij")
    spec, xi = grid_fourier_2d(np.exp(-(X**2 + Y**2) / 2), h)
    K1, K2 = np.meshgrid(xi, xi, indexing="ij")
    exact = 2 * np.pi * np.exp(-(K1**2 + K2**2) / 2)
    interior = exact > 1e-3
    assert np.max(np.abs(spec[interior] / exact[interior] - 1)) < 1e-6
    assert np.max(np.abs(spec.imag)) < 1e-12


def test_round_trip():
    rng = np.random.default_rng(1)
    f = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
    spec, _ = grid_fourier_2d(f, 0.3)
    back = inverse_grid_fourier_2d(spec, 0.3)
    assert np.max(np.abs(back - f)) <= 1e-12 * np.max(np.abs(f))


def test_grid_size_must_be_power_of_two():
    with pytest.raises(ValueError):
        grid_fourier_2d(np.zeros((12, 12)), 1.0)
