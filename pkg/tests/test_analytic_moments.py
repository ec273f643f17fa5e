import numpy as np
import pytest

from paraxial_moments.analytic_moments import (
    BeamMedium,
    gaussian_summation_residual,
    kernel_A,
    kernel_A_grid,
    kernel_K,
    mean_field,
    mean_wigner,
    mu1_limit,
    mu2_limit,
    mu4_limit,
    mutual_coherence,
    wigner_transport_residual,
)
from paraxial_moments.covariance import CovarianceModel

# Frozen oracles.  MU1_MODULUS: exp(-1/8) / |1 + i| in 30-digit arithmetic.
# The others are dense Riemann sums written from the defining integrals with an
# independent erf form of the line integral (agreement between two step sizes
# better than 1e-11).
MU1_MODULUS = 0.624019544193691
COHERENCE_UNIT = 0.461563897680886  # gaussian(1,1), k0=r0=z=1, r=q=0 (mpmath radial)
WIGNER_MEAN = 4.66084110951  # k0=2, r0=1, gaussian(1,1), z=1, r=(0.3,-0.2), xi=(0.4,0.1)
MU2_VALUE = 0.60900347825646 + 0.04773135224516j  # same medium, x=(0.5,0), y=(0,0.25)
A_VALUE = 0.04853712015664 + 0.00486995603489j  # same medium, xi=(0.5,0.2), zeta=(1,-0.5)


def medium(k0=2.0, r0=1.0, c0=1.0, lc=1.0):
    return BeamMedium(k0, r0, CovarianceModel.gaussian(c0, lc))


def test_mean_field_initial_condition():
    bm = medium(r0=1.3)
    x = np.array([0.4, -0.7])
    assert mean_field(bm, 0.0, x).value == pytest.approx(np.exp(-(x @ x) / (2 * 1.3**2)))


def test_mean_field_modulus():
    mv = mean_field(medium(k0=1.0), 1.0, [0, 0])
    assert abs(mv.value) == pytest.approx(MU1_MODULUS, rel=1e-14)
    assert mv.err == 0 and mv.method == "closed-form"


def test_mean_field_pure_diffraction():
    bm = medium(k0=1.5, r0=0.8, c0=0.0)
    z = 2.0
    rz2 = 0.8**2 * (1 + 1j * z / (1.5 * 0.8**2))
    assert abs(mean_field(bm, z, [0, 0]).value) == pytest.approx(0.8**2 / abs(rz2))


def test_coherence_initial_condition():
    bm = medium(r0=1.2)
    r, q = np.array([0.3, 0.1]), np.array([-0.5, 0.4])
    mv = mutual_coherence(bm, 0.0, r, q)
    expected = np.exp(-(q @ q) / (4 * 1.2**2) - (r @ r) / 1.2**2)
    assert mv.value == pytest.approx(expected, rel=1e-10)


def test_coherence_homogeneous_is_product_of_mean_fields():
    bm = medium(k0=1.3, r0=0.9, c0=0.0)
    z, r, q = 2.0, np.array([0.3, -0.2]), np.array([0.5, 0.4])
    expected = mean_field(bm, z, r + q / 2).value * np.conj(mean_field(bm, z, r - q / 2).value)
    assert abs(mutual_coherence(bm, z, r, q).value - expected) < 1e-10


def test_coherence_oracle():
    mv = mutual_coherence(medium(k0=1.0), 1.0, [0, 0], [0, 0])
    assert mv.converged
    assert mv.value == pytest.approx(COHERENCE_UNIT, rel=1e-6)


def test_mean_wigner_initial_condition():
    bm = medium(r0=0.7)
    r, xi = np.array([0.2, 0.1]), np.array([-1.0, 0.5])
    expected = 4 * np.pi * 0.49 * np.exp(-(xi @ xi) * 0.49 - (r @ r) / 0.49)
    assert mean_wigner(bm, 0.0, r, xi).value == pytest.approx(expected, rel=1e-12)


def test_mean_wigner_homogeneous():
    bm = medium(k0=1.3, r0=0.9, c0=0.0)
    z, r, xi = 2.0, np.array([0.3, -0.2]), np.array([0.2, 0.1])
    shift = r - xi * z / 1.3
    expected = 4 * np.pi * 0.81 * np.exp(-0.81 * (xi @ xi) - (shift @ shift) / 0.81)
    assert mean_wigner(bm, z, r, xi).value == pytest.approx(expected, rel=1e-12)


def test_mean_wigner_oracle():
    mv = mean_wigner(medium(), 1.0, [0.3, -0.2], [0.4, 0.1])
    assert mv.converged and mv.value.imag == 0
    assert mv.value.real == pytest.approx(WIGNER_MEAN, rel=1e-8)


def test_transport_residual_single_point():
    res = wigner_transport_residual(medium(k0=4.0, c0=1.0), 0.5, [0.3, 0.1], [0.5, -0.4])
    assert res.relative < 1e-4
    assert res.converged


def test_transport_residual_rejects_bad_input():
    with pytest.raises(ValueError):
        wigner_transport_residual(medium(), 0.0, [0, 0], [0, 0])
    with pytest.raises(ValueError):
        wigner_transport_residual(medium(), 1.0, [0, 0], [0, 0], dz=0.6)


def test_kernel_K():
    bm = medium(k0=2.0, c0=0.5)
    assert kernel_K(bm, 0.0) == pytest.approx((2 * np.pi) ** 8)
    assert kernel_K(bm, 1.0) == pytest.approx((2 * np.pi) ** 8 * np.exp(-1))
    zs = np.linspace(0, 3, 7)
    assert np.all(np.diff([kernel_K(bm, z) for z in zs]) < 0)


def test_kernel_A_zero_distance():
    assert kernel_A(medium(), 0.0, [0.3, 0.2], [1.0, 2.0]).value == 0
    vals, _ = kernel_A_grid(medium(), 0.0, [1.0, 2.0], n=64)
    assert np.all(vals == 0)


def test_kernel_A_oracle_and_symmetry():
    bm = medium()
    a = kernel_A(bm, 1.0, [0.5, 0.2], [1.0, -0.5])
    b = kernel_A(bm, 1.0, [-0.5, -0.2], [-1.0, 0.5])
    assert abs(a.value - A_VALUE) < 1e-10
    assert abs(a.value - b.value) <= a.err + b.err + 1e-12


def test_kernel_A_grid_matches_pointwise():
    bm = medium()
    zeta = np.array([1.0, -0.5])
    vals, xi = kernel_A_grid(bm, 1.0, zeta, n=128, h=0.25)
    for i, j in ((70, 64), (60, 66), (64, 64)):
        pt = kernel_A(bm, 1.0, [xi[i], xi[j]], zeta).value
        assert abs(vals[i, j] - pt) < 1e-9


def test_mu1_limit():
    bm = medium(k0=2.0, r0=1.5, c0=0.5)
    r = np.array([0.4, 0.3])
    assert mu1_limit(bm, 0.8, r).value == pytest.approx(
        np.exp(-4 * 0.5 * 0.8 / 8 - (r @ r) / (2 * 2.25)))


def test_mu2_limit_initial_condition():
    bm = medium(r0=1.1)
    r = np.array([0.2, -0.5])
    mv = mu2_limit(bm, 0.0, r, [1.0, 0.0], [0.0, -2.0])
    assert mv.value == pytest.approx(np.exp(-(r @ r) / 1.21), rel=1e-10)


def test_mu2_limit_oracle():
    mv = mu2_limit(medium(), 1.0, [0.3, -0.2], [0.5, 0.0], [0.0, 0.25])
    assert abs(mv.value - MU2_VALUE) < 1e-10


def test_mu4_limit_deterministic_center():
    p = [0.3, 0.2]
    assert mu4_limit(medium(), 0.0, [0, 0], p, p, p, p).value == pytest.approx(1.0, abs=1e-10)


def test_gsr_residual_path_consistency():
    bm = medium()
    args = ([0.1, 0.2], [0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.3, 0.3])
    assert gaussian_summation_residual(bm, 0.0, *args) < 1e-10
    m4 = mu4_limit(bm, 0.7, *args)
    assert gaussian_summation_residual(bm, 0.7, *args) <= 10 * m4.err + 1e-12


def test_plane_wave_rejected():
    with pytest.raises(ValueError):
        BeamMedium(1.0, np.inf, CovarianceModel.gaussian())


@pytest.mark.parametrize("z", [-1.0, np.nan])
def test_negative_distance_rejected(z):
    with pytest.raises(ValueError):
        mean_field(medium(), z, [0, 0])
