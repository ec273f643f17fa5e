import numpy as np
import pytest

from paraxial_moments.analytic_moments import BeamMedium
from paraxial_moments.covariance import CovarianceModel
from paraxial_moments.scintillation import strong_regime_stats
from paraxial_moments.wigner_stats import (
    MomentInconsistencyError,
    SmoothingParams,
    cv_strong,
    fig2_axes,
    fig2_contours,
    scattered_spectrum,
    smoothed_cv,
    smoothed_mean,
    smoothed_second_moment,
    strong_smoothed_mean,
    strong_smoothed_second_moment,
)

# 4-D Riemann sum over (zeta, x) of the defining integral with an independent erf
# line integral; two step sizes agree to 1e-10
SMOOTHED_MEAN = 3.740163909  # k0=2, r0=1, gaussian(1,1), z=1, r=(0.3,-0.2), xi=(0.4,0.1), xi_s=0.8


def medium(k0=2.0, r0=1.0, c0=1.0, lc=1.0):
    return BeamMedium(k0, r0, CovarianceModel.gaussian(c0, lc))


@pytest.fixture(scope="module")
def spectrum():
    return scattered_spectrum(medium(), 1.0, [0.3, -0.2])


def test_smoothing_params():
    sp = SmoothingParams.husimi(2.0)
    assert sp.r_s == 0.25 and sp.is_husimi
    assert not SmoothingParams(0.5, 2.0).is_husimi
    with pytest.raises(ValueError):
        SmoothingParams(0.1, 0.0)
    with pytest.raises(ValueError):
        SmoothingParams(-0.1, 1.0)


def test_mean_at_zero_distance():
    sp = SmoothingParams(0.3, 0.8)
    r, xi = np.array([0.3, 0.1]), np.array([0.2, 0.5])
    expected = 2 * np.pi / 0.64 * np.exp(-(xi @ xi) / 1.28 - (r @ r))
    assert smoothed_mean(medium(), sp, 0.0, r, xi).value == pytest.approx(expected, rel=1e-12)


def test_second_moment_at_zero_distance():
    sp = SmoothingParams(0.3, 0.8)
    m = smoothed_mean(medium(), sp, 0.0, [0.1, 0], [0.2, 0]).value
    s = smoothed_second_moment(medium(), sp, 0.0, [0.1, 0], [0.2, 0]).value
    assert s == pytest.approx(m.real**2, rel=1e-14)


def test_mean_oracle(spectrum):
    mv = smoothed_mean(medium(), SmoothingParams(0.3, 0.8), 1.0, [0.3, -0.2], [0.4, 0.1],
                       spectrum)
    assert mv.converged
    assert mv.value.real == pytest.approx(SMOOTHED_MEAN, rel=1e-7)


def test_mean_independent_of_position_smoothing(spectrum):
    args = (1.0, [0.3, -0.2], [0.4, 0.1], spectrum)
    a = smoothed_mean(medium(), SmoothingParams(0.3, 0.8), *args).value
    b = smoothed_mean(medium(), SmoothingParams(1.7, 0.8), *args).value
    assert a == b


def test_variance_nonnegative(spectrum):
    rng = np.random.default_rng(11)
    for _ in range(20):
        sp = SmoothingParams(rng.uniform(0, 2), rng.uniform(0.2, 3))
        xi = rng.uniform(-2, 2, 2)
        m = smoothed_mean(medium(), sp, 1.0, [0.3, -0.2], xi, spectrum)
        s = smoothed_second_moment(medium(), sp, 1.0, [0.3, -0.2], xi, spectrum)
        assert s.value.real >= m.value.real**2 - s.err


def test_smoothed_cv_consistent(spectrum):
    sp = SmoothingParams.husimi(0.8)
    cv, mean = smoothed_cv(medium(), sp, 1.0, [0.3, -0.2], [0.4, 0.1], spectrum)
    s = smoothed_second_moment(medium(), sp, 1.0, [0.3, -0.2], [0.4, 0.1], spectrum).value.real
    assert cv == pytest.approx(np.sqrt(s / mean**2 - 1), rel=1e-12)


def test_spectrum_vanishes_without_medium():
    sp = scattered_spectrum(medium(c0=0.0), 1.0, [0, 0], n=64, h=0.25)
    assert np.all(sp.values == 0) and sp.converged


@pytest.mark.slow
def test_strong_regime_asymptotics():
    bm = medium(k0=8.0, r0=3.0)
    z = 1.25  # z / Z_sca = 10
    st = strong_regime_stats(bm, z)
    r = np.array([0.5, -0.3])
    spec = scattered_spectrum(bm, z, r)
    for xi_s in (1 / st.rho_z, 10.0):
        for sp in (SmoothingParams.husimi(xi_s), SmoothingParams(1 / xi_s, xi_s),
                   SmoothingParams(0.0, xi_s)):
            for xi in ([0.0, 0.0], [3.0, -2.0]):
                m = smoothed_mean(bm, sp, z, r, xi, spec).value.real
                s = smoothed_second_moment(bm, sp, z, r, xi, spec).value.real
                assert m == pytest.approx(strong_smoothed_mean(bm, sp, z, r, xi), rel=0.05)
                assert s == pytest.approx(strong_smoothed_second_moment(bm, sp, z, r, xi),
                                          rel=0.05)


def test_strong_closed_forms_match_cv_strong():
    bm = medium(k0=3.0, r0=0.7, c0=2.0, lc=1.3)
    for z in (0.5, 2.0):
        rho = strong_regime_stats(bm, z).rho_z
        for sp in (SmoothingParams(0.4, 1.1), SmoothingParams(0.0, 2.0),
                   SmoothingParams(2.0, 0.3)):
            m = strong_smoothed_mean(bm, sp, z, [0.1, 0.2], [0.3, 0.0])
            s = strong_smoothed_second_moment(bm, sp, z, [0.1, 0.2], [0.3, 0.0])
            assert s / m**2 - 1 == pytest.approx(cv_strong(sp, rho) ** 2, rel=1e-12)


def test_cv_strong_examples():
    rng = np.random.default_rng(2)
    for xi_s, rho in rng.uniform(0.05, 20, (50, 2)):
        assert cv_strong(SmoothingParams.husimi(xi_s), rho) == pytest.approx(1.0, abs=1e-12)
    assert cv_strong(SmoothingParams(0.0, 2.0), 0.7) == pytest.approx(np.sqrt(1 + 1 / 1.4**2))
    assert cv_strong(SmoothingParams(0.0, 1e6), 1.0) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        cv_strong(SmoothingParams(0.0, 1.0), 0.0)


def test_fig2_examples():
    cv = fig2_contours([0.5, 0.0, 1.0], [1.0])
    assert cv[0, 0] == 1.0
    assert cv[1, 0] == pytest.approx(np.sqrt(2), rel=1e-15)
    assert cv[2, 0] == pytest.approx(np.sqrt(2 / 5), rel=1e-15)


def test_fig2_hyperbola_and_monotonicity():
    rs, xs = fig2_axes(n=200)
    assert len(rs) == len(xs) == 200 and rs[0] > 0 and xs[0] > 0
    cv = fig2_contours(rs, xs)
    assert np.all(np.diff(cv, axis=0) < 0) and np.all(np.diff(cv, axis=1) < 0)
    on_curve = fig2_contours(1 / (2 * xs), xs)
    assert np.allclose(np.diag(on_curve), 1.0, atol=1e-15)
    with pytest.raises(ValueError):
        fig2_contours([0.5], [0.0])


def test_inconsistency_error_is_arithmetic():
    assert issubclass(MomentInconsistencyError, ArithmeticError)
