import numpy as np
import pytest
from scipy import integrate

from paraxial_moments.covariance import CovarianceError, CovarianceModel

# frozen oracles: direct evaluation, 1-D quadrature (mpmath) and a numeric Fourier sum
LINE_UNIT_GAUSSIAN = 0.746824132812427  # int_0^1 exp(-t^2) dt
CHAT_LC2_K1 = 4.622909399163687  # 4 pi / e


def test_eval_C_examples():
    assert CovarianceModel.gaussian(1, 1).eval_C([0, 0]) == 1.0
    assert CovarianceModel.gaussian(1, 1).eval_C([1, 0]) == pytest.approx(np.exp(-1), rel=1e-14)
    assert CovarianceModel.gaussian(2, 0.5).eval_C([0.5, 0]) == pytest.approx(2 * np.exp(-1))


def test_eval_C_hat_examples():
    assert CovarianceModel.gaussian(1, 1).eval_C_hat([0, 0]) == pytest.approx(np.pi, rel=1e-14)
    assert CovarianceModel.gaussian(1, 2).eval_C_hat([1, 0]) == pytest.approx(CHAT_LC2_K1,
                                                                           rel=1e-12)


@pytest.mark.parametrize("k", [(0.0, 0.0), (1.0, 0.0), (0.7, -1.3), (2.0, 2.0)])
def test_C_hat_matches_numeric_fourier_transform(k):
    cov = CovarianceModel.gaussian(1.3, 0.8)
    x = np.linspace(-8, 8, 801)
    h = x[1] - x[0]
    X, Y = np.meshgrid(x, x, indexing="ij")
    C = cov.eval_C(np.stack([X, Y], -1))
    numeric = np.sum(C * np.exp(-1j * (k[0] * X + k[1] * Y))) * h * h
    assert abs(numeric - cov.eval_C_hat(k)) <= 1e-6 * cov.eval_C_hat([0, 0])


def test_spectrum_nonnegative_on_grid():
    report = CovarianceModel.gaussian(1, 1).check_admissible(64)
    assert report["min_spectrum_ratio"] >= 0


@pytest.mark.parametrize("c0,lc,gamma", [(1, 1, 2.0), (4, 2, 2.0), (1, 10, 0.02)])
def test_gamma_curvature(c0, lc, gamma):
    cov = CovarianceModel.gaussian(c0, lc)
    assert cov.gamma_curvature() == pytest.approx(gamma, rel=1e-14)
    # second difference oracle with Richardson extrapolation
    d = [2 * (cov.eval_C([0, 0]) - cov.eval_C([h, 0])) / h**2 for h in (0.02 * lc, 0.01 * lc)]
    assert (4 * d[1] - d[0]) / 3 == pytest.approx(gamma, rel=1e-6)


def test_line_averaged_examples():
    cov = CovarianceModel.gaussian(1, 1)
    k0 = 2.5
    assert cov.line_averaged([0, 0], [k0, 0], 1.0, k0) == pytest.approx(LINE_UNIT_GAUSSIAN,
                                                                       rel=1e-12)
    q = np.array([0.3, -0.4])
    assert cov.line_averaged(q, [0, 0], 1.7, k0) == pytest.approx(1.7 * cov.eval_C(q), rel=1e-12)
    assert cov.line_averaged(q, [1, 2], 0.0, k0) == 0.0


@pytest.mark.parametrize("q,zeta,z", [((0.5, 0.2), (3.0, -1.0), 2.0),
                                      ((-1.0, 0.0), (0.1, 0.0), 0.5),
                                      ((2.0, 1.0), (-4.0, -2.0), 1.5),
                                      ((0.0, 0.0), (1e-5, 0.0), 1.0)])
def test_line_averaged_matches_quad(q, zeta, z):
    cov = CovarianceModel.gaussian(0.7, 1.2)
    k0 = 1.5
    ref, _ = integrate.quad(lambda t: float(cov.eval_C(np.add(q, np.multiply(zeta, t / k0)))),
                            0, z, epsabs=0, epsrel=1e-13)
    assert cov.line_averaged(q, zeta, z, k0) == pytest.approx(ref, rel=1e-10)


def test_line_averaged_vector_z():
    cov = CovarianceModel.gaussian(1, 1)
    zs = [0.0, 0.5, 1.0]
    out = cov.line_averaged([0.1, 0.2], [1.0, -0.5], zs, 1.0)
    assert out.shape == (3,)
    for z, v in zip(zs, out):
        assert v == pytest.approx(cov.line_averaged([0.1, 0.2], [1.0, -0.5], z, 1.0), abs=1e-15)


def test_tabulated_matches_gaussian():
    s = np.linspace(0, 7, 701)
    tab = CovarianceModel.tabulated(s, np.exp(-s * s), c0=1.5, lc=0.8)
    gau = CovarianceModel.gaussian(1.5, 0.8)
    x = np.array([[0.1, 0.2], [0.5, -0.3], [1.0, 1.0]])
    assert np.allclose(tab.eval_C(x), gau.eval_C(x), rtol=1e-6)
    assert tab.eval_C_hat([0.9, 0.4]) == pytest.approx(gau.eval_C_hat([0.9, 0.4]), rel=1e-6)
    assert tab.gamma_curvature() == pytest.approx(gau.gamma_curvature(), rel=1e-4)
    assert tab.line_averaged([0.2, 0.1], [1.0, 2.0], 1.5, 2.0) == pytest.approx(
        gau.line_averaged([0.2, 0.1], [1.0, 2.0], 1.5, 2.0), rel=1e-6)
    assert tab.eval_C([10.0, 0.0]) == 0.0


def test_from_csv(tmp_path):
    s = np.linspace(0, 6, 61)
    path = tmp_path / "profile.csv"
    path.write_text("radius,value\n" + "".join(f"{a},{np.exp(-a * a)}\n" for a in s))
    cov = CovarianceModel.from_csv(path, c0=2.0)
    assert cov.kind == "tabulated"
    assert cov.eval_C([0, 0]) == pytest.approx(2.0)


@pytest.mark.parametrize("kwargs", [dict(kind="exotic"), dict(c0=-1.0), dict(lc=0.0),
                                    dict(c0=np.inf)])
def test_invalid_models(kwargs):
    with pytest.raises(CovarianceError):
        CovarianceModel(**kwargs)


def test_invalid_tables():
    s = np.linspace(0, 5, 20)
    with pytest.raises(CovarianceError):
        CovarianceModel.tabulated(s, 2 * np.exp(-s * s))
    with pytest.raises(CovarianceError):
        CovarianceModel.tabulated(s[::-1], np.exp(-s * s))
    # a box profile has a spectrum with negative lobes
    with pytest.raises(CovarianceError):
        CovarianceModel.tabulated(s, np.where(s < 1, 1.0, 0.0))


def test_zero_strength_medium():
    cov = CovarianceModel.gaussian(0.0, 1.0)
    assert cov.line_averaged([0, 0], [1, 1], 2.0, 1.0) == 0.0
    assert cov.gamma_curvature() == 0.0


def test_profile_integral():
    gau = CovarianceModel.gaussian()
    assert gau.profile_integral(1.0) == pytest.approx(LINE_UNIT_GAUSSIAN, rel=1e-14)
    s = np.linspace(0, 7, 701)
    tab = CovarianceModel.tabulated(s, np.exp(-s * s))
    for t in (0.3, 1.0, 2.5, 50.0):
        top = min(t, 7.0)
        ref, _ = integrate.quad(lambda u: float(tab.profile(u)), 0, top, limit=2000,
                                points=s[(s > 0) & (s < top)], epsabs=0, epsrel=1e-12)
        assert tab.profile_integral(t) == pytest.approx(ref, rel=1e-9)
