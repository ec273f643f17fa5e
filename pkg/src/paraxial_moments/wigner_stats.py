"""Mean, second moment and coefficient of variation of the smoothed Wigner transform.

The Wigner transform is smoothed by Gaussians of width ``r_s`` in position
(measured on the microscopic scale) and ``xi_s`` in angle.  All arguments are in
scintillation-regime units.

The general formulas need the frequency integral

    F(alpha) = int A(z, alpha, zeta) exp(i zeta.r - r0^2 |zeta|^2 / 4 - i z/k0 zeta.alpha) dzeta

on a grid of angles ``alpha``; it is built from batches of A-grids (one FFT per
``zeta`` node).  The Gaussian smoothing integrals are then done in closed form,
which leaves the mean as a single windowed sum over ``alpha`` and the second
moment as a single and a double windowed sum.  The double sum has a kernel that
factorizes over the two coordinates, so it costs ``O(n^3)`` on an ``n x n`` grid.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .analytic_moments import BeamMedium, MomentValue, _check_z, _vec, kernel_A_grid, kernel_K
from .quadrature import NonConvergenceWarning, composite_gauss_legendre

__all__ = [
    "SmoothingParams",
    "MomentInconsistencyError",
    "ScatteredSpectrum",
    "scattered_spectrum",
    "smoothed_mean",
    "smoothed_second_moment",
    "smoothed_cv",
    "strong_smoothed_mean",
    "strong_smoothed_second_moment",
    "cv_strong",
    "fig2_axes",
    "fig2_contours",
]


class MomentInconsistencyError(ArithmeticError):
    """Second moment below the squared mean by more than the error estimate."""


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing widths in position (``r_s``) and angle (``xi_s``)."""

    r_s: float
    xi_s: float

    def __post_init__(self):
        if not (np.isfinite(self.xi_s) and self.xi_s > 0):
            raise ValueError("xi_s must be positive")
        if not (np.isfinite(self.r_s) and self.r_s >= 0):
            raise ValueError("r_s must be nonnegative")

    @classmethod
    def husimi(cls, xi_s: float) -> "SmoothingParams":
        """Minimal smoothing ``2 xi_s r_s = 1``, which makes the transform nonnegative."""
        return cls(1.0 / (2.0 * xi_s), xi_s)

    @property
    def is_husimi(self) -> bool:
        return bool(np.isclose(2 * self.xi_s * self.r_s, 1.0, rtol=1e-12, atol=0))


# ------------------------------------------------------------------ spectrum F
@dataclass
class ScatteredSpectrum:
    """``F`` on the angle grid ``alpha x alpha`` with its error bound."""

    values: np.ndarray
    alpha: np.ndarray
    err: float
    converged: bool

    @property
    def step(self) -> float:
        return float(self.alpha[1] - self.alpha[0])


_ZETA_ORDERS = (8, 12, 16, 20, 24, 32, 40, 48)


def _default_grid(bm, z, sigmas):
    lc = bm.cov.lc
    # spectral width of the bracket: medium scale, or the correlation scale once
    # scattering is strong
    k_width = max(1.0 / lc, np.sqrt(bm.k0**2 * bm.cov.gamma_curvature() * z / 4))
    h = min(lc / 4, np.pi / (9 * k_width))
    segment = sigmas * 2 / bm.r0 * z / bm.k0
    extent = segment + 2 * bm.cov.support_radius
    n = 64
    while n * h < 2 * extent and n < 4096:
        n *= 2
    return n, h


def scattered_spectrum(bm: BeamMedium, z: float, r, n: int | None = None,
                       h: float | None = None, rel_tol: float = 1e-7,
                       truncation_sigmas: float = 4.0, batch: int | None = None
                       ) -> ScatteredSpectrum:
    """Frequency integral ``F(alpha)`` of the scattering kernel on an angle grid.

    Parameters
    ----------
    n, h : optional
        Position grid of the A-grids (size, spacing); the angle grid is its
        Fourier dual.  Defaults cover the kernel support and resolve its spectrum.
    rel_tol : float
        Refinement of the ``zeta`` rule stops once ``max |dF| <= rel_tol max |F|``.
    """
    _check_z(z)
    r = _vec(r)
    if n is None or h is None:
        n0, h0 = _default_grid(bm, z, truncation_sigmas)
        n, h = n or n0, h or h0
    alpha = None
    if z == 0 or bm.c0 == 0:
        _, alpha = kernel_A_grid(bm, 0.0, np.zeros(2), n, h)
        return ScatteredSpectrum(np.zeros((n, n)), alpha, 0.0, True)
    batch = batch or max(1, 2**22 // (n * n))
    kappa = z / bm.k0
    half = truncation_sigmas * 2 / bm.r0
    prev = None
    err = np.inf
    for order in _ZETA_ORDERS:
        t, w = composite_gauss_legendre(-half, half, 2, order)
        # A(xi, -zeta) = conj A(xi, zeta): the zeta1 < 0 half adds the complex
        # conjugate, so F = 2 Re (sum over zeta1 > 0)
        pos = t > 0
        T1, T2 = np.meshgrid(t[pos], t, indexing="ij")
        zeta = np.stack([T1.ravel(), T2.ravel()], axis=-1)
        weight = np.outer(w[pos], w).ravel() * np.exp(
            1j * (zeta @ r) - bm.r0**2 * np.sum(zeta**2, axis=1) / 4)
        F = np.zeros((n, n), dtype=complex)
        for s in range(0, len(zeta), batch):
            zb = zeta[s:s + batch]
            A, alpha = kernel_A_grid(bm, z, zb, n, h)
            ph1 = np.exp(-1j * kappa * np.multiply.outer(zb[:, 0], alpha))
            ph2 = np.exp(-1j * kappa * np.multiply.outer(zb[:, 1], alpha))
            A *= (weight[s:s + batch, None] * ph1)[:, :, None]
            A *= ph2[:, None, :]
            F += A.sum(axis=0)
        F = 2 * F.real
        if prev is not None:
            err = float(np.max(np.abs(F - prev)))
            if err <= rel_tol * np.max(np.abs(F)):
                return ScatteredSpectrum(F, alpha, err, True)
        prev = F
    warnings.warn("zeta rule for the scattered spectrum did not converge",
                  NonConvergenceWarning, stacklevel=2)
    return ScatteredSpectrum(F, alpha, err, False)


# ------------------------------------------------------------------ moments
def _coherent(bm, sp, z, r, xi):
    return (np.sqrt(kernel_K(bm, z)) / ((2 * np.pi) ** 3 * sp.xi_s**2)
            * np.exp(-(xi @ xi) / (2 * sp.xi_s**2) - (r @ r) / bm.r0**2))


def _window(alpha, center, width2):
    """Separable Gaussian ``exp(-|alpha - center|^2 / width2)`` as two 1-D factors."""
    return (np.exp(-(alpha - center[0]) ** 2 / width2),
            np.exp(-(alpha - center[1]) ** 2 / width2))


def _windowed_sum(F, wx, wy, step):
    return float(wx @ F @ wy) * step**2


def _incoherent(bm, sp, z, xi, spec):
    pref = np.sqrt(kernel_K(bm, z)) * bm.r0**2 / ((2 * np.pi) ** 4 * sp.xi_s**2)
    wx, wy = _window(spec.alpha, xi, 2 * sp.xi_s**2)
    val = pref * _windowed_sum(spec.values, wx, wy, spec.step)
    err = pref * spec.err * float(wx.sum() * wy.sum()) * spec.step**2
    return val, err


def _spectrum_for(bm, z, r, spectrum):
    if spectrum is None:
        return scattered_spectrum(bm, z, r)
    return spectrum


def smoothed_mean(bm: BeamMedium, sp: SmoothingParams, z: float, r, xi,
                  spectrum: ScatteredSpectrum | None = None) -> MomentValue:
    """Mean smoothed Wigner transform: coherent cone plus scattered part.

    Independent of ``r_s``.  A precomputed ``spectrum`` for the same ``(z, r)``
    may be passed to share work across angles.
    """
    _check_z(z)
    r, xi = _vec(r), _vec(xi)
    coh = _coherent(bm, sp, z, r, xi)
    if z == 0 or bm.c0 == 0:
        return MomentValue(complex(coh), 0.0, "closed-form")
    spec = _spectrum_for(bm, z, r, spectrum)
    inc, err = _incoherent(bm, sp, z, xi, spec)
    return MomentValue(complex(coh + inc), err, "fourier-grid", spec.converged)


def _second_terms(bm, sp, z, r, xi, spec):
    """Excess of the second moment over the squared mean, and its error bound."""
    a, step = spec.alpha, spec.step
    F = spec.values
    s2 = sp.xi_s**2
    P = bm.r0**4 * kernel_K(bm, z) / ((2 * np.pi) ** 8 * s2**2)
    # single sum: pairs one scattered and one coherent factor
    gx = np.exp(-sp.r_s**2 * a**2 - (a - 2 * xi[0]) ** 2 / (4 * s2))
    gy = np.exp(-sp.r_s**2 * a**2 - (a - 2 * xi[1]) ** 2 / (4 * s2))
    c3 = 4 * np.pi / bm.r0**2 * np.exp(-(r @ r) / bm.r0**2)
    s3 = c3 * _windowed_sum(F, gx, gy, step)
    # double sum: kernel exp(-r_s^2 |a - b|^2 - |a + b - 2 xi|^2 / (4 xi_s^2)) per axis
    d = a[:, None] - a[None, :]
    m = a[:, None] + a[None, :]
    kx = np.exp(-sp.r_s**2 * d**2 - (m - 2 * xi[0]) ** 2 / (4 * s2))
    ky = np.exp(-sp.r_s**2 * d**2 - (m - 2 * xi[1]) ** 2 / (4 * s2))
    s4 = float(np.sum(F * (kx @ F @ ky.T))) * step**4
    excess = P * (s3 + s4)
    absF = np.abs(F)
    bound3 = c3 * float(gx @ np.ones_like(F) @ gy) * step**2
    bound4 = 2 * float(np.sum(absF * (kx @ np.ones_like(F) @ ky.T))) * step**4
    err = P * spec.err * (bound3 + bound4)
    return excess, err


def smoothed_second_moment(bm: BeamMedium, sp: SmoothingParams, z: float, r, xi,
                           spectrum: ScatteredSpectrum | None = None) -> MomentValue:
    """Second moment of the smoothed Wigner transform.

    Raises
    ------
    MomentInconsistencyError
        If the variance comes out negative beyond the error estimate.
    """
    _check_z(z)
    r, xi = _vec(r), _vec(xi)
    mean = smoothed_mean(bm, sp, z, r, xi, spectrum)
    if z == 0 or bm.c0 == 0:
        return MomentValue(complex(mean.value.real**2), 0.0, "closed-form")
    spec = _spectrum_for(bm, z, r, spectrum)
    excess, err = _second_terms(bm, sp, z, r, xi, spec)
    m = mean.value.real
    err = err + 2 * abs(m) * mean.err
    tol = err + 1e-12 * m * m
    if excess < -tol:
        raise MomentInconsistencyError(
            f"negative variance {excess:.3e} (tolerance {tol:.3e})")
    return MomentValue(complex(m * m + excess), float(err), "fourier-grid", spec.converged)


def smoothed_cv(bm: BeamMedium, sp: SmoothingParams, z: float, r, xi,
                spectrum: ScatteredSpectrum | None = None) -> tuple[float, float]:
    """Coefficient of variation and the mean, sharing one spectrum."""
    spec = _spectrum_for(bm, z, _vec(r), spectrum)
    mean = smoothed_mean(bm, sp, z, r, xi, spec).value.real
    second = smoothed_second_moment(bm, sp, z, r, xi, spec).value.real
    return float(np.sqrt(max(second - mean**2, 0.0)) / mean), float(mean)


# ------------------------------------------------------------------ strong scattering
def _strong_parts(bm, sp, z):
    g = bm.cov.gamma_curvature()
    k2gz = bm.k0**2 * g * z
    spread = bm.r0**2 + g * z**3 / 24
    ang = 1 + 4 * sp.xi_s**2 / k2gz
    drift = z**2 * sp.xi_s**2 / (2 * bm.k0**2)
    return g, k2gz, spread, ang, drift


def strong_smoothed_mean(bm: BeamMedium, sp: SmoothingParams, z: float, r, xi) -> float:
    """Gaussian asymptote of :func:`smoothed_mean` for ``k0^2 C(0) z >> 1``."""
    _check_z(z)
    if z == 0:
        raise ValueError("the strong-scattering form needs z > 0")
    r, xi = _vec(r), _vec(xi)
    g, k2gz, spread, ang, drift = _strong_parts(bm, sp, z)
    denom = spread * ang + drift
    shift = r - z * xi / (2 * bm.k0 * ang)
    width = spread + drift / ang
    return float(8 * np.pi / k2gz * bm.r0**2 / denom
                 * np.exp(-(shift @ shift) / width - 2 * (xi @ xi) / (k2gz + 4 * sp.xi_s**2)))


def strong_smoothed_second_moment(bm: BeamMedium, sp: SmoothingParams, z: float, r,
                                  xi) -> float:
    """Gaussian asymptote of :func:`smoothed_second_moment` for ``k0^2 C(0) z >> 1``."""
    mean = strong_smoothed_mean(bm, sp, z, r, xi)
    g, k2gz, spread, ang, drift = _strong_parts(bm, sp, z)
    num = spread * ang + drift
    den = spread * (4 * sp.r_s**2 * sp.xi_s**2 + 4 * sp.xi_s**2 / k2gz) + drift
    return mean**2 * (1 + num / den)


def cv_strong(sp: SmoothingParams, rho_z: float) -> float:
    """Strong-scattering coefficient of variation for correlation radius ``rho_z``."""
    if not rho_z > 0:
        raise ValueError("rho_z must be positive")
    return float(np.sqrt((1 / (sp.xi_s * rho_z) ** 2 + 1) / (4 * sp.r_s**2 / rho_z**2 + 1)))


def fig2_axes(rs_max: float = 2.0, xis_max: float = 3.0, n: int = 200):
    """Axes of the contour map in normalized units ``r_s / rho_z`` and ``xi_s rho_z``.

    ``r_s_bar = rs_max j / (n + 1)`` and ``xi_s_bar = xis_max j / n`` for
    ``j = 1..n``: positive angular widths, and interior position widths.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    j = np.arange(1, n + 1)
    return rs_max * j / (n + 1), xis_max * j / n


def fig2_contours(rs_bar, xis_bar) -> np.ndarray:
    """Coefficient of variation on the grid ``rs_bar x xis_bar`` (rows follow ``rs_bar``)."""
    rs = np.asarray(rs_bar, dtype=float)[:, None]
    xs = np.asarray(xis_bar, dtype=float)[None, :]
    if np.any(rs < 0) or np.any(xs <= 0):
        raise ValueError("need r_s_bar >= 0 and xi_s_bar > 0")
    return np.sqrt((1 / xs**2 + 1) / (4 * rs**2 + 1))
