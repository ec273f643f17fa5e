"""Intensity statistics in the scintillation regime.

Intensity correlation, scintillation index (general and beam-center forms) and
the Gaussian closed forms valid once the propagation distance exceeds many
scattering mean free paths.  Arguments are in scintillation-regime units, as in
:mod:`paraxial_moments.analytic_moments`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.special import roots_legendre

from .analytic_moments import BeamMedium, MomentValue, _check_z, _vec
from .covariance import CovarianceModel, gaussian_profile
from .quadrature import NonConvergenceWarning, QuadratureSpec, integrate_2d

__all__ = [
    "ScalingScales",
    "scaling_scales",
    "gamma2_limit",
    "gamma4_limit",
    "scint_index_limit",
    "scint_index_normalized",
    "scint_index_center",
    "StrongRegimeStats",
    "strong_regime_stats",
    "strong_gamma2",
    "strong_gamma4",
    "fig1_curves",
]

# outer radial integral of the beam-center formula is taken on [0, U_MAX]
U_MAX = 30.0


@dataclass(frozen=True)
class ScalingScales:
    """Scattering mean free path and diffraction distance."""

    z_sca: float
    z_c: float

    def __post_init__(self):
        if not (self.z_sca > 0 and self.z_c > 0 and np.isfinite(self.z_c)):
            raise ValueError("scales must be positive")


def scaling_scales(bm: BeamMedium) -> ScalingScales:
    if bm.c0 == 0:
        raise ValueError("no scattering: the mean free path is infinite")
    return ScalingScales(bm.z_sca, bm.z_c)


# ------------------------------------------------------------- general formulas
def _trapezoid_zeta_integral(bm, z, r, q, rel_tol=1e-10, max_n=2048):
    """``(r0^2 / 4 pi) int exp(k0^2/4 int_0^z C(zeta z'/k0 - q) - C(0) dz' - r0^2 |zeta|^2 / 4
    + i zeta.r) dzeta`` by the trapezoid rule on a doubling grid.

    The integrand is smooth and Gaussian-damped, so the plain trapezoid rule
    converges geometrically; this path is independent of the adaptive panels
    used by the second-moment functions.
    """
    k0, r0 = bm.k0, bm.r0
    half = 8 * 2 / r0
    damp = bm.extinction(z) / 4
    n = 64
    prev = None
    while True:
        s = np.linspace(-half, half, n + 1)
        ds = s[1] - s[0]
        Z1, Z2 = np.meshgrid(s, s, indexing="ij")
        zeta = np.stack([Z1, Z2], axis=-1)
        expo = (k0**2 / 4 * bm.cov.line_averaged(-q, zeta, z, k0) - damp
                - r0**2 * (Z1**2 + Z2**2) / 4)
        val = r0**2 / (4 * np.pi) * np.sum(np.exp(expo + 1j * (Z1 * r[0] + Z2 * r[1]))) * ds**2
        if prev is not None:
            err = abs(val - prev)
            if err <= max(rel_tol * abs(val), 1e-14):
                return complex(val), float(err), True
            if n >= max_n:
                warnings.warn("trapezoid zeta-integral did not converge",
                              NonConvergenceWarning, stacklevel=3)
                return complex(val), float(err), False
        prev = val
        n *= 2


def gamma2_limit(bm: BeamMedium, z: float, r, q) -> MomentValue:
    """Limit mutual coherence ``E[u(r/eps + q/2) conj(u(r/eps - q/2))]``."""
    _check_z(z)
    val, err, ok = _trapezoid_zeta_integral(bm, z, _vec(r), _vec(q))
    return MomentValue(val, err, "quadrature", ok)


def gamma4_limit(bm: BeamMedium, z: float, r, q) -> MomentValue:
    """Limit intensity correlation ``E[|u(r/eps + q/2)|^2 |u(r/eps - q/2)|^2]``."""
    _check_z(z)
    r, q = _vec(r), _vec(q)
    i0, e0, ok0 = _trapezoid_zeta_integral(bm, z, r, np.zeros(2))
    iq, eq, okq = _trapezoid_zeta_integral(bm, z, r, q)
    coherent = np.exp(-bm.extinction(z) / 2 - 2 * (r @ r) / bm.r0**2)
    val = abs(i0) ** 2 + abs(iq) ** 2 - coherent
    err = 2 * abs(i0) * e0 + 2 * abs(iq) * eq
    return MomentValue(complex(val), float(err), "quadrature", ok0 and okq)


def scint_index_limit(bm: BeamMedium, z: float, r,
                      spec: QuadratureSpec | None = None) -> float:
    """Limit scintillation index at macroscopic position ``r``.

    ``1 - exp(-2 |r|^2 / r0^2) / |J|^2`` where ``J`` is a 2-D integral over the
    normalized frequency ``u = r0 zeta``.
    """
    _check_z(z)
    r = _vec(r)
    k0, r0 = bm.k0, bm.r0

    def f(u):
        expo = (k0**2 / 4 * bm.cov.line_averaged(np.zeros(2), u / r0, z, k0)
                - np.sum(u * u, axis=-1) / 4)
        return np.exp(expo) / (4 * np.pi)

    qr = integrate_2d(f, 2.0, spec, phase=r / r0)
    return float(1 - np.exp(-2 * (r @ r) / r0**2) / abs(qr.value) ** 2)


def _unit_average(profile, a, rtol=1e-10):
    """``int_0^1 profile(a s) ds`` for an array of ``a``, composite GL with doubling."""
    a = np.asarray(a, dtype=float)
    t, w = roots_legendre(16)
    panels = 1
    prev = None
    while panels <= 1024:
        edges = np.linspace(0.0, 1.0, panels + 1)
        s = (0.5 * (edges[1:, None] - edges[:-1, None]) * t
             + 0.5 * (edges[1:, None] + edges[:-1, None])).ravel()
        ws = np.tile(w, panels) * (0.5 / panels)
        cur = profile(np.multiply.outer(a, s)) @ ws
        if prev is not None and np.all(np.abs(cur - prev) <= rtol * np.abs(cur) + 1e-300):
            return cur
        prev = cur
        panels *= 2
    warnings.warn("ray average of the covariance profile did not converge",
                  NonConvergenceWarning, stacklevel=2)
    return prev


def _gaussian_average(a):
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.5 * np.sqrt(np.pi) * special.erf(a) / a
    return np.where(a < 1e-8, 1.0 - a * a / 3, out)


def _ray_average(c_tilde):
    """``a -> int_0^1 c_tilde(a s) ds`` for a profile given as a model or a callable."""
    if c_tilde is None or c_tilde is gaussian_profile:
        return _gaussian_average
    if isinstance(c_tilde, CovarianceModel):
        if c_tilde.kind == "gaussian":
            return _gaussian_average

        def tabulated(a):
            a = np.asarray(a, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = c_tilde.profile_integral(a) / a
            return np.where(a < 1e-12, float(c_tilde.profile(0.0)), out)

        return tabulated
    if not np.isclose(c_tilde(0.0), 1.0):
        raise ValueError("c_tilde(0) must equal 1")
    return lambda a: _unit_average(c_tilde, a)


def scint_index_normalized(z_over_zsca: float, z_over_zc: float, c_tilde=None) -> float:
    """Beam-center scintillation index as a function of ``z / Z_sca`` and ``z / Z_c``.

    Parameters
    ----------
    z_over_zsca, z_over_zc : float
        Propagation distance over the scattering mean free path and over the
        diffraction distance ``k0 r0 lc``.
    c_tilde : callable or CovarianceModel, optional
        Normalized radial profile with ``c_tilde(0) = 1``; default ``exp(-s^2)``.

    Notes
    -----
    The radial integral is truncated at ``U_MAX = 30``; the neglected tail is
    below ``exp(-U_MAX^2 / 4 + 2 z / Z_sca)`` relative to the integrand scale.
    """
    if z_over_zsca < 0 or z_over_zc < 0:
        raise ValueError("distance ratios must be nonnegative")
    average = _ray_average(c_tilde)
    strength = 2 * z_over_zsca

    def ray(u):
        return average(u * z_over_zc)

    def f(u):
        return np.exp(strength * ray(u) - u * u / 4) * u

    # the integrand is largest near u = 0 when scattering is strong; split there
    brk = [0.0, 1.0 / max(z_over_zc, 1e-3), U_MAX] if z_over_zc > 1 / U_MAX else [0.0, U_MAX]
    total = 0.0
    for lo, hi in zip(brk[:-1], brk[1:]):
        val, err = integrate.quad(lambda u: float(f(np.array(u))), lo, hi,
                                  epsabs=0, epsrel=1e-12, limit=400)
        if err > 1e-8 * abs(val):
            warnings.warn("radial integral of the scintillation index did not converge",
                          NonConvergenceWarning, stacklevel=2)
        total += val
    return float(1 - 4 / total**2)


def scint_index_center(bm: BeamMedium, z: float) -> float:
    """:func:`scint_index_normalized` evaluated for a beam and medium."""
    _check_z(z)
    if bm.c0 == 0 or z == 0:
        return 0.0
    return scint_index_normalized(z / bm.z_sca, z / bm.z_c, bm.cov)


# ------------------------------------------------------------- strong scattering
@dataclass(frozen=True)
class StrongRegimeStats:
    """Beam radius ``R_z`` and intensity correlation radius ``rho_z``.

    ``rho_z`` is ``inf`` at ``z = 0``.
    """

    R_z: float
    rho_z: float


def _radii_sq(bm, z, gamma=None):
    g = bm.cov.gamma_curvature() if gamma is None else gamma
    beam = bm.r0**2 + g * z**3 / 6
    if z == 0 or g == 0:
        return beam, np.inf
    corr = 4 / (bm.k0**2 * g * z) * beam / (bm.r0**2 + g * z**3 / 24)
    return beam, corr


def strong_regime_stats(bm: BeamMedium, z: float) -> StrongRegimeStats:
    """Beam and correlation radii of the strongly scattered beam."""
    _check_z(z)
    beam, corr = _radii_sq(bm, z)
    return StrongRegimeStats(float(np.sqrt(beam)), float(np.sqrt(corr)))


def strong_gamma2(bm: BeamMedium, z: float, r, q) -> complex:
    """Gaussian mutual coherence for ``k0^2 C(0) z >> 1``."""
    _check_z(z)
    r, q = _vec(r), _vec(q)
    g = bm.cov.gamma_curvature()
    beam, _ = _radii_sq(bm, z, g)
    spread = (bm.r0**2 + g * z**3 / 24) / beam
    expo = (-(r @ r) / beam - bm.k0**2 * g * z * (q @ q) / 8 * spread
            + 1j * bm.k0 * g * z**2 * (r @ q) / (4 * beam))
    return complex(bm.r0**2 / beam * np.exp(expo))


def strong_gamma4(bm: BeamMedium, z: float, r, q) -> float:
    """Gaussian intensity correlation for ``k0^2 C(0) z >> 1``."""
    _check_z(z)
    r, q = _vec(r), _vec(q)
    beam, corr = _radii_sq(bm, z)
    return float((bm.r0**2 / beam) ** 2 * np.exp(-2 * (r @ r) / beam)
                 * (1 + np.exp(-(q @ q) / corr)))


def fig1_curves(ztilde_max: float = 10.0, steps: int = 200, zc_ratios=(0.1, 1.0, 10.0),
                c_tilde=None):
    """Beam-center scintillation index against ``z / Z_sca`` for several ``Z_c / Z_sca``.

    Returns a list of ``(z_over_zsca, zc_ratio, S)`` rows, curve by curve.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    grid = np.linspace(0.0, ztilde_max, steps)
    rows = []
    for ratio in zc_ratios:
        if not ratio > 0:
            raise ValueError("Z_c / Z_sca ratios must be positive")
        for zt in grid:
            rows.append((float(zt), float(ratio),
                         scint_index_normalized(zt, zt / ratio, c_tilde)))
    return rows
