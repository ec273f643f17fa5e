"""Closed-form and quadrature evaluation of the field moments for a Gaussian beam.

Two families of functions live here.

* Exact moments of the white-noise paraxial model in physical units:
  :func:`mean_field`, :func:`mutual_coherence`, :func:`mean_wigner`.
* Scintillation-regime limits, whose arguments are the order-one rescaled
  variables (macroscopic center ``r``, microscopic offsets ``x``, ``y``):
  :func:`mu1_limit`, :func:`mu2_limit`, :func:`mu4_limit`, together with the
  kernels :func:`kernel_K` and :func:`kernel_A` that make up the fourth moment.

The limit formulas hold for offsets of order one; they are not meant for
offsets comparable to the beam radius.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceModel
from .quadrature import (
    NonConvergenceWarning,
    QuadratureSpec,
    QuadResult,
    grid_axis,
    grid_fourier_2d,
    integrate_2d,
    integrate_nested_4d,
)

__all__ = [
    "BeamMedium",
    "MomentValue",
    "mean_field",
    "mutual_coherence",
    "mean_wigner",
    "wigner_transport_residual",
    "TransportResidual",
    "kernel_K",
    "kernel_A",
    "kernel_A_grid",
    "mu1_limit",
    "mu2_limit",
    "mu4_limit",
    "gaussian_summation_residual",
]

FOUR_D_SPEC = QuadratureSpec(rel_tol=1e-8, truncation_sigmas=6.0)
# the residual is judged at 1e-4; errors on a shared node set are smooth in z
RESIDUAL_SPEC = QuadratureSpec(rel_tol=1e-6, truncation_sigmas=6.0)


@dataclass(frozen=True)
class BeamMedium:
    """Gaussian beam ``exp(-|x|^2 / (2 r0^2))`` launched into a random medium.

    Parameters
    ----------
    k0 : float
        Carrier wavenumber.
    r0 : float
        Initial beam radius.
    cov : CovarianceModel
    """

    k0: float
    r0: float
    cov: CovarianceModel

    def __post_init__(self):
        if not (np.isfinite(self.k0) and self.k0 > 0):
            raise ValueError("k0 must be finite and positive")
        if not (np.isfinite(self.r0) and self.r0 > 0):
            raise ValueError("r0 must be finite and positive (the plane-wave limit is "
                             "outside the numeric range)")

    @property
    def c0(self) -> float:
        return self.cov.c0

    @property
    def z_sca(self) -> float:
        """Scattering mean free path ``8 / (k0^2 C(0))`` (infinite without medium)."""
        return np.inf if self.c0 == 0 else 8.0 / (self.k0**2 * self.c0)

    @property
    def z_c(self) -> float:
        return self.k0 * self.r0 * self.cov.lc

    def extinction(self, z) -> float:
        """``k0^2 C(0) z``, the exponent governing coherent decay."""
        return self.k0**2 * self.c0 * z


@dataclass
class MomentValue:
    """A moment with its error estimate.

    ``method`` is one of ``closed-form``, ``quadrature`` or ``fourier-grid``.
    """

    value: complex
    err: float
    method: str
    converged: bool = True

    def __post_init__(self):
        if not self.err >= 0:
            raise ValueError("err must be nonnegative")


def _method(qr: QuadResult) -> str:
    return "fourier-grid" if qr.method == "fourier-grid" else "quadrature"


def _vec(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise ValueError("expected a 2-vector")
    return p


def _check_z(z):
    if not (np.isfinite(z) and z >= 0):
        raise ValueError("z must be finite and >= 0")


# ---------------------------------------------------------------- exact moments
def mean_field(bm: BeamMedium, z: float, x) -> MomentValue:
    """Mean field of the Gaussian beam, closed form.

    The complex width ``r_z^2 = r0^2 (1 + i z / (k0 r0^2))`` carries diffraction;
    the medium only damps the amplitude by ``exp(-k0^2 C(0) z / 8)``.
    """
    _check_z(z)
    x = np.asarray(x, dtype=float)
    rz2 = bm.r0**2 * (1 + 1j * z / (bm.k0 * bm.r0**2))
    val = (bm.r0**2 / rz2) * np.exp(-bm.extinction(z) / 8) \
        * np.exp(-np.sum(x * x, axis=-1) / (2 * rz2))
    return MomentValue(complex(val) if np.ndim(val) == 0 else val, 0.0, "closed-form")


def mutual_coherence(bm: BeamMedium, z: float, r, q,
                     spec: QuadratureSpec | None = None) -> MomentValue:
    """Two-point correlation ``E[u(z, r + q/2) conj(u(z, r - q/2))]``.

    Computed from its spectral representation as a single integral over the
    frequency ``zeta`` conjugate to the midpoint ``r``.
    """
    _check_z(z)
    r, q = _vec(r), _vec(q)
    k0, r0, cov = bm.k0, bm.r0, bm.cov
    kappa = z / k0
    a = r0**2 / 4 + kappa**2 / (4 * r0**2)
    center = kappa * q / (4 * r0**2 * a)
    damp = bm.extinction(z) / 4

    def f(zeta):
        shift = q - kappa * zeta
        expo = (-np.sum(shift * shift, axis=-1) / (4 * r0**2)
                - r0**2 * np.sum(zeta * zeta, axis=-1) / 4
                + k0**2 / 4 * cov.line_averaged(q, -zeta, z, k0) - damp)
        return r0**2 / (4 * np.pi) * np.exp(expo)

    qr = integrate_2d(f, 1 / np.sqrt(a), spec, center=center, phase=r)
    return MomentValue(qr.value, qr.err, _method(qr), qr.converged)


def _wigner_homogeneous(bm, z, r, xi):
    shift = r - xi * z / bm.k0
    return 4 * np.pi * bm.r0**2 * np.exp(-bm.r0**2 * np.sum(xi * xi, axis=-1)
                                         - np.sum(shift * shift, axis=-1) / bm.r0**2)


class _WignerIntegrand:
    """Integrand of the scattered part of the mean Wigner transform.

    Variables are the frequency ``zeta`` conjugate to the position (outer) and
    the offset ``p`` (inner), shifted so that the medium enters only through
    ``expm1(k0^2 / 4 * int_0^z C(p + zeta z' / k0) dz')``, which is localized
    around the segment from 0 to ``-zeta z / k0``.  Several propagation
    distances can share one node set, which keeps finite differences in ``z``
    free of quadrature noise.
    """

    def __init__(self, bm, zs, r, xi, gradient=False, collision=False):
        self.bm = bm
        self.zs = [float(z) for z in zs]
        self.r = r
        self.xi = xi
        self.gradient = gradient
        self.collision = collision
        self.z_box = max(self.zs)

    def inner_box(self, spec):
        reach = self.bm.cov.support_radius
        env = spec.truncation_sigmas * 2 * self.bm.r0
        k0 = self.bm.k0

        def box(zeta):
            end = -zeta * self.z_box / k0
            lo = np.maximum(np.minimum(end, 0.0) - reach, -env)
            hi = np.minimum(np.maximum(end, 0.0) + reach, env)
            return lo, hi
        return box

    def __call__(self, zeta, p):
        bm, k0, r0 = self.bm, self.bm.k0, self.bm.r0
        zeta_b = zeta[:, None, :]
        px, py = p[..., 0], p[..., 1]
        zeta2 = (zeta[:, 0] ** 2 + zeta[:, 1] ** 2)[:, None]
        # z-independent part of the weight, shared by every component
        base = np.exp(-(px * px + py * py) / (4 * r0**2) - r0**2 * zeta2 / 4) \
            * np.exp(-1j * (px * self.xi[0] + py * self.xi[1]))
        out = []
        lines = bm.cov.line_averaged(p, zeta_b, self.zs, k0)
        for z, line in zip(self.zs, lines):
            kappa = z / k0
            pref = r0**2 / (4 * np.pi) * np.exp(-bm.extinction(z) / 4)
            outer = pref * np.exp(1j * (zeta @ (self.r - kappa * self.xi)))
            scat = np.expm1(k0**2 / 4 * line)
            out.append(outer[:, None] * base * scat)
            if len(out) == 1:
                first_outer, first_scat = outer, scat
        if self.gradient:
            out.append(1j * zeta[:, 0, None] * out[0])
            out.append(1j * zeta[:, 1, None] * out[0])
        if self.collision:
            cov_at = bm.cov.eval_C(p + zeta_b * (self.zs[0] / k0))
            out.append(first_outer[:, None] * base * (1 + first_scat) * cov_at)
        return np.stack(out)


def mean_wigner(bm: BeamMedium, z: float, r, xi,
                spec: QuadratureSpec | None = None) -> MomentValue:
    """Mean Wigner transform ``int exp(-i xi.q) E[u(r + q/2) conj(u(r - q/2))] dq``.

    The unscattered part is closed form and decays as ``exp(-k0^2 C(0) z / 4)``;
    the scattered part is a 4-D integral over frequency and offset.  The result
    is real; any imaginary residue is folded into ``err``.
    """
    _check_z(z)
    r, xi = _vec(r), _vec(xi)
    coherent = np.exp(-bm.extinction(z) / 4) * _wigner_homogeneous(bm, z, r, xi)
    if z == 0 or bm.c0 == 0:
        return MomentValue(complex(coherent), 0.0, "closed-form")
    spec = spec or FOUR_D_SPEC
    integrand = _WignerIntegrand(bm, [z], r, xi)
    qr = integrate_nested_4d(lambda o, i: integrand(o, i)[0], (0.0, 0.0), 2 / bm.r0,
                             integrand.inner_box(spec), spec)
    value = coherent + qr.value.real
    err = qr.err + abs(qr.value.imag)
    return MomentValue(complex(value), float(err), "quadrature", qr.converged)


@dataclass
class TransportResidual:
    """Terms of the radiative transport balance for the mean Wigner transform.

    ``residual = dw_dz + drift - collision``; ``relative`` is ``|residual| / |w|``.
    """

    w: float
    dw_dz: float
    drift: float
    collision: float
    residual: float
    relative: float
    err: float
    converged: bool


def wigner_transport_residual(bm: BeamMedium, z: float, r, xi, dz: float | None = None,
                              spec: QuadratureSpec | None = None) -> TransportResidual:
    """Check the transport equation on :func:`mean_wigner` by finite differences.

    The ``z``-derivative is a fourth-order central difference with step ``dz``
    (default ``z / 20``) computed on a single shared node set; the position
    gradient and the collision integral come from the same quadrature, the
    latter through the identity that convolving with the medium spectrum in
    ``xi`` is multiplication by ``C`` in the offset variable.
    """
    _check_z(z)
    r, xi = _vec(r), _vec(xi)
    if z <= 0 or bm.c0 == 0:
        raise ValueError("the residual check needs z > 0 and a random medium")
    dz = z / 20 if dz is None else float(dz)
    if not 0 < 2 * dz < z:
        raise ValueError("dz must satisfy 0 < 2 dz < z")
    spec = spec or RESIDUAL_SPEC
    zs = [z, z - 2 * dz, z - dz, z + dz, z + 2 * dz]
    integrand = _WignerIntegrand(bm, zs, r, xi, gradient=True, collision=True)
    qr = integrate_nested_4d(integrand, (0.0, 0.0), 2 / bm.r0, integrand.inner_box(spec),
                             spec, joint=True)
    parts = np.asarray(qr.value)
    coh = [np.exp(-bm.extinction(s) / 4) * _wigner_homogeneous(bm, s, r, xi) for s in zs]
    w_all = np.array(coh) + parts[:5].real
    w = w_all[0]
    dw_dz = (w_all[1] - 8 * w_all[2] + 8 * w_all[3] - w_all[4]) / (12 * dz)
    grad_coh = -2 * (r - xi * z / bm.k0) / bm.r0**2 * coh[0]
    grad = grad_coh + parts[5:7].real
    drift = float(xi @ grad) / bm.k0
    collision = bm.k0**2 / 4 * (parts[7].real - bm.c0 * w)
    residual = dw_dz + drift - collision
    return TransportResidual(float(w), float(dw_dz), drift, float(collision), float(residual),
                             abs(residual) / abs(w), qr.err, qr.converged)


# ---------------------------------------------------------------- scaled limits
def kernel_K(bm: BeamMedium, z: float) -> float:
    """``(2 pi)^8 exp(-k0^2 C(0) z / 2)``."""
    _check_z(z)
    return (2 * np.pi) ** 8 * np.exp(-bm.extinction(z) / 2)


def _bracket(bm, z, x, zeta):
    return np.expm1(bm.k0**2 / 4 * bm.cov.line_averaged(x, zeta, z, bm.k0))


def kernel_A(bm: BeamMedium, z: float, xi, zeta,
             spec: QuadratureSpec | None = None) -> MomentValue:
    """Scattering kernel ``A(z, xi, zeta)`` of the fourth moment, pointwise.

    Fourier transform in ``x`` (at frequency ``xi``) of
    ``expm1(k0^2 / 4 * int_0^z C(x + zeta z' / k0) dz') / (2 (2 pi)^2)``.
    The integrand is supported near the segment from 0 to ``-zeta z / k0``.
    """
    _check_z(z)
    xi, zeta = _vec(xi), _vec(zeta)
    if z == 0 or bm.c0 == 0:
        return MomentValue(0j, 0.0, "closed-form")
    spec = spec or QuadratureSpec()
    end = -zeta * z / bm.k0
    half = float(np.max(np.abs(end))) / 2 + bm.cov.support_radius
    norm = 1 / (2 * (2 * np.pi) ** 2)
    qr = integrate_2d(lambda x: norm * _bracket(bm, z, x, zeta), half / spec.truncation_sigmas,
                      spec, center=end / 2, phase=-xi)
    return MomentValue(qr.value, qr.err, _method(qr), qr.converged)


def kernel_A_grid(bm: BeamMedium, z: float, zeta, n: int = 128, h: float | None = None):
    """``A(z, xi, zeta)`` on the full frequency grid of an ``n x n`` position grid.

    Parameters
    ----------
    zeta : array, shape (2,) or (m, 2)
        One or several ``zeta`` values; the grids are stacked along a leading axis.
    n : int
        Grid size (power of two).
    h : float, optional
        Position spacing, default ``lc / 4``.

    Returns
    -------
    values : array, shape (n, n) or (m, n, n)
    xi : array, shape (n,)
        Frequency axis shared by both dimensions.

    Notes
    -----
    The position grid is centered at the origin.  A ``NonConvergenceWarning``
    is raised if the bracket is not below ``1e-12`` (relative) on the grid edge.
    """
    _check_z(z)
    zeta = np.asarray(zeta, dtype=float)
    single = zeta.ndim == 1
    zeta = np.atleast_2d(zeta)
    h = bm.cov.lc / 4 if h is None else float(h)
    x = grid_axis(n, h)
    X, Y = np.meshgrid(x, x, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    if z == 0 or bm.c0 == 0:
        vals = np.zeros((len(zeta), n, n), dtype=complex)
        xi = grid_axis(n, 2 * np.pi / (n * h))
    else:
        br = _bracket(bm, z, pts[None], zeta[:, None, None, :])
        edge = max(np.abs(br[:, 0]).max(), np.abs(br[:, :, 0]).max())
        if edge > 1e-12 * max(1.0, np.abs(br).max()):
            warnings.warn(f"A-grid too small: bracket {edge:.2e} at the grid edge",
                          NonConvergenceWarning, stacklevel=2)
        vals, xi = grid_fourier_2d(br, h)
        vals = vals / (2 * (2 * np.pi) ** 2)
    return (vals[0] if single else vals), xi


def mu1_limit(bm: BeamMedium, z: float, r) -> MomentValue:
    """Scintillation-regime mean field: plain Gaussian profile damped in ``z``."""
    _check_z(z)
    r = np.asarray(r, dtype=float)
    val = np.exp(-bm.extinction(z) / 8 - np.sum(r * r, axis=-1) / (2 * bm.r0**2))
    return MomentValue(complex(val), 0.0, "closed-form")


def mu2_limit(bm: BeamMedium, z: float, r, x, y,
              spec: QuadratureSpec | None = None) -> MomentValue:
    """Scintillation-regime second moment at center ``r`` and offsets ``x``, ``y``."""
    _check_z(z)
    r, x, y = _vec(r), _vec(x), _vec(y)
    k0, r0, cov = bm.k0, bm.r0, bm.cov
    sep = y - x
    damp = bm.extinction(z) / 4

    def f(zeta):
        expo = (k0**2 / 4 * cov.line_averaged(sep, zeta, z, k0) - damp
                - r0**2 * np.sum(zeta * zeta, axis=-1) / 4)
        return r0**2 / (4 * np.pi) * np.exp(expo)

    qr = integrate_2d(f, 2 / r0, spec, phase=r)
    return MomentValue(qr.value, qr.err, _method(qr), qr.converged)


def _coherent_quad(bm, z, r):
    r = _vec(r)
    return float(np.exp(-bm.extinction(z) / 2 - 2 * (r @ r) / bm.r0**2))


def mu4_limit(bm: BeamMedium, z: float, r, x1, x2, y1, y2,
              spec: QuadratureSpec | None = None) -> MomentValue:
    """Scintillation-regime fourth moment ``E[u(x1) u(x2) conj(u(y1)) conj(u(y2))]``.

    Uses the factorized form: two pairings of second moments minus the
    coherent quadruple product.
    """
    _check_z(z)
    a = mu2_limit(bm, z, r, x1, y1, spec)
    b = mu2_limit(bm, z, r, x2, y2, spec)
    c = mu2_limit(bm, z, r, x1, y2, spec)
    d = mu2_limit(bm, z, r, x2, y1, spec)
    val = a.value * b.value + c.value * d.value - _coherent_quad(bm, z, r)
    err = (abs(a.value) * b.err + abs(b.value) * a.err
           + abs(c.value) * d.err + abs(d.value) * c.err)
    conv = a.converged and b.converged and c.converged and d.converged
    method = "quadrature" if z > 0 else "closed-form"
    return MomentValue(complex(val), float(err), method, conv)


def gaussian_summation_residual(bm: BeamMedium, z: float, r, x1, x2, y1, y2,
                                spec: QuadratureSpec | None = None) -> float:
    """``|mu4 - (mu2 mu2 + mu2 mu2 - mu1 mu1 conj(mu1) conj(mu1))|`` in the limit.

    Because the limit fourth moment is itself assembled from second moments,
    this only checks that the two evaluation paths agree; the independent test
    of the summation rule uses Monte-Carlo estimates.
    """
    m4 = mu4_limit(bm, z, r, x1, x2, y1, y2, spec).value
    m1 = [mu1_limit(bm, z, r).value for _ in range(4)]
    pairs = (mu2_limit(bm, z, r, x1, y1, spec).value * mu2_limit(bm, z, r, x2, y2, spec).value
             + mu2_limit(bm, z, r, x1, y2, spec).value * mu2_limit(bm, z, r, x2, y1, spec).value)
    return float(abs(m4 - (pairs - m1[0] * m1[1] * np.conj(m1[2]) * np.conj(m1[3]))))
