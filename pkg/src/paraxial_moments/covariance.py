"""Transverse covariance of the Brownian medium field.

All models are isotropic, ``C(x) = c0 * profile(|x| / lc)`` with ``profile(0) = 1``.
``c0`` carries dimension of length (the Brownian field has covariance
``min(z, z') C(x - x')``), so the spectrum ``C_hat`` has dimension length**3.
A model with ``c0 = 0`` stands for a homogeneous medium.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_legendre

__all__ = ["CovarianceError", "CovarianceModel", "gaussian_profile"]

# below this value of |zeta| z / (k0 lc) the erf closed form loses digits to
# cancellation and a fixed Gauss-Legendre rule on the (nearly constant) line is used
_SHORT_LINE = 1e-3
SPECTRAL_RIPPLE = 1e-4
_GL24 = roots_legendre(24)


class CovarianceError(ValueError):
    """Raised when a covariance model is inadmissible or ill-conditioned."""


def _neville_at_zero(x, y):
    """Value at 0 of the polynomial interpolating ``(x, y)``."""
    p = np.array(y, dtype=float)
    x = np.asarray(x, dtype=float)
    for k in range(1, len(x)):
        p[:-k] = (x[k:] * p[:-k] - x[:-k] * p[1:len(p) - k + 1]) / (x[k:] - x[:-k])
    return float(p[0])


def gaussian_profile(s):
    """Normalized gaussian profile ``exp(-s**2)``."""
    s = np.asarray(s, dtype=float)
    return np.exp(-s * s)


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Isotropic medium covariance.

    Parameters
    ----------
    kind : {"gaussian", "tabulated"}
    c0 : float
        ``C(0)``, nonnegative.
    lc : float
        Correlation length.
    radii, values : array_like, optional
        Tabulated kind only: samples of the normalized profile at normalized
        radius ``s = |x| / lc``.  ``radii[0]`` must be 0 and ``values[0]`` 1.
    """

    kind: str = "gaussian"
    c0: float = 1.0
    lc: float = 1.0
    radii: np.ndarray | None = None
    values: np.ndarray | None = None
    _interp: PchipInterpolator | None = field(default=None, init=False, repr=False)
    _primitive: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("gaussian", "tabulated"):
            raise CovarianceError(f"unknown covariance kind {self.kind!r}")
        if not (np.isfinite(self.c0) and self.c0 >= 0):
            raise CovarianceError("c0 must be finite and >= 0")
        if not (np.isfinite(self.lc) and self.lc > 0):
            raise CovarianceError("lc must be finite and > 0")
        if self.kind == "tabulated":
            if self.radii is None or self.values is None:
                raise CovarianceError("tabulated covariance needs radii and values")
            s = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if s.ndim != 1 or s.shape != v.shape or s.size < 4:
                raise CovarianceError("table must hold at least 4 (radius, value) rows")
            if s[0] != 0.0 or np.any(np.diff(s) <= 0):
                raise CovarianceError("table radii must start at 0 and increase")
            if not np.isclose(v[0], 1.0, rtol=1e-12, atol=0):
                raise CovarianceError("tabulated profile must equal 1 at radius 0")
            object.__setattr__(self, "radii", s)
            object.__setattr__(self, "values", v)
            # mirror the table so the interpolant is even: pchip then has zero slope at 0
            interp = PchipInterpolator(np.concatenate([-s[:0:-1], s]),
                                       np.concatenate([v[:0:-1], v]), extrapolate=False)
            object.__setattr__(self, "_interp", interp)
            self.check_admissible()

    # ------------------------------------------------------------------ construction
    @classmethod
    def gaussian(cls, c0: float = 1.0, lc: float = 1.0) -> "CovarianceModel":
        return cls("gaussian", c0, lc)

    @classmethod
    def tabulated(cls, radii, values, c0: float = 1.0, lc: float = 1.0) -> "CovarianceModel":
        return cls("tabulated", c0, lc, np.asarray(radii, float), np.asarray(values, float))

    @classmethod
    def from_csv(cls, path, c0: float = 1.0, lc: float = 1.0) -> "CovarianceModel":
        """Read a two-column ``radius,value`` table (header line required).

        Radii are normalized by ``lc``; values are the normalized profile.
        """
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise CovarianceError(f"{path}: empty covariance table")
        try:
            data = np.array([[float(a), float(b)] for a, b in rows[1:] if a.strip()])
        except ValueError as exc:
            raise CovarianceError(f"{path}: malformed covariance table ({exc})") from None
        return cls.tabulated(data[:, 0], data[:, 1], c0=c0, lc=lc)

    def scaled(self, factor: float) -> "CovarianceModel":
        """Same profile with ``c0`` multiplied by ``factor``."""
        return CovarianceModel(self.kind, self.c0 * factor, self.lc, self.radii, self.values)

    # ------------------------------------------------------------------ evaluation
    def profile(self, s):
        """Normalized profile at normalized radius ``s`` (0 beyond the table)."""
        s = np.abs(np.asarray(s, dtype=float))
        if self.kind == "gaussian":
            return np.exp(-s * s)
        out = self._interp(s)
        return np.where(np.isnan(out), 0.0, out)

    def profile_integral(self, t):
        """``int_0^t profile(s) ds`` for ``t >= 0`` (exact for both kinds)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            return 0.5 * np.sqrt(np.pi) * special.erf(t)
        if self._primitive is None:
            object.__setattr__(self, "_primitive", self._interp.antiderivative())
        P = self._primitive
        return P(np.minimum(t, self.radii[-1])) - P(0.0)

    def eval_C(self, x):
        """``C(x)`` for points ``x`` of shape ``(..., 2)``."""
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1) / self.lc**2
        if self.kind == "gaussian":
            return self.c0 * np.exp(-r2)
        return self.c0 * self.profile(np.sqrt(r2))

    def eval_C_hat(self, k):
        """Power spectral density ``C_hat(k) = int C(x) exp(-i k.x) dx``."""
        k = np.asarray(k, dtype=float)
        kr = np.sqrt(np.sum(k * k, axis=-1))
        if self.kind == "gaussian":
            return self.c0 * np.pi * self.lc**2 * np.exp(-(kr * self.lc) ** 2 / 4)
        return self._hankel(kr)

    def _hankel(self, kr):
        # 2 pi c0 lc^2 int_0^smax profile(s) J0(k lc s) s ds, Gauss-Legendre per table cell
        t, w = roots_legendre(16)
        s = self.radii
        a, b = s[:-1, None], s[1:, None]
        nodes = (0.5 * (b - a) * t + 0.5 * (b + a)).ravel()
        weights = (0.5 * (b - a) * w).ravel() * nodes * self.profile(nodes)
        kr = np.asarray(kr, dtype=float)
        j0 = special.j0(np.multiply.outer(kr * self.lc, nodes))
        return 2 * np.pi * self.c0 * self.lc**2 * (j0 @ weights)

    @property
    def support_radius(self) -> float:
        """Radius beyond which ``C/c0`` is below about 1e-14."""
        if self.kind == "gaussian":
            return self.lc * np.sqrt(np.log(1e14))
        return self.lc * float(self.radii[-1])

    def gamma_curvature(self) -> float:
        """Curvature ``gamma`` in ``C(x) = C(0) - gamma |x|^2 / 2 + o(|x|^2)``."""
        if self.kind == "gaussian":
            return 2.0 * self.c0 / self.lc**2
        if self.c0 == 0:
            return 0.0
        # The pchip slope limiter distorts the interpolant's curvature at 0, so the
        # second differences 2 (C(s_j) - 1) / s_j^2 are taken on the table samples
        # and Richardson-extrapolated (Neville, in powers of s^2) to s = 0, adding
        # one sample at a time until two successive estimates agree.
        s2 = self.radii[1:9] ** 2
        d = 2.0 * (self.values[1:9] - 1.0) / s2
        prev = None
        for m in range(1, len(s2) + 1):
            est = _neville_at_zero(s2[:m], d[:m])
            if prev is not None and abs(est - prev) <= 1e-6 * abs(est):
                gamma = -est * self.c0 / self.lc**2
                if not gamma > 0:
                    raise CovarianceError("tabulated profile has no negative curvature at 0")
                return float(gamma)
            prev = est
        raise CovarianceError("second difference of the tabulated profile does not settle")

    # ------------------------------------------------------------------ line integrals
    def line_averaged(self, q, zeta, z, k0: float):
        """``int_0^z C(q + zeta z' / k0) dz'`` for broadcastable ``(..., 2)`` inputs.

        ``z`` may also be a sequence of distances; the results are then stacked
        along a new leading axis, sharing the work that does not depend on ``z``.
        """
        q = np.asarray(q, dtype=float)
        v = np.asarray(zeta, dtype=float) / k0
        q, v = np.broadcast_arrays(q, v)
        zs = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(zs < 0):
            raise ValueError("z must be >= 0")
        if self.c0 == 0 or not np.any(zs > 0):
            out = np.zeros(zs.shape + q.shape[:-1])
        elif self.kind == "tabulated":
            out = np.stack([self._line_tabulated(q, v, s) if s > 0
                            else np.zeros(q.shape[:-1]) for s in zs])
        else:
            out = self._line_gaussian(q, v, zs)
        return out if np.ndim(z) else out[0]

    def _line_fixed(self, q, v, z, rule=_GL24):
        t, w = rule
        s = 0.5 * z * (t + 1.0)
        pts = q[..., None, :] + v[..., None, :] * s[:, None]
        return 0.5 * z * (self.eval_C(pts) @ w)

    def _line_gaussian(self, q, v, zs):
        # The line meets the gaussian at normalized abscissae a < b along its
        # direction; the integral is exp(-d^2) (erf(b) - erf(a)) with d the
        # normalized distance of the line to the origin.  Written with erfc of
        # |a|, |b| so no branch loses precision; only very short lines, where
        # erfc(a) - erfc(b) cancels, fall back to fixed Gauss-Legendre.
        lc = self.lc
        qx, qy, vx, vy = q[..., 0] / lc, q[..., 1] / lc, v[..., 0] / lc, v[..., 1] / lc
        nv = np.sqrt(vx * vx + vy * vy)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = (qx * vx + qy * vy) / nv
            d2 = np.maximum(qx * qx + qy * qy - a * a, 0.0)
            pref = (0.5 * np.sqrt(np.pi) * self.c0) * np.exp(-d2) / nv
            ea = special.erfc(np.abs(a))
            pos = a >= 0
        out = np.empty(zs.shape + nv.shape)
        for k, z in enumerate(zs):
            with np.errstate(divide="ignore", invalid="ignore"):
                b = a + nv * z
                eb = special.erfc(np.abs(b))
                diff = np.where(pos, ea - eb, np.where(b <= 0, eb - ea, 2.0 - ea - eb))
                out[k] = pref * diff
            short = nv * z < _SHORT_LINE
            if z == 0:
                out[k] = 0.0
            elif np.ndim(short) == 0:
                if short:
                    out[k] = self._line_fixed(q, v, z)
            elif np.any(short):
                out[k][short] = self._line_fixed(q[short], v[short], z)
        return out

    def _line_tabulated(self, q, v, z, rtol=1e-10):
        t, w = roots_legendre(8)
        panels = 8
        prev = None
        while panels <= 4096:
            edges = np.linspace(0.0, z, panels + 1)
            s = (0.5 * (edges[1:, None] - edges[:-1, None]) * t
                 + 0.5 * (edges[1:, None] + edges[:-1, None])).ravel()
            ws = np.tile(w, panels) * (0.5 * z / panels)
            pts = q[..., None, :] + v[..., None, :] * s[:, None]
            cur = self.eval_C(pts) @ ws
            if prev is not None and np.all(np.abs(cur - prev) <= rtol * np.abs(cur) + 1e-300):
                return cur
            prev = cur
            panels *= 2
        return prev

    # ------------------------------------------------------------------ admissibility
    def check_admissible(self, n: int = 64) -> dict:
        """Check spectral positivity on an ``n x n`` k-grid and integrability.

        Returns a small report; raises ``CovarianceError`` on failure.
        """
        kmax = 8.0 / self.lc
        kk = np.linspace(-kmax, kmax, n)
        grid = np.stack(np.meshgrid(kk, kk, indexing="ij"), axis=-1)
        chat = self.eval_C_hat(grid)
        chat0 = float(self.eval_C_hat(np.zeros(2)))
        min_ratio = float(chat.min() / chat0) if chat0 > 0 else 0.0
        # interpolating a table leaves spectral ripple far below genuine negative lobes
        floor = 1e-8 if self.kind == "gaussian" else SPECTRAL_RIPPLE
        if chat0 > 0 and min_ratio < -floor:
            raise CovarianceError("spectrum negative on the k-grid "
                                  f"(min C_hat/C_hat(0) = {min_ratio:.3e})")

        def l1(half):
            m = 256
            x = np.linspace(-half, half, m)
            dx = x[1] - x[0]
            pts = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
            return float(np.abs(self.eval_C(pts)).sum() * dx * dx)

        half = 4.0 * self.lc
        prev = l1(half)
        for _ in range(8):
            half *= 2
            cur = l1(half)
            if abs(cur - prev) <= 0.01 * abs(cur) or cur == 0:
                return {"min_spectrum_ratio": min_ratio, "l1_norm": cur}
            prev = cur
        raise CovarianceError("covariance does not look integrable")
