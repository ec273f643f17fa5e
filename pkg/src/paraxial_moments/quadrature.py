"""Cubature for the Gaussian-damped, possibly oscillatory integrals of the theory.

Every moment formula reduces to integrals over the plane (or a product of two
planes) whose integrand carries an explicit Gaussian envelope.  The integration
box is ``center +- truncation_sigmas * width`` where the envelope is bounded by
``exp(-|x - center|**2 / width**2)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy.special import roots_legendre

__all__ = [
    "NonConvergenceWarning",
    "QuadratureSpec",
    "QuadResult",
    "integrate_2d",
    "integrate_nested_4d",
    "grid_fourier_2d",
    "inverse_grid_fourier_2d",
    "grid_axis",
    "composite_gauss_legendre",
]

# phase excursion across the box above which the panel scheme is abandoned
OSCILLATION_LIMIT = 50.0


class NonConvergenceWarning(RuntimeWarning):
    """Emitted when a cubature reaches its refinement cap without meeting tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and refinement limits shared by all cubature routines."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_level: int = 12
    truncation_sigmas: float = 8.0
    order: int = 10

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.abs_tol >= 0:
            raise ValueError("abs_tol must be nonnegative")
        if self.max_level < 3:
            raise ValueError("max_level must be at least 3")
        if self.truncation_sigmas < 4:
            raise ValueError("truncation_sigmas must be at least 4")
        if self.order < 2:
            raise ValueError("order must be at least 2")

    def tolerance(self, value) -> float:
        return max(self.rel_tol * abs(value), self.abs_tol)


@dataclass
class QuadResult:
    """Value of a cubature with its error estimate.

    ``converged`` is False when the refinement cap was hit; the value is still
    the best available estimate.
    """

    value: complex
    err: float
    converged: bool
    level: int
    method: str
    history: list = field(default_factory=list)


@lru_cache(maxsize=None)
def _gl(order: int):
    t, w = roots_legendre(order)
    return t, w


@lru_cache(maxsize=None)
def _unit_square_rule(order: int):
    t, w = _gl(order)
    X, Y = np.meshgrid(t, t, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=-1)
    weights = np.outer(w, w).ravel()
    return nodes, weights


def composite_gauss_legendre(lo, hi, panels: int, order: int):
    """1-D composite Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    t, w = _gl(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def _tensor_rule(panels: int, order: int):
    """Composite rule on ``[-1, 1]**2``: nodes ``(P, 2)``, weights ``(P,)``."""
    x, w = composite_gauss_legendre(-1.0, 1.0, panels, order)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=-1), np.outer(w, w).ravel()


def _panel_sums(f, centers, half, order):
    nodes, weights = _unit_square_rule(order)
    pts = centers[:, None, :] + half[:, None, None] * nodes[None, :, :]
    vals = np.asarray(f(pts.reshape(-1, 2)), dtype=complex).reshape(len(centers), -1)
    return (vals @ weights) * half**2


def integrate_2d(f, damping_width: float, spec: QuadratureSpec | None = None,
                 center=(0.0, 0.0), phase=None) -> QuadResult:
    """Integrate ``f(x) * exp(i phase . x)`` over the plane.

    Parameters
    ----------
    f : callable
        Vectorized integrand, ``f(points)`` with ``points`` of shape ``(M, 2)``.
    damping_width : float
        Width of the Gaussian envelope bounding ``f``.
    spec : QuadratureSpec, optional
    center : 2-vector
        Center of the envelope.
    phase : 2-vector, optional
        Linear phase kept out of ``f``.  When the phase turns by more than
        ``OSCILLATION_LIMIT`` radians across the box, the integral is taken on a
        uniform grid (a single-frequency discrete Fourier sum) instead of
        adaptive panels.

    Returns
    -------
    QuadResult
    """
    spec = spec or QuadratureSpec()
    center = np.asarray(center, dtype=float)
    half = spec.truncation_sigmas * float(damping_width)
    if not half > 0:
        raise ValueError("damping_width must be positive")
    if phase is not None:
        phase = np.asarray(phase, dtype=float)
        if np.linalg.norm(phase) * half > OSCILLATION_LIMIT:
            return _integrate_grid(f, center, half, phase, spec)
        g = lambda p: f(p) * np.exp(1j * (p @ phase))  # noqa: E731
    else:
        g = f
    return _integrate_adaptive(g, center, half, spec)


def _integrate_adaptive(g, center, half, spec):
    m0 = 4
    h0 = half / m0
    offs = (np.arange(m0) - (m0 - 1) / 2) * 2 * h0
    cx, cy = np.meshgrid(offs, offs, indexing="ij")
    centers = center + np.stack([cx.ravel(), cy.ravel()], axis=-1)
    hs = np.full(len(centers), h0)
    est = _panel_sums(g, centers, hs, spec.order)
    done_value = 0.0 + 0.0j
    done_err = 0.0
    history = []
    child_off = np.array([[-1, -1], [-1, 1], [1, -1], [1, 1]], dtype=float)
    delta = np.zeros(0)
    for level in range(1, spec.max_level + 1):
        ch = hs / 2
        cc = (centers[:, None, :] + ch[:, None, None] * child_off[None]).reshape(-1, 2)
        child = _panel_sums(g, cc, np.repeat(ch, 4), spec.order).reshape(-1, 4)
        csum = child.sum(axis=1)
        delta = np.abs(csum - est)
        value = done_value + csum.sum()
        err = done_err + delta.sum()
        history.append(float(err))
        tol = spec.tolerance(value)
        if err <= tol:
            return QuadResult(complex(value), float(err), True, level, "adaptive-gl", history)
        ok = delta <= tol * (hs / half) ** 2
        done_value += csum[ok].sum()
        done_err += delta[ok].sum()
        keep = ~ok
        centers = cc.reshape(-1, 4, 2)[keep].reshape(-1, 2)
        hs = np.repeat(ch[keep], 4)
        est = child[keep].ravel()
    value = done_value + est.sum()
    err = done_err + delta[~ok].sum()
    warnings.warn(f"adaptive cubature hit max_level={spec.max_level} (err {err:.3e})",
                  NonConvergenceWarning, stacklevel=3)
    return QuadResult(complex(value), float(err), False, spec.max_level, "adaptive-gl", history)


def _integrate_grid(f, center, half, phase, spec):
    # trapezoid sums converge geometrically for smooth integrands that vanish at
    # the box edge; the grid must also resolve the carrier phase
    kmax = np.max(np.abs(phase))
    n = 64
    while 2 * half / n > np.pi / (4 * kmax) and n < 4096:
        n *= 2
    prev = None
    history = []
    level = 0
    while True:
        x = center[0] - half + (np.arange(n) + 0.5) * (2 * half / n)
        y = center[1] - half + (np.arange(n) + 0.5) * (2 * half / n)
        dx = 2 * half / n
        total = 0.0 + 0.0j
        ex = np.exp(1j * phase[0] * x)
        for row in range(0, n, max(1, 2**20 // n)):
            xs = x[row:row + max(1, 2**20 // n)]
            X, Y = np.meshgrid(xs, y, indexing="ij")
            pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
            vals = np.asarray(f(pts), dtype=complex).reshape(len(xs), n)
            total += ex[row:row + len(xs)] @ (vals @ np.exp(1j * phase[1] * y))
        value = total * dx * dx
        level += 1
        if prev is not None:
            err = abs(value - prev)
            history.append(float(err))
            if err <= spec.tolerance(value):
                return QuadResult(complex(value), float(err), True, level, "fourier-grid", history)
            if n >= 4096:
                warnings.warn("grid cubature hit its resolution cap", NonConvergenceWarning,
                              stacklevel=3)
                return QuadResult(complex(value), float(err), False, level, "fourier-grid",
                                  history)
        prev = value
        n *= 2


_NESTED_LEVELS = ((2, 8), (2, 12), (2, 16), (2, 20), (2, 24), (2, 32), (4, 24), (4, 32))


def integrate_nested_4d(f, outer_center, outer_width: float, inner_box,
                        spec: QuadratureSpec | None = None, start_level: int = 0,
                        chunk: int = 2**21, joint: bool = False) -> QuadResult:
    """Integrate over a product of two planes, inner plane nested in the outer one.

    Parameters
    ----------
    f : callable
        ``f(outer, inner)`` with ``outer`` of shape ``(M, 2)`` and ``inner`` of
        shape ``(M, P, 2)``, returning values of shape ``(M, P)`` or, for a
        vector of integrands sharing the node set, ``(k, M, P)``.
    outer_center, outer_width :
        Envelope of the outer variable; the outer box is
        ``outer_center +- truncation_sigmas * outer_width``.
    inner_box : callable
        ``inner_box(outer) -> (lo, hi)``, the inner integration rectangle for
        each outer node, both of shape ``(M, 2)``.
    start_level : int
        First refinement level tried.
    joint : bool
        For vector integrands, measure every component's change against the
        largest component instead of against itself.

    Notes
    -----
    Both planes use composite tensor Gauss-Legendre rules refined together;
    the inner rule is affinely mapped onto each outer node's own rectangle.
    The error estimate is the largest change between the last two levels, and
    convergence requires every component to meet the tolerance.
    """
    spec = spec or QuadratureSpec()
    oc = np.asarray(outer_center, dtype=float)
    ohalf = spec.truncation_sigmas * float(outer_width)
    levels = _NESTED_LEVELS[: max(2, min(len(_NESTED_LEVELS), spec.max_level))]
    prev = None
    history = []
    for lvl in range(start_level, len(levels)):
        total = _nested_sum(f, oc, ohalf, inner_box, *levels[lvl], chunk)
        if prev is not None:
            delta = np.abs(total - prev)
            err = float(np.max(delta))
            history.append(err)
            size = np.max(np.abs(total)) if joint else np.abs(total)
            tol = np.maximum(spec.rel_tol * size, spec.abs_tol)
            if np.all(delta <= tol):
                return QuadResult(_unwrap(total), err, True, lvl, "nested-gl", history)
        prev = total
    warnings.warn("nested cubature hit its refinement cap", NonConvergenceWarning, stacklevel=2)
    return QuadResult(_unwrap(prev), history[-1] if history else np.inf, False,
                      len(levels) - 1, "nested-gl", history)


def _unwrap(total):
    return complex(total) if np.ndim(total) == 0 else total


def _nested_sum(f, oc, ohalf, inner_box, panels, order, chunk):
    onodes, ow = _tensor_rule(panels, order)
    onodes = oc + ohalf * onodes
    ow = ow * ohalf**2
    inodes, iw = _tensor_rule(panels, order)
    lo, hi = inner_box(onodes)
    mid = 0.5 * (lo + hi)
    hw = 0.5 * (hi - lo)
    jac = hw[:, 0] * hw[:, 1]
    step = max(1, chunk // len(inodes))
    total = 0.0
    for s in range(0, len(onodes), step):
        sl = slice(s, s + step)
        pts = mid[sl, None, :] + hw[sl, None, :] * inodes[None, :, :]
        vals = np.asarray(f(onodes[sl], pts))
        total = total + (vals @ iw) @ (ow[sl] * jac[sl])
    return np.asarray(total, dtype=complex)


# ---------------------------------------------------------------------- grids
def _check_pow2(n):
    if n < 2 or n & (n - 1):
        raise ValueError(f"grid size {n} is not a power of two")


def grid_axis(n: int, h: float) -> np.ndarray:
    """Centered grid coordinates ``(j - n/2) h``; the origin sits at index ``n/2``."""
    return (np.arange(n) - n // 2) * h


def grid_fourier_2d(samples, h: float):
    """Discrete approximation of ``F(xi) = int f(x) exp(-i xi . x) dx``.

    Parameters
    ----------
    samples : array, shape (..., n, n)
        Values on the centered grid ``grid_axis(n, h)`` along the last two axes.
    h : float
        Grid spacing.

    Returns
    -------
    spectrum : array, shape (..., n, n)
        On the centered frequency grid.
    xi : array, shape (n,)
        Frequency axis ``2 pi (j - n/2) / (n h)``.
    """
    samples = np.asarray(samples)
    n = samples.shape[-1]
    if samples.shape[-2] != n:
        raise ValueError("samples must be square in the last two axes")
    _check_pow2(n)
    ax = (-2, -1)
    spec = sfft.fftshift(sfft.fft2(sfft.ifftshift(samples, axes=ax), axes=ax), axes=ax)
    return spec * (h * h), grid_axis(n, 2 * np.pi / (n * h))


def inverse_grid_fourier_2d(spectrum, h: float):
    """Inverse of :func:`grid_fourier_2d` (``h`` is the spatial spacing)."""
    spectrum = np.asarray(spectrum)
    n = spectrum.shape[-1]
    _check_pow2(n)
    ax = (-2, -1)
    out = sfft.fftshift(sfft.ifft2(sfft.ifftshift(spectrum, axes=ax), axes=ax), axes=ax)
    return out / (h * h)
