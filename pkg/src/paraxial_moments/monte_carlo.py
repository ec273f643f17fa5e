"""Ensemble simulation of the random paraxial wave equation.

Split-step Fourier propagation with spectrally synthesized phase screens.  Each
realization draws its screens from counter-based streams keyed by
``(seed, realization, screen pair)``, so any realization can be replayed on its
own and the ensemble does not depend on how it is split across workers.

Simulations run in the scaled units of the scintillation regime: a model
``(k0, r0, C)`` at scale ``epsilon`` is simulated with beam radius
``r0 / epsilon``, covariance ``epsilon C`` and distance ``z / epsilon``.
``epsilon = 1`` is the plain, unscaled problem.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as sfft

from .analytic_moments import BeamMedium
from .covariance import CovarianceModel
from .scintillation import _radii_sq
from .wigner_stats import SmoothingParams

__all__ = [
    "Grid2D",
    "ComplexField",
    "SimConfig",
    "Probes",
    "WignerProbe",
    "Estimate",
    "EnsembleStats",
    "GsrResidual",
    "make_phase_screen",
    "step",
    "gaussian_source",
    "run_ensemble",
    "estimate_gsr_residual",
    "smoothed_wigner_sample",
]

# screen modes with variance below this fraction of the peak (times the working
# precision) are skipped; for a gaussian spectrum the dropped variance is the same fraction
MODE_CUTOFF = 0.1
MEMORY_BUDGET = 2**31


@dataclass(frozen=True)
class Grid2D:
    """Periodic ``n x n`` grid of spacing ``h`` centered at the origin."""

    n: int
    h: float

    def __post_init__(self):
        if self.n < 64 or self.n > 4096 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two in [64, 4096]")
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError("h must be positive")

    @property
    def extent(self) -> float:
        return self.n * self.h

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.h

    @property
    def k(self) -> np.ndarray:
        """Wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.h)

    def k_squared(self) -> np.ndarray:
        k = self.k
        return k[:, None] ** 2 + k[None, :] ** 2

    def index_of(self, point) -> tuple[int, int]:
        """Nearest node of a point; raises if it falls outside the grid."""
        idx = np.rint(np.asarray(point, dtype=float) / self.h).astype(int) + self.n // 2
        if np.any(idx < 0) or np.any(idx >= self.n):
            raise ValueError(f"point {point} lies outside the grid")
        return int(idx[0]), int(idx[1])


@dataclass
class ComplexField:
    """Samples of ``u`` on a grid; axis 0 is the first coordinate."""

    grid: Grid2D
    samples: np.ndarray

    def __post_init__(self):
        if self.samples.shape != (self.grid.n, self.grid.n):
            raise ValueError("samples do not match the grid")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("field has non-finite entries")

    def norm2(self) -> float:
        """Discrete squared L2 norm ``h^2 sum |u|^2``."""
        s = self.samples.astype(np.complex128, copy=False)
        return float(np.vdot(s, s).real) * self.grid.h**2


def gaussian_source(grid: Grid2D, r0: float, dtype=np.complex128) -> np.ndarray:
    x = grid.x
    g = np.exp(-x**2 / (2 * r0**2))
    return np.outer(g, g).astype(dtype)


# ------------------------------------------------------------------ phase screens
def _mode_sigma(cov: CovarianceModel, grid: Grid2D, dz: float) -> np.ndarray:
    """Per-mode standard deviation ``sqrt(dz C_hat(k)) dk / (2 pi)`` in FFT order."""
    k = grid.k
    kk = np.stack(np.meshgrid(k, k, indexing="ij"), axis=-1)
    spec = cov.eval_C_hat(kk)
    if np.any(spec < -1e-12 * np.max(np.abs(spec))):
        raise ValueError("covariance spectrum is negative on the lattice")
    dk = 2 * np.pi / grid.extent
    return np.sqrt(dz * np.clip(spec, 0.0, None)) * dk / (2 * np.pi)


class _ScreenSource:
    """Synthesizes screens for a block of realizations, two per inverse FFT.

    Screens are multiplied by ``scale`` (the step uses ``k0 / 2`` times the
    increment, so that factor is folded into the mode amplitudes).

    Only modes with variance above ``MODE_CUTOFF`` times the machine epsilon
    of ``dtype`` (relative to the peak) are drawn, and the first inverse transform
    runs over the rows that contain such modes.
    """

    def __init__(self, cov, grid, dz, seed, dtype, scale=1.0):
        sigma = _mode_sigma(cov, grid, dz) * scale
        cutoff = MODE_CUTOFF * np.finfo(dtype).eps
        keep = sigma > np.sqrt(cutoff) * sigma.max()
        self.rows = np.nonzero(keep.any(axis=1))[0]
        sub = keep[self.rows]
        self.active = np.nonzero(sub.ravel())[0]
        self.amp = (sigma[self.rows].ravel()[self.active] * grid.n**2).astype(dtype)
        self.n = grid.n
        self.seed = seed
        self.dtype = dtype
        self.real = np.float32 if dtype == np.complex64 else np.float64

    def _draw(self, realization, index, out):
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(self.seed, spawn_key=(realization, index))))
        m = len(self.active)
        w = rng.standard_normal(2 * m, dtype=self.real)
        out[self.active] = self.amp * (w[:m] + 1j * w[m:])

    def pairs(self, realizations, index: int) -> np.ndarray:
        """Complex fields whose real and imaginary parts are independent screens."""
        realizations = list(realizations)
        B, n = len(realizations), self.n
        modes = np.zeros((B, len(self.rows) * n), dtype=self.dtype)
        for b, r in enumerate(realizations):
            self._draw(r, index, modes[b])
        part = sfft.ifft(modes.reshape(B, len(self.rows), n), axis=2, overwrite_x=True)
        full = np.zeros((B, n, n), dtype=self.dtype)
        full[:, self.rows, :] = part
        # the 1/n normalization of each 1-D inverse transform is undone by amp
        return sfft.ifft(full, axis=1, overwrite_x=True)


def make_phase_screen(cov: CovarianceModel, grid: Grid2D, dz: float,
                      rng: np.random.Generator) -> np.ndarray:
    """One real screen with covariance ``dz C`` (periodic approximation).

    Hermitian-symmetric modes are obtained as the real part of a complex
    synthesis with unit-variance real and imaginary parts.
    """
    if dz < 0:
        raise ValueError("dz must be nonnegative")
    sigma = _mode_sigma(cov, grid, dz)
    w = rng.standard_normal((2, grid.n, grid.n))
    return sfft.ifft2(sigma * (w[0] + 1j * w[1]) * grid.n**2).real


def step(field: ComplexField, k0: float, dz: float, cov: CovarianceModel | None = None,
         rng: np.random.Generator | None = None, screen: np.ndarray | None = None
         ) -> ComplexField:
    """One Strang step: half diffraction, medium phase ``exp(i k0 dB / 2)``, half diffraction.

    The increment ``dB`` is ``screen`` if given, else drawn from ``cov`` with
    ``rng``; with neither, the step is pure diffraction.
    """
    grid = field.grid
    if screen is None and cov is not None:
        screen = make_phase_screen(cov, grid, dz, rng or np.random.default_rng())
    half = np.exp(-1j * grid.k_squared() * dz / (4 * k0))
    u = sfft.ifft2(sfft.fft2(field.samples) * half)
    if screen is not None:
        u = u * np.exp(0.5j * k0 * screen)
    u = sfft.ifft2(sfft.fft2(u) * half)
    return ComplexField(grid, u.astype(field.samples.dtype, copy=False))


# ------------------------------------------------------------------ configuration
@dataclass(frozen=True)
class WignerProbe:
    """Smoothed Wigner transform probe at the center position and angle ``xi``."""

    smoothing: SmoothingParams
    xi: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.smoothing.r_s * 2 * self.smoothing.xi_s < 1 - 1e-12:
            raise ValueError("r_s < 1/(2 xi_s) has no nonnegative sampling representation")


@dataclass(frozen=True)
class Probes:
    """Where the field is sampled.

    ``center`` is a scaled (macroscopic) position; ``offsets`` are simulation-unit
    displacements from ``center / epsilon``.  Points snap to grid nodes.
    ``record_z`` lists extra scaled distances at which samples are taken; the
    final distance is always recorded last.
    """

    offsets: tuple = ((0.0, 0.0),)
    center: tuple[float, float] = (0.0, 0.0)
    record_z: tuple = ()
    wigner: tuple = ()


@dataclass(frozen=True)
class SimConfig:
    """Monte-Carlo run parameters.

    ``bm`` holds the model in scaled units; the simulated problem has beam
    radius ``r0 / epsilon``, covariance ``epsilon C`` and length
    ``z_target / epsilon``, split into steps of ``dz`` (simulation units).
    """

    bm: BeamMedium
    epsilon: float
    z_target: float
    dz: float
    grid: Grid2D
    n_realizations: int
    seed: int = 0
    precision: str = "double"
    edge_mask: bool = True
    block: int = 8

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.z_target < 0 or not self.dz > 0:
            raise ValueError("need z_target >= 0 and dz > 0")
        if self.n_realizations < 0:
            raise ValueError("n_realizations must be nonnegative")
        if self.precision not in ("single", "double"):
            raise ValueError("precision is 'single' or 'double'")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        lc = self.bm.cov.lc
        if self.dz > lc / 4 * (1 + 1e-12):
            raise ValueError(f"dz = {self.dz} exceeds lc / 4 = {lc / 4}")
        if self.dz > self.bm.k0 * self.grid.h**2 * self.grid.n / 16:
            raise ValueError("dz exceeds the diffraction sampling bound k0 h^2 n / 16")
        steps = self.z_sim / self.dz
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError("z_target / epsilon must be a multiple of dz")
        if self.grid.extent < 8 * self.spread_estimate():
            raise ValueError(f"grid extent {self.grid.extent:.3g} is below 8 x beam spread "
                             f"{self.spread_estimate():.3g}")
        if self.memory_estimate() > MEMORY_BUDGET:
            raise MemoryError(f"a block needs about {self.memory_estimate() / 2**30:.1f} GiB")

    @property
    def sim_medium(self) -> BeamMedium:
        return BeamMedium(self.bm.k0, self.bm.r0 / self.epsilon,
                          self.bm.cov.scaled(self.epsilon))

    @property
    def z_sim(self) -> float:
        return self.z_target / self.epsilon

    @property
    def n_steps(self) -> int:
        return int(round(self.z_sim / self.dz))

    @property
    def dtype(self):
        return np.complex64 if self.precision == "single" else np.complex128

    def spread_estimate(self) -> float:
        """Beam radius from diffraction plus the strong-scattering spreading."""
        sim = self.sim_medium
        z = self.z_sim
        beam, _ = _radii_sq(sim, z)
        diffraction = sim.r0**2 * (z / (sim.k0 * sim.r0**2)) ** 2
        return float(np.sqrt(beam + diffraction))

    def memory_estimate(self) -> int:
        return 6 * self.block * self.grid.n**2 * np.dtype(self.dtype).itemsize


# ------------------------------------------------------------------ statistics
@dataclass(frozen=True)
class Estimate:
    """Ensemble estimate with its jackknife standard error."""

    value: complex
    se: float


def jackknife(func, columns: np.ndarray) -> Estimate:
    """Delete-one jackknife of ``func(column means)``.

    ``func`` maps an array of means with shape ``(..., p)`` to values ``(...)``.
    """
    n = columns.shape[0]
    if n == 0:
        return Estimate(complex(np.nan), float("nan"))
    total = columns.sum(axis=0)
    value = func(total / n)
    if n < 2:
        return Estimate(complex(value), float("nan"))
    loo = func((total - columns) / (n - 1))
    se = np.sqrt((n - 1) / n * np.sum(np.abs(loo - loo.mean()) ** 2))
    return Estimate(complex(value), float(se))


@dataclass
class EnsembleStats:
    """Per-realization probe samples; estimators are computed on demand.

    Samples are kept per realization (rather than as running sums) so that
    standard errors can be obtained by the jackknife.  ``merge`` concatenates
    and orders by realization index, which is associative and commutative.
    """

    record_z: np.ndarray
    positions: np.ndarray
    wigner_probes: tuple = ()
    indices: np.ndarray = dc_field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    samples: np.ndarray | None = None
    wigner: np.ndarray | None = None
    norm_drift: np.ndarray | None = None
    absorbed: np.ndarray | None = None

    def __post_init__(self):
        r, m, w = len(self.record_z), len(self.positions), len(self.wigner_probes)
        if self.samples is None:
            self.samples = np.zeros((0, r, m), dtype=complex)
        if self.wigner is None:
            self.wigner = np.zeros((0, w))
        if self.norm_drift is None:
            self.norm_drift = np.zeros(0)
        if self.absorbed is None:
            self.absorbed = np.zeros(0)

    @property
    def count(self) -> int:
        return len(self.indices)

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        if (not np.array_equal(self.record_z, other.record_z)
                or not np.array_equal(self.positions, other.positions)
                or self.wigner_probes != other.wigner_probes):
            raise ValueError("cannot merge statistics of different probe sets")
        idx = np.concatenate([self.indices, other.indices])
        if len(np.unique(idx)) != len(idx):
            raise ValueError("realization indices overlap")
        order = np.argsort(idx, kind="stable")
        cat = lambda a, b: np.concatenate([a, b])[order]
        return EnsembleStats(self.record_z, self.positions, self.wigner_probes, idx[order],
                             cat(self.samples, other.samples), cat(self.wigner, other.wigner),
                             cat(self.norm_drift, other.norm_drift),
                             cat(self.absorbed, other.absorbed))

    def _u(self, i, rec):
        return self.samples[:, rec, i]

    def mean_field(self, i: int = 0, rec: int = -1) -> Estimate:
        return jackknife(lambda m: m[..., 0], self._u(i, rec)[:, None])

    def coherence(self, i: int, j: int, rec: int = -1) -> Estimate:
        """``E[u(x_i) conj(u(x_j))]``."""
        prod = self._u(i, rec) * np.conj(self._u(j, rec))
        return jackknife(lambda m: m[..., 0], prod[:, None])

    def coherence_average(self, pairs, rec: int = -1) -> Estimate:
        """Average of ``E[u(x_i) conj(u(x_j))]`` over index pairs ``(i, j)``."""
        i, j = np.asarray(pairs).T
        prod = (self.samples[:, rec, i] * np.conj(self.samples[:, rec, j])).mean(axis=1)
        return jackknife(lambda m: m[..., 0], prod[:, None])

    def fourth(self, i1: int, i2: int, j1: int, j2: int, rec: int = -1) -> Estimate:
        """``E[u(x_i1) u(x_i2) conj(u(x_j1)) conj(u(x_j2))]``."""
        u = lambda i: self._u(i, rec)
        prod = u(i1) * u(i2) * np.conj(u(j1)) * np.conj(u(j2))
        return jackknife(lambda m: m[..., 0], prod[:, None])

    def scintillation(self, i: int = 0, rec: int = -1) -> Estimate:
        """``E|u|^4 / (E|u|^2)^2 - 1``."""
        a2 = np.abs(self._u(i, rec)) ** 2
        cols = np.stack([a2 * a2, a2], axis=1)
        return jackknife(lambda m: m[..., 0] / m[..., 1] ** 2 - 1, cols)

    def wigner_mean(self, w: int = 0) -> Estimate:
        return jackknife(lambda m: m[..., 0], self.wigner[:, w][:, None])

    def wigner_cv(self, w: int = 0) -> Estimate:
        """Coefficient of variation of a smoothed Wigner probe."""
        v = self.wigner[:, w]
        cols = np.stack([v, v * v], axis=1)
        return jackknife(lambda m: np.sqrt(np.maximum(m[..., 1] - m[..., 0] ** 2, 0)) / m[..., 0],
                         cols)


@dataclass(frozen=True)
class GsrResidual:
    """Modulus of the Gaussian-summation-rule defect with its standard error."""

    value: float
    se: float
    fourth_moment: complex
    inconclusive: bool

    def consistent_with_zero(self, k: float = 3.0) -> bool:
        # the floor absorbs rounding in deterministic (zero-variance) ensembles
        floor = 64 * np.finfo(float).eps * abs(self.fourth_moment)
        return self.value <= k * self.se + floor


def estimate_gsr_residual(stats: EnsembleStats, x1: int, x2: int, y1: int, y2: int,
                          rec: int = -1) -> GsrResidual:
    """Defect ``mu4 - (mu2 mu2 + mu2 mu2 - mu1 mu1 conj(mu1) conj(mu1))`` from samples.

    The arguments index probe positions.  The complex defect is jackknifed as a
    whole; ``se`` combines its real and imaginary standard errors.  The result
    is flagged inconclusive when ``se`` exceeds ``|mu4|``.
    """
    u = [stats.samples[:, rec, i] for i in (x1, x2, y1, y2)]
    a, b, c, d = u
    cols = np.stack([a * b * np.conj(c) * np.conj(d),
                     a * np.conj(c), b * np.conj(d), a * np.conj(d), b * np.conj(c),
                     a, b, c, d], axis=1)

    def defect(m):
        m4, ac, bd, ad, bc, ma, mb, mc, md = (m[..., k] for k in range(9))
        return m4 - (ac * bd + ad * bc - ma * mb * np.conj(mc) * np.conj(md))

    est = jackknife(defect, cols)
    m4 = jackknife(lambda m: m[..., 0], cols[:, :1]).value
    n = stats.count
    if n == 0:
        return GsrResidual(float("nan"), float("nan"), m4, True)
    se = est.se if n > 1 else 0.0
    return GsrResidual(float(abs(est.value)), float(se), m4, bool(se > abs(m4)))


# ------------------------------------------------------------------ smoothed Wigner samples
def _window_spectrum(grid, sp, xi):
    """Fourier transform of ``exp(i xi.s - xi_s^2 |s|^2)`` on the FFT lattice."""
    k = grid.k
    gx = np.exp(-(k - xi[0]) ** 2 / (4 * sp.xi_s**2))
    gy = np.exp(-(k - xi[1]) ** 2 / (4 * sp.xi_s**2))
    return np.pi / sp.xi_s**2 * np.outer(gx, gy)


def _husimi_from_spectrum(U, grid, sp, xi):
    """Husimi function on the whole grid, for one or a stack of field spectra."""
    conv = sfft.ifft2(U * _window_spectrum(grid, sp, xi).astype(U.dtype))
    return 2 * sp.xi_s**2 / np.pi * np.abs(conv) ** 2


def _extra_smoothing(grid, sp, node):
    """Normalized Gaussian weights for ``r_s`` beyond the Husimi width, centered at ``node``."""
    var = sp.r_s**2 - 1 / (4 * sp.xi_s**2)
    if var <= 0:
        return None
    x = grid.x
    cx, cy = x[node[0]], x[node[1]]
    wx = np.exp(-(x - cx) ** 2 / (2 * var))
    wy = np.exp(-(x - cy) ** 2 / (2 * var))
    return wx / wx.sum(), wy / wy.sum()


def smoothed_wigner_sample(field: ComplexField, sp: SmoothingParams, r, xi) -> float:
    """Smoothed Wigner transform of one field at position ``r`` and angle ``xi``.

    Positions and angles are in the field's own (simulation) units.  For
    ``r_s = 1/(2 xi_s)`` this is ``(2 xi_s^2 / pi) |int exp(i xi.s - xi_s^2 |s|^2)
    u(r - s) ds|^2``; larger ``r_s`` adds a normalized Gaussian average over
    position of variance ``r_s^2 - 1/(4 xi_s^2)``.

    Raises
    ------
    ValueError
        If ``r_s < 1/(2 xi_s)``.
    """
    WignerProbe(sp, tuple(xi))
    grid = field.grid
    node = grid.index_of(r)
    H = _husimi_from_spectrum(sfft.fft2(field.samples), grid, sp, np.asarray(xi, float))
    return _reduce_husimi(H[None], grid, sp, node)[0]


def _reduce_husimi(H, grid, sp, node):
    weights = _extra_smoothing(grid, sp, node)
    if weights is None:
        return H[:, node[0], node[1]].astype(float)
    wx, wy = weights
    return np.einsum("bij,i,j->b", H.astype(float), wx, wy)


# ------------------------------------------------------------------ ensemble
class _EdgeFrame:
    """Super-Gaussian absorber on strips of width L/16 along the edges.

    The frame is split into four disjoint rectangles; each step multiplies the
    field there by the mask and accumulates the energy removed.
    """

    def __init__(self, grid, dtype):
        width = grid.extent / 16
        d = np.maximum(np.abs(grid.x) - (grid.extent / 2 - width), 0.0)
        m = np.exp(-8 * (d / width) ** 4)
        n = grid.n
        w = int(np.count_nonzero(m[: n // 2] < 1))
        self.h2 = grid.h**2
        real = np.float32 if dtype == np.complex64 else np.float64
        mask2d = np.outer(m, m)
        inner = slice(w, n - w)
        self.parts = []
        if w == 0:
            return
        for sl in ((slice(0, w), slice(None)), (slice(n - w, n), slice(None)),
                   (inner, slice(0, w)), (inner, slice(n - w, n))):
            mk = mask2d[sl]
            self.parts.append(((slice(None),) + sl, mk.astype(real), 1 - mk**2))

    def absorb(self, u) -> np.ndarray:
        """Apply the mask in place; return the energy removed per realization."""
        lost = 0.0
        for sl, mk, loss in self.parts:
            v = u[sl]
            a2 = v.real.astype(np.float64) ** 2 + v.imag.astype(np.float64) ** 2
            lost = lost + np.einsum("bij,ij->b", a2, loss)
            v *= mk
        return lost * self.h2


def _record_steps(config, probes):
    steps = []
    for z in probes.record_z:
        s = z / config.epsilon / config.dz
        if abs(s - round(s)) > 1e-9 * max(1.0, s) or not 0 <= round(s) <= config.n_steps:
            raise ValueError(f"record distance {z} is not a step of the run")
        steps.append(int(round(s)))
    steps.append(config.n_steps)
    return steps


def _probe_nodes(config, probes):
    center = np.asarray(probes.center, dtype=float) / config.epsilon
    nodes = [config.grid.index_of(center + np.asarray(o, dtype=float)) for o in probes.offsets]
    center_node = config.grid.index_of(center)
    return nodes, center_node


def _run_block(args):
    config, probes, start, stop = args
    grid, dtype, sim = config.grid, config.dtype, config.sim_medium
    B = stop - start
    nodes, center_node = _probe_nodes(config, probes)
    rec_steps = _record_steps(config, probes)
    ix = np.array([p[0] for p in nodes])
    iy = np.array([p[1] for p in nodes])
    u = np.broadcast_to(gaussian_source(grid, sim.r0, dtype), (B, grid.n, grid.n)).copy()
    norm0 = ComplexField(grid, u[0].astype(np.complex128)).norm2()
    k2 = grid.k_squared()
    half = np.exp(-1j * k2 * config.dz / (4 * sim.k0)).astype(dtype)
    full = (half * half).astype(dtype)
    frame = _EdgeFrame(grid, dtype) if config.edge_mask else None
    screens = (_ScreenSource(sim.cov, grid, config.dz, config.seed, dtype, 0.5 * sim.k0)
               if sim.c0 > 0 else None)
    absorbed = np.zeros(B)
    samples = np.zeros((B, len(rec_steps), len(nodes)), dtype=complex)
    S = config.n_steps

    def record(v, s):
        for r, rs in enumerate(rec_steps):
            if rs == s:
                samples[:, r, :] = v[:, ix, iy]

    record(u, 0)
    if S > 0:
        u = sfft.ifft2(sfft.fft2(u, axes=(1, 2), overwrite_x=True) * half, axes=(1, 2),
                       overwrite_x=True)
    pair = None
    rot = np.empty((B, grid.n, grid.n), dtype=dtype)
    for s in range(S):
        if screens is not None:
            if s % 2 == 0:
                pair = screens.pairs(range(start, stop), s // 2)
                ph = pair.real
            else:
                ph = pair.imag
            np.cos(ph, out=rot.real)
            np.sin(ph, out=rot.imag)
            u *= rot
        if frame is not None:
            absorbed += frame.absorb(u)
        U = sfft.fft2(u, axes=(1, 2), overwrite_x=True)
        last = s == S - 1
        if last:
            U *= half
        else:
            if s + 1 in rec_steps:
                record(sfft.ifft2(U * half, axes=(1, 2)), s + 1)
            U *= full
        u = sfft.ifft2(U, axes=(1, 2), overwrite_x=True)
    if S > 0:
        record(u, S)
    norms = np.array([ComplexField(grid, u[b].astype(np.complex128)).norm2() for b in range(B)])
    drift = np.abs(norms + absorbed - norm0) / norm0
    wig = np.zeros((B, len(probes.wigner)))
    if probes.wigner:
        U = sfft.fft2(u, axes=(1, 2))
        for w, probe in enumerate(probes.wigner):
            H = _husimi_from_spectrum(U, grid, probe.smoothing, np.asarray(probe.xi, float))
            wig[:, w] = _reduce_husimi(H, grid, probe.smoothing, center_node)
    return np.arange(start, stop), samples, wig, drift, absorbed / norm0


def _empty_stats(config, probes):
    nodes, _ = _probe_nodes(config, probes)
    rec_z = np.array([s * config.dz * config.epsilon for s in _record_steps(config, probes)])
    positions = np.array([[config.grid.x[i], config.grid.x[j]] for i, j in nodes])
    return EnsembleStats(rec_z, positions, tuple(probes.wigner))


def run_ensemble(config: SimConfig, probes: Probes | None = None, workers: int = 1,
                 realizations: range | None = None) -> EnsembleStats:
    """Simulate the ensemble and collect probe samples.

    Parameters
    ----------
    workers : int
        Processes used; results do not depend on it.
    realizations : range, optional
        Subset of realization indices to run (default: all).

    Notes
    -----
    Realizations are processed in blocks aligned to multiples of
    ``config.block``, so a given realization is always computed in the same
    batch.  ``absorbed`` is the fraction of the initial energy removed by the
    edge mask; ``norm_drift`` is the energy change not accounted for by it.
    """
    probes = probes or Probes()
    stats = _empty_stats(config, probes)
    todo = realizations if realizations is not None else range(config.n_realizations)
    if len(todo) == 0:
        return stats
    B = config.block
    blocks = []
    for b in range(todo[0] // B, (todo[-1] // B) + 1):
        lo, hi = max(b * B, todo[0]), min((b + 1) * B, todo[-1] + 1)
        if lo < hi:
            blocks.append((config, probes, lo, hi))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, blocks))
    else:
        results = [_run_block(a) for a in blocks]
    for idx, samples, wig, drift, absorbed in results:
        stats = stats.merge(EnsembleStats(stats.record_z, stats.positions, stats.wigner_probes,
                                          idx, samples, wig, drift, absorbed))
    if np.max(stats.absorbed) > 1e-3:
        warnings.warn(f"edge mask absorbed {np.max(stats.absorbed):.2e} of the energy",
                      RuntimeWarning, stacklevel=2)
    return stats
