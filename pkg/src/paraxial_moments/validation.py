"""Acceptance checks: analytic identities and analytic-versus-Monte-Carlo comparisons.

Each check returns :class:`CheckResult` records (one per criterion) carrying
the verdict, the measured numbers and the wall time.  The Monte-Carlo
configurations are module constants so that scripts and tests use the same
runs.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import monte_carlo as mc
from .analytic_moments import (
    BeamMedium,
    kernel_A,
    kernel_A_grid,
    mean_field,
    mu2_limit,
    wigner_transport_residual,
)
from .covariance import CovarianceModel
from .scintillation import scint_index_limit, scint_index_normalized, strong_regime_stats
from .wigner_stats import SmoothingParams, cv_strong, fig2_axes, fig2_contours

__all__ = [
    "CheckResult",
    "CHECKS",
    "run_checks",
    "MEAN_DECAY_CONFIG",
    "COHERENCE_CONFIG",
    "STRONG_CONFIG",
]


@dataclass
class CheckResult:
    """Outcome of one acceptance criterion."""

    number: int
    title: str
    passed: bool
    detail: str
    runtime: float
    time_limit: float
    values: dict = field(default_factory=dict)

    @property
    def in_time(self) -> bool:
        return self.runtime < self.time_limit

    @property
    def ok(self) -> bool:
        return self.passed and self.in_time

    def line(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        return (f"criterion {self.number:2d} [{verdict}] {self.title}: {self.detail} "
                f"({self.runtime:.1f} s, limit {self.time_limit:.0f} s)")


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


# ------------------------------------------------------------------ configurations
# mean-field decay: epsilon = 1, z = 2 Z_sca, 100 steps on 256^2
MEAN_DECAY_CONFIG = mc.SimConfig(
    BeamMedium(20.0, 3.0, CovarianceModel.gaussian(0.002, 1.0)), epsilon=1.0, z_target=20.0,
    dz=0.2, grid=mc.Grid2D(256, 0.125), n_realizations=2000, seed=2024, precision="single")
MEAN_DECAY_RECORD = (4.0, 8.0, 12.0, 16.0)

# mutual coherence at epsilon = 0.05: z = 2 Z_sca (scaled units)
COHERENCE_CONFIG = mc.SimConfig(
    BeamMedium(4.0, 0.35, CovarianceModel.gaussian(1.25, 1.0)), epsilon=0.05, z_target=0.4,
    dz=0.25, grid=mc.Grid2D(256, 0.25), n_realizations=2000, seed=7, precision="single")
COHERENCE_OFFSETS = (0.0, 0.25, 0.5, 0.75, 1.0)
PATCH_CENTERS = tuple((a, b) for a in np.arange(-1.5, 1.51, 0.5) for b in np.arange(-1.5, 1.51, 0.5))

# strong scattering at epsilon = 0.05: z = 3 Z_sca, z / (epsilon k0 lc^2) = 5
_STRONG_K0, _STRONG_Z = 0.6, 0.15
STRONG_CONFIG = mc.SimConfig(
    BeamMedium(_STRONG_K0, 0.15, CovarianceModel.gaussian(24 / (_STRONG_K0**2 * _STRONG_Z), 1.0)),
    epsilon=0.05, z_target=_STRONG_Z, dz=0.25, grid=mc.Grid2D(512, 0.25),
    n_realizations=5000, seed=99, precision="single")
GSR_OFFSETS = ((0.0, 0.0), (0.25, 0.0), (0.0, 0.25), (0.25, 0.25))
WIGNER_XI = (1.0, 0.0)


def _with_n(config, n):
    if n is None:
        return config
    return mc.SimConfig(config.bm, config.epsilon, config.z_target, config.dz, config.grid, n,
                        config.seed, config.precision, config.edge_mask, config.block)


# ------------------------------------------------------------------ analytic criteria
def check_zero_scattering():
    bm = BeamMedium(2.0, 1.0, CovarianceModel.gaussian(1.0, 1.0))
    with _Timer() as t:
        a = scint_index_normalized(0.0, 0.0)
        b = scint_index_limit(bm, 0.0, (0.0, 0.0))
    ok = abs(a) < 1e-8 and abs(b) < 1e-8
    return [CheckResult(1, "zero-scattering sanity", ok,
                        f"S_normalized = {a:.2e}, S_limit = {b:.2e} (need |S| < 1e-8)",
                        t.elapsed, 1.0, {"normalized": a, "limit": b})]


def check_strong_scintillation():
    # c0 = lc = r0 = 1, k0 = 2: Z_sca = Z_c = 2
    bm = BeamMedium(2.0, 1.0, CovarianceModel.gaussian(1.0, 1.0))
    with _Timer() as t:
        s = scint_index_limit(bm, 10 * bm.z_sca, (0.0, 0.0))
    return [CheckResult(2, "strong-scattering scintillation", abs(s - 1) < 0.05,
                        f"S = {s:.10f} at z/Z_sca = 10, Z_c/Z_sca = 1 (need |S - 1| < 0.05)",
                        t.elapsed, 10.0, {"S": s})]


def check_cv_algebra(seed: int = 0):
    rng = np.random.default_rng(seed)
    with _Timer() as t:
        xis = rng.uniform(0.05, 20.0, 100)
        rho = rng.uniform(0.05, 20.0, 100)
        dev = max(abs(cv_strong(SmoothingParams.husimi(a), b) - 1) for a, b in zip(xis, rho))
        _, xis_bar = fig2_axes(n=200)
        hyper = np.diag(fig2_contours(1 / (2 * xis_bar), xis_bar))
        dev_grid = float(np.max(np.abs(hyper - 1)))
        rs_bar, xis_bar = fig2_axes(n=3)
        on_grid = float(fig2_contours(rs_bar, xis_bar)[0, 0])
    ok = dev <= 1e-12 and dev_grid <= 1e-12 and on_grid == 1.0
    return [CheckResult(3, "CV algebra", ok,
                        f"max |cv - 1| = {dev:.1e} (random), {dev_grid:.1e} (hyperbola); "
                        f"fig2 n=3 cell (0.5, 1) = {on_grid!r}",
                        t.elapsed, 1.0, {"random": dev, "hyperbola": dev_grid})]


def check_transport_residual(seed: int = 8):
    bm = BeamMedium(4.0, 1.0, CovarianceModel.gaussian(0.5, 1.0))
    rng = np.random.default_rng(seed)
    rel = []
    with _Timer() as t:
        for _ in range(10):
            r, xi, z = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2), rng.uniform(0.5, 2.0)
            rel.append(wigner_transport_residual(bm, z, r, xi).relative)
    worst = max(rel)
    return [CheckResult(8, "transport-equation residual", worst < 1e-4,
                        f"max relative residual {worst:.2e} over 10 points (need < 1e-4)",
                        t.elapsed, 30.0, {"relative": rel})]


def check_kernel_invariants(seed: int = 3):
    bm = BeamMedium(2.0, 1.0, CovarianceModel.gaussian(1.0, 1.0))
    rng = np.random.default_rng(seed)
    with _Timer() as t:
        zeros = [kernel_A(bm, 0.0, rng.normal(size=2), rng.normal(size=2)).value
                 for _ in range(5)]
        grid0, _ = kernel_A_grid(bm, 0.0, (1.0, -0.5))
        zero_ok = all(v == 0 for v in zeros) and not np.any(grid0)
        sym = []
        for _ in range(5):
            xi, zeta, z = rng.normal(size=2), rng.normal(size=2), rng.uniform(0.2, 2.0)
            a, b = kernel_A(bm, z, xi, zeta), kernel_A(bm, z, -xi, -zeta)
            sym.append(abs(a.value - b.value) <= a.err + b.err + 1e-12)
        bounds = []
        for z in (0.25, 0.5, 1.0, 2.0, 4.0):
            vals, xi = kernel_A_grid(bm, z, (1.0, -0.5), n=128, h=0.25)
            l1 = float(np.abs(vals).sum() * (xi[1] - xi[0]) ** 2)
            e = bm.extinction(z)
            bounds.append((l1, e / 8 * np.exp(e / 4)))
    ok = zero_ok and all(sym) and all(a <= b for a, b in bounds)
    detail = (f"A(0) = 0: {zero_ok}; symmetry {sum(sym)}/5; L1 bound "
              + ", ".join(f"{a:.3g} <= {b:.3g}" for a, b in bounds))
    return [CheckResult(9, "kernel invariants", ok, detail, t.elapsed, 120.0,
                        {"l1": bounds})]


# ------------------------------------------------------------------ Monte-Carlo criteria
def check_mean_field_decay(n_realizations: int | None = None, workers: int = 1):
    cfg = _with_n(MEAN_DECAY_CONFIG, n_realizations)
    with _Timer() as t:
        stats = mc.run_ensemble(cfg, mc.Probes(record_z=MEAN_DECAY_RECORD), workers)
    rows, ok = [], True
    for rec, z in enumerate(stats.record_z):
        est = stats.mean_field(0, rec)
        pred = abs(mean_field(cfg.sim_medium, z / cfg.epsilon, (0.0, 0.0)).value)
        zscore = abs(abs(est.value) - pred) / est.se
        ok &= zscore <= 3
        rows.append((float(z), abs(est.value), est.se, pred, zscore))
    detail = "; ".join(f"z={z:g}: {m:.4f}+-{s:.4f} vs {p:.4f}" for z, m, s, p, _ in rows)
    return [CheckResult(4, "mean-field decay", ok, detail + " (need within 3 s.e.)",
                        t.elapsed, 300.0, {"rows": rows})]


def _coherence_probes():
    offsets, pairs = [], {q: [] for q in COHERENCE_OFFSETS}
    index = {}

    def node(p):
        p = (round(p[0], 9), round(p[1], 9))
        if p not in index:
            index[p] = len(offsets)
            offsets.append(p)
        return index[p]

    for c in PATCH_CENTERS:
        base = node(c)
        for q in COHERENCE_OFFSETS:
            dirs = ((q, 0.0),) if q == 0 else ((q, 0.0), (0.0, q))
            for d in dirs:
                pairs[q].append((node((c[0] + d[0], c[1] + d[1])), base, d))
    return tuple(offsets), pairs


def check_mutual_coherence(n_realizations: int | None = None, workers: int = 1):
    """Patch-averaged ``E[u(c + d) conj(u(c))]`` against the averaged limit prediction."""
    cfg = _with_n(COHERENCE_CONFIG, n_realizations)
    offsets, pairs = _coherence_probes()
    eps = cfg.epsilon
    with _Timer() as t:
        stats = mc.run_ensemble(cfg, mc.Probes(offsets=offsets), workers)
        rows, ok = [], True
        for q in COHERENCE_OFFSETS:
            est = stats.coherence_average([(i, j) for i, j, _ in pairs[q]])
            pred = np.mean([mu2_limit(cfg.bm, cfg.z_target, eps * np.asarray(offsets[j]), d,
                                      (0.0, 0.0)).value for _, j, d in pairs[q]])
            rel = abs(est.value - pred) / abs(pred)
            ok &= rel < 0.1
            rows.append((q, est.value.real, est.se, pred.real, rel))
    detail = "; ".join(f"q={q:g}: {m:.4f}+-{s:.4f} vs {p:.4f} ({100 * r:.1f}%)"
                       for q, m, s, p, r in rows)
    return [CheckResult(5, "mutual coherence", ok, detail + " (need < 10%)", t.elapsed, 300.0,
                        {"rows": rows})]


def strong_probes(config=STRONG_CONFIG):
    """GSR quadruple offsets and the Husimi / doubled-width Wigner probes."""
    rho = strong_regime_stats(config.bm, config.z_target).rho_z
    husimi = SmoothingParams.husimi(1 / rho)
    doubled = SmoothingParams(2 * husimi.r_s, husimi.xi_s)
    wigner = (mc.WignerProbe(husimi, WIGNER_XI), mc.WignerProbe(doubled, WIGNER_XI))
    return mc.Probes(offsets=GSR_OFFSETS, wigner=wigner), rho


def check_gsr_and_wigner_cv(n_realizations: int | None = None, workers: int = 1):
    """Criteria 6 and 7, sharing one strong-scattering ensemble."""
    cfg = _with_n(STRONG_CONFIG, n_realizations)
    probes, rho = strong_probes(cfg)
    with _Timer() as t:
        stats = mc.run_ensemble(cfg, probes, workers)
    gsr = mc.estimate_gsr_residual(stats, 0, 1, 2, 3)
    ok6 = gsr.consistent_with_zero(3.0) and not gsr.inconclusive
    si = stats.scintillation(0)
    r6 = CheckResult(6, "Gaussian summation rule", ok6,
                     f"|defect| = {gsr.value:.4f} +- {gsr.se:.4f}, |mu4| = {abs(gsr.fourth_moment):.4f}"
                     f", center S = {si.value.real:.3f} +- {si.se:.3f} (need |defect| <= 3 s.e.)",
                     t.elapsed, 900.0,
                     {"residual": gsr.value, "se": gsr.se, "scintillation": si.value.real})
    cv_h, cv_d = stats.wigner_cv(0), stats.wigner_cv(1)
    pred_d = cv_strong(probes.wigner[1].smoothing, rho)
    ok7 = abs(cv_h.value - 1) <= 3 * cv_h.se and abs(cv_d.value - pred_d) <= 3 * cv_d.se
    r7 = CheckResult(7, "Wigner CV", bool(ok7),
                     f"Husimi cv = {cv_h.value.real:.4f} +- {cv_h.se:.4f} (predicted 1); doubled r_s"
                     f" cv = {cv_d.value.real:.4f} +- {cv_d.se:.4f} (predicted {pred_d:.4f}); "
                     "need within 3 s.e.",
                     t.elapsed, 900.0,
                     {"husimi": cv_h.value.real, "husimi_se": cv_h.se,
                      "doubled": cv_d.value.real, "doubled_se": cv_d.se, "predicted": pred_d})
    return [r6, r7]


def check_unitarity_determinism(workers: int = 16):
    cfg = mc.SimConfig(BeamMedium(4.0, 1.0, CovarianceModel.gaussian(0.1, 1.0)), epsilon=1.0,
                       z_target=2.0, dz=0.25, grid=mc.Grid2D(64, 0.25), n_realizations=128,
                       seed=31337, precision="double")
    probes = mc.Probes(offsets=((0.0, 0.0), (0.5, 0.25)))
    with _Timer() as t:
        one = mc.run_ensemble(cfg, probes, workers=1)
        many = mc.run_ensemble(cfg, probes, workers=workers)
    drift = float(one.norm_drift.max())
    same = (np.array_equal(one.samples, many.samples)
            and np.array_equal(one.norm_drift, many.norm_drift))
    return [CheckResult(10, "unitarity and determinism", drift < 1e-10 and same,
                        f"max norm drift {drift:.1e} (need < 1e-10); 1 vs {workers} workers "
                        f"bit-identical: {same}", t.elapsed, 60.0, {"drift": drift})]


CHECKS = {
    1: check_zero_scattering,
    2: check_strong_scintillation,
    3: check_cv_algebra,
    4: check_mean_field_decay,
    5: check_mutual_coherence,
    6: check_gsr_and_wigner_cv,
    7: check_gsr_and_wigner_cv,
    8: check_transport_residual,
    9: check_kernel_invariants,
    10: check_unitarity_determinism,
}


def run_checks(numbers=None, workers: int = 1) -> list[CheckResult]:
    """Run the selected criteria (default all) in order; 6 and 7 share one run."""
    numbers = sorted(set(numbers or CHECKS))
    done, out = set(), []
    for k in numbers:
        fn = CHECKS[k]
        if fn in done:
            continue
        done.add(fn)
        kwargs = {"workers": workers} if k in (4, 5, 6, 7) else {}
        out.extend(r for r in fn(**kwargs) if r.number in numbers)
    return sorted(out, key=lambda r: r.number)
