"""Command-line front end: figure data, point moments, Monte-Carlo runs, validation.

Configuration comes from an INI-like file of ``section.key = value`` lines
(``--config``), then ``--set key=value`` overrides, then dedicated flags.  A
run manifest written by an earlier invocation is also accepted as
``--config``, which reproduces that run.

Exit codes: 0 success, 1 failed validation criteria, 2 invalid arguments or
configuration, 3 numerical non-convergence (unless ``--allow-loose``).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
import warnings
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import monte_carlo as mc
from .analytic_moments import (
    BeamMedium,
    gaussian_summation_residual,
    mean_field,
    mean_wigner,
    mu1_limit,
    mu2_limit,
    mu4_limit,
    mutual_coherence,
)
from .covariance import CovarianceError, CovarianceModel
from .quadrature import NonConvergenceWarning, QuadratureSpec
from .scintillation import fig1_curves, scint_index_limit
from .validation import run_checks
from .wigner_stats import (
    MomentInconsistencyError,
    SmoothingParams,
    fig2_axes,
    fig2_contours,
    scattered_spectrum,
    smoothed_mean,
    smoothed_second_moment,
)

EXIT_FAILED, EXIT_CONFIG, EXIT_LOOSE = 1, 2, 3

# key -> (parser, default)
_float = float
_int = int


def _str(s):
    return str(s).strip()


def parse_vec(text) -> tuple[float, float]:
    """``"a,b"`` -> ``(a, b)``."""
    if isinstance(text, (tuple, list)):
        parts = list(text)
    else:
        parts = [p for p in str(text).replace(" ", "").split(",") if p]
    if len(parts) != 2:
        raise ValueError(f"expected a 2-vector 'a,b', got {text!r}")
    return float(parts[0]), float(parts[1])


def parse_vec_list(text) -> tuple:
    """``"a,b; c,d"`` -> ``((a, b), (c, d))``; empty text gives ``()``."""
    if isinstance(text, (tuple, list)):
        return tuple(parse_vec(v) for v in text)
    return tuple(parse_vec(p) for p in str(text).split(";") if p.strip())


def parse_float_list(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    return tuple(float(p) for p in str(text).replace(";", ",").split(",") if p.strip())


def _opt_vec(text):
    return parse_vec(text) if str(text).strip() not in ("", "None") else None


DEFAULTS = {
    "beam.k0": (_float, 1.0),
    "beam.r0": (_float, 1.0),
    "covariance.kind": (_str, "gaussian"),
    "covariance.c0": (_float, 1.0),
    "covariance.lc": (_float, 1.0),
    "covariance.table": (_str, ""),
    "quad.rel_tol": (_float, 1e-8),
    "quad.abs_tol": (_float, 1e-12),
    "quad.max_level": (_int, 12),
    "grid.n": (_int, 256),
    "grid.h": (_float, 0.125),
    "sim.epsilon": (_float, 1.0),
    "sim.z": (_float, 1.0),
    "sim.dz": (_float, 0.1),
    "sim.realizations": (_int, 100),
    "sim.seed": (_int, 0),
    "sim.precision": (_str, "double"),
    "sim.block": (_int, 8),
    "probes.center": (parse_vec, (0.0, 0.0)),
    "probes.offsets": (parse_vec_list, ((0.0, 0.0),)),
    "probes.record_z": (parse_float_list, ()),
    "probes.quadruple": (parse_vec_list, ()),
    "probes.xi": (_opt_vec, None),
    "probes.xi_s": (_float, 1.0),
    "probes.r_s": (_float, 0.5),
    "fig1.ztilde_max": (_float, 10.0),
    "fig1.steps": (_int, 200),
    "fig1.zc_ratios": (parse_float_list, (0.1, 1.0, 10.0)),
    "fig1.profile": (_str, "gaussian"),
    "fig2.rs_max": (_float, 2.0),
    "fig2.xis_max": (_float, 3.0),
    "fig2.n": (_int, 200),
}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


@dataclass
class RunManifest:
    """Provenance written next to (or inside) every artifact."""

    command: list
    config: dict
    version: str
    timestamp: str
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------------ configuration
def read_config_file(path) -> dict:
    """Raw ``key -> text`` pairs from an INI-like file or a run manifest."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        data = data.get("manifest", data)
        return dict(data.get("config", data))
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["config"])


def resolve_config(raw: dict) -> dict:
    """Typed values for every known key; unknown keys are rejected."""
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    for key, (conv, default) in DEFAULTS.items():
        if key in raw:
            try:
                out[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: {exc}") from None
        else:
            out[key] = default
    return out


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def build_medium(cfg) -> BeamMedium:
    c0, lc = cfg["covariance.c0"], cfg["covariance.lc"]
    kind = cfg["covariance.kind"]
    try:
        if cfg["covariance.table"]:
            cov = CovarianceModel.from_csv(cfg["covariance.table"], c0=c0, lc=lc)
        elif kind == "gaussian":
            cov = CovarianceModel.gaussian(c0, lc)
        else:
            raise ConfigError(f"covariance.kind {kind!r} needs covariance.table")
        return BeamMedium(cfg["beam.k0"], cfg["beam.r0"], cov)
    except (CovarianceError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def build_quad(cfg) -> QuadratureSpec:
    try:
        return QuadratureSpec(rel_tol=cfg["quad.rel_tol"], abs_tol=cfg["quad.abs_tol"],
                              max_level=cfg["quad.max_level"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_sim(cfg) -> mc.SimConfig:
    try:
        return mc.SimConfig(build_medium(cfg), cfg["sim.epsilon"], cfg["sim.z"], cfg["sim.dz"],
                            mc.Grid2D(cfg["grid.n"], cfg["grid.h"]), cfg["sim.realizations"],
                            cfg["sim.seed"], cfg["sim.precision"], block=cfg["sim.block"])
    except (ValueError, MemoryError) as exc:
        raise ConfigError(str(exc)) from None


# ------------------------------------------------------------------ output helpers
class _Run:
    """Collects convergence flags and writes artifacts with their manifest."""

    def __init__(self, args, cfg):
        self.args = args
        self.cfg = cfg
        self.converged = True
        config = {k: _jsonable(v) for k, v in cfg.items()}
        config.update({f"args.{k}": _jsonable(v) for k, v in vars(args).items()
                       if k not in ("func", "config", "set", "out", "allow_loose",
                                     "threads", "argv")
                       and v is not None})
        self.manifest = RunManifest(list(sys.argv[1:]) if args.argv is None else args.argv,
                                    config, __version__,
                                    datetime.now(timezone.utc).isoformat(), cfg["sim.seed"])

    def note(self, converged):
        self.converged &= bool(converged)

    def path(self, default_name):
        out = self.args.out
        if out is None:
            return None
        out = Path(out)
        if out.suffix == Path(default_name).suffix:
            out.parent.mkdir(parents=True, exist_ok=True)
            return out
        out.mkdir(parents=True, exist_ok=True)
        return out / default_name

    def write_json(self, default_name, payload, echo=True):
        payload = dict(payload)
        payload["converged"] = self.converged
        payload["manifest"] = self.manifest.to_dict()
        text = json.dumps(payload, indent=2, default=_default)
        if echo:
            print(text)
        p = self.path(default_name)
        if p is not None:
            p.write_text(text + "\n")
        return p

    def write_csv(self, default_name, header, rows, script=None):
        p = self.path(default_name)
        if p is None:
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            return None
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        manifest = self.manifest.to_dict()
        manifest["artifact"] = p.name
        manifest["converged"] = self.converged
        p.with_suffix(".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        if script is not None:
            p.with_suffix(".gp").write_text(script.replace("@DATA@", p.name))
        return p


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    raise TypeError(f"not serializable: {type(o)}")


def _cplx(v):
    v = complex(v)
    return {"re": v.real, "im": v.imag}


def _estimate(e: mc.Estimate):
    d = _cplx(e.value)
    d["se"] = e.se
    return d


FIG1_SCRIPT = """set datafile separator ','
set xlabel 'z / Z_sca'
set ylabel 'scintillation index'
set key bottom right
ratios = "@RATIOS@"
plot for [r in ratios] '@DATA@' using 1:(abs($2 - real(r)) < 1e-12 ? $3 : 1/0) \\
    with lines title sprintf('Z_c / Z_sca = %s', r)
"""

FIG2_SCRIPT = """set datafile separator ','
set xlabel 'xi_s rho_z'
set ylabel 'r_s / rho_z'
set view map
unset surface
set contour base
set cntrparam levels discrete 0.25, 0.5, 0.75, 1, 1.25
set dgrid3d @N@,@N@
splot '@DATA@' using 2:1:3 with lines notitle
"""


# ------------------------------------------------------------------ subcommands
def cmd_fig1(run):
    cfg = run.cfg
    profile = cfg["fig1.profile"]
    if profile == "gaussian":
        c_tilde = None
    else:
        try:
            c_tilde = CovarianceModel.from_csv(profile)
        except (OSError, CovarianceError) as exc:
            raise ConfigError(f"fig1.profile: {exc}") from None
    try:
        rows = fig1_curves(cfg["fig1.ztilde_max"], cfg["fig1.steps"], cfg["fig1.zc_ratios"],
                           c_tilde)
    except ValueError as exc:
        raise ConfigError(f"fig1: {exc}") from None
    ratios = " ".join(repr(r) for r in cfg["fig1.zc_ratios"])
    run.write_csv("fig1.csv", ["z_over_zsca", "zc_ratio", "S"], rows,
                  FIG1_SCRIPT.replace("@RATIOS@", ratios))


def cmd_fig2(run):
    cfg = run.cfg
    try:
        rs, xs = fig2_axes(cfg["fig2.rs_max"], cfg["fig2.xis_max"], cfg["fig2.n"])
        cv = fig2_contours(rs, xs)
    except ValueError as exc:
        raise ConfigError(f"fig2: {exc}") from None
    rows = [(float(a), float(b), float(cv[i, j]))
            for i, a in enumerate(rs) for j, b in enumerate(xs)]
    run.write_csv("fig2.csv", ["r_s_bar", "xi_s_bar", "cv"], rows,
                  FIG2_SCRIPT.replace("@N@", str(cfg["fig2.n"])))


def _need(offsets, k, quantity):
    if len(offsets) != k:
        raise ConfigError(f"--quantity {quantity} needs {k} offsets separated by ';'")
    return offsets


def cmd_moments(run):
    args, cfg = run.args, run.cfg
    bm, spec = build_medium(cfg), build_quad(cfg)
    try:
        point = parse_vec(args.point)
        offsets = parse_vec_list(args.offsets or "")
        xi = parse_vec(args.xi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    q, z = args.quantity, args.z
    if not z >= 0:
        raise ConfigError("--z must be >= 0")
    if q == "mu1":
        mv = mu1_limit(bm, z, point)
    elif q == "mean":
        mv = mean_field(bm, z, point)
    elif q == "mu2":
        x, y = _need(offsets, 2, q)
        mv = mu2_limit(bm, z, point, x, y, spec)
    elif q == "mu4":
        x1, x2, y1, y2 = _need(offsets, 4, q)
        mv = mu4_limit(bm, z, point, x1, x2, y1, y2, spec)
    elif q == "coherence":
        (d,) = _need(offsets, 1, q)
        mv = mutual_coherence(bm, z, point, d, spec)
    else:
        mv = mean_wigner(bm, z, point, xi, spec)
    run.note(mv.converged)
    run.write_json("moments.json", {"quantity": q, "value_re": mv.value.real,
                                    "value_im": mv.value.imag, "err": mv.err,
                                    "method": mv.method})


def cmd_wigner(run):
    args, cfg = run.args, run.cfg
    bm = build_medium(cfg)
    try:
        r, xi = parse_vec(args.r), parse_vec(args.xi)
        sp = SmoothingParams(args.rs, args.xis)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not args.z >= 0:
        raise ConfigError("--z must be >= 0")
    spectrum = scattered_spectrum(bm, args.z, r) if args.z > 0 and bm.c0 > 0 else None
    mean = smoothed_mean(bm, sp, args.z, r, xi, spectrum)
    second = smoothed_second_moment(bm, sp, args.z, r, xi, spectrum)
    run.note(mean.converged and second.converged)
    m, s = mean.value.real, second.value.real
    cv = float(np.sqrt(max(s - m * m, 0.0)) / m) if m > 0 else float("nan")
    run.write_json("wigner.json", {"mean": m, "second_moment": s, "cv": cv,
                                   "err": mean.err + second.err})


def _probes(cfg, extra_offsets=()):
    offsets = tuple(extra_offsets) or cfg["probes.offsets"]
    wigner = ()
    if cfg["probes.xi"] is not None:
        try:
            wigner = (mc.WignerProbe(SmoothingParams(cfg["probes.r_s"], cfg["probes.xi_s"]),
                                     cfg["probes.xi"]),)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return mc.Probes(offsets=offsets, center=cfg["probes.center"],
                     record_z=cfg["probes.record_z"], wigner=wigner)


def _run_sim(run, probes):
    sim = build_sim(run.cfg)
    try:
        stats = mc.run_ensemble(sim, probes, workers=run.args.threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return sim, stats


def cmd_mc(run):
    cfg = run.cfg
    probes = _probes(cfg)
    sim, stats = _run_sim(run, probes)
    med, eps = sim.sim_medium, sim.epsilon
    spec = build_quad(cfg)
    records = []
    for k, z in enumerate(stats.record_z):
        zs = z / eps
        points = []
        for i, pos in enumerate(stats.positions):
            entry = {"offset": probes.offsets[i], "position": pos,
                     "mean_field": _estimate(stats.mean_field(i, k)),
                     "mean_field_exact": _cplx(mean_field(med, zs, pos).value),
                     "scintillation": _estimate(stats.scintillation(i, k))}
            if sim.bm.c0 > 0:
                entry["scintillation_limit"] = scint_index_limit(sim.bm, z, eps * pos, spec)
            points.append(entry)
        pairs = []
        for j in range(1, len(stats.positions)):
            a, b = stats.positions[0], stats.positions[j]
            exact = mutual_coherence(med, zs, (a + b) / 2, a - b, spec)
            run.note(exact.converged)
            pairs.append({"i": 0, "j": j, "coherence": _estimate(stats.coherence(0, j, k)),
                          "coherence_exact": _cplx(exact.value)})
        records.append({"z": z, "points": points, "coherence": pairs})
    payload = {"count": stats.count, "n_steps": sim.n_steps, "z_sim": sim.z_sim,
               "records": records, "norm_drift_max": float(np.max(stats.norm_drift, initial=0)),
               "absorbed_max": float(np.max(stats.absorbed, initial=0))}
    if probes.wigner:
        probe = probes.wigner[0]
        center = np.asarray(probes.center)
        entry = {"xi": probe.xi, "r_s": probe.smoothing.r_s, "xi_s": probe.smoothing.xi_s,
                 "mean": _estimate(stats.wigner_mean(0)), "cv": _estimate(stats.wigner_cv(0))}
        try:
            m = smoothed_mean(sim.bm, probe.smoothing, sim.z_target, center, probe.xi)
            s = smoothed_second_moment(sim.bm, probe.smoothing, sim.z_target, center, probe.xi)
            run.note(m.converged and s.converged)
            mv, sv = m.value.real, s.value.real
            entry["mean_limit"] = mv
            entry["cv_limit"] = float(np.sqrt(max(sv - mv * mv, 0.0)) / mv)
        except MomentInconsistencyError as exc:
            entry["limit_error"] = str(exc)
            run.note(False)
        payload["wigner"] = entry
    run.write_json("stats.json", payload, echo=False)
    print(f"{stats.count} realizations, {sim.n_steps} steps; "
          f"max norm drift {payload['norm_drift_max']:.2e}")


def cmd_gsr_check(run):
    cfg = run.cfg
    quad = cfg["probes.quadruple"]
    if len(quad) != 4:
        raise ConfigError("probes.quadruple needs four offsets 'x1; x2; y1; y2'")
    sim, stats = _run_sim(run, mc.Probes(offsets=quad, center=cfg["probes.center"]))
    res = mc.estimate_gsr_residual(stats, 0, 1, 2, 3)
    center = np.asarray(cfg["probes.center"])
    payload = {"count": stats.count, "residual": res.value, "se": res.se,
               "fourth_moment": _cplx(res.fourth_moment),
               "consistent_with_zero": res.consistent_with_zero(3.0),
               "inconclusive": res.inconclusive,
               "limit_path_residual": gaussian_summation_residual(
                   sim.bm, sim.z_target, center, *quad, build_quad(cfg))}
    run.write_json("gsr.json", payload)


def cmd_validate(run):
    try:
        numbers = [int(k) for k in run.args.criteria.split(",")] if run.args.criteria else None
    except ValueError:
        raise ConfigError("--criteria takes a comma-separated list of integers") from None
    if numbers and any(k not in range(1, 11) for k in numbers):
        raise ConfigError("criteria are numbered 1 to 10")
    results = run_checks(numbers, workers=run.args.threads)
    for r in results:
        print(r.line(), flush=True)
    run.write_json("validation.json", {"criteria": [
        {"number": r.number, "title": r.title, "passed": r.passed, "in_time": r.in_time,
         "runtime": r.runtime, "time_limit": r.time_limit, "detail": r.detail}
        for r in results]}, echo=False)
    return 0 if all(r.ok for r in results) else EXIT_FAILED


# ------------------------------------------------------------------ parser
def _medium_flags(p):
    p.add_argument("--k0", type=float, help="wavenumber (beam.k0)")
    p.add_argument("--r0", type=float, help="beam radius (beam.r0)")
    p.add_argument("--c0", type=float, help="C(0) (covariance.c0)")
    p.add_argument("--lc", type=float, help="correlation length (covariance.lc)")
    p.add_argument("--table", help="tabulated profile CSV (covariance.table)")


FLAG_KEYS = {
    "k0": "beam.k0", "r0": "beam.r0", "c0": "covariance.c0", "lc": "covariance.lc",
    "table": "covariance.table", "seed": "sim.seed", "ztilde_max": "fig1.ztilde_max",
    "steps": "fig1.steps", "zc_ratios": "fig1.zc_ratios", "profile": "fig1.profile",
    "rs_max": "fig2.rs_max", "xis_max": "fig2.xis_max", "n": "fig2.n",
    "realizations": "sim.realizations",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-like 'section.key = value' file or run manifest")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key")
    common.add_argument("--out", help="output directory (or file path)")
    common.add_argument("--seed", type=int, help="random seed (sim.seed)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker processes; never changes results")
    common.add_argument("--allow-loose", action="store_true",
                        help="exit 0 even if a quadrature missed its tolerance")

    parser = argparse.ArgumentParser(prog="paraxial-moments", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig1", parents=[common], help="scintillation index curves (CSV)")
    p.add_argument("--ztilde-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--zc-ratios")
    p.add_argument("--profile", help="'gaussian' or a radius,value CSV table")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fig2", parents=[common], help="coefficient-of-variation map (CSV)")
    p.add_argument("--rs-max", type=float)
    p.add_argument("--xis-max", type=float)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("moments", parents=[common], help="point evaluation of a moment (JSON)")
    p.add_argument("action", choices=["eval"])
    p.add_argument("--quantity", required=True,
                   choices=["mu1", "mu2", "mu4", "wigner", "coherence", "mean"])
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--point", default="0,0", help="position 'a,b'")
    p.add_argument("--offsets", help="offsets 'a,b; c,d; ...' (mu2: x;y, mu4: x1;x2;y1;y2, "
                                     "coherence: q)")
    p.add_argument("--xi", default="0,0", help="angle for --quantity wigner")
    _medium_flags(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("wigner", parents=[common], help="smoothed Wigner statistics (JSON)")
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--r", default="0,0")
    p.add_argument("--xi", default="0,0")
    p.add_argument("--rs", type=float, required=True)
    p.add_argument("--xis", type=float, required=True)
    _medium_flags(p)
    p.set_defaults(func=cmd_wigner)

    for name, func, text in (("mc", cmd_mc, "Monte-Carlo ensemble (JSON)"),
                             ("gsr-check", cmd_gsr_check, "Gaussian summation rule test")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--realizations", type=int)
        _medium_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("validate", parents=[common], help="acceptance suite report")
    p.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,3")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(argv) if argv is not None else None
    try:
        raw = read_config_file(args.config) if args.config else {}
        raw = {k: v for k, v in raw.items() if not k.startswith("args.")}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            raw[key.strip()] = value.strip()
        for flag, key in FLAG_KEYS.items():
            value = getattr(args, flag, None)
            if value is not None:
                raw[key] = value
        cfg = resolve_config(raw)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        run = _Run(args, cfg)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NonConvergenceWarning)
            status = args.func(run) or 0
        for w in caught:
            if issubclass(w.category, NonConvergenceWarning):
                run.converged = False
            print(f"warning: {w.message}", file=sys.stderr)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MomentInconsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOOSE
    if status:
        return status
    if not run.converged and not args.allow_loose:
        print("error: a computation did not converge (use --allow-loose to accept)",
              file=sys.stderr)
        return EXIT_LOOSE
    return 0


if __name__ == "__main__":
    sys.exit(main())
