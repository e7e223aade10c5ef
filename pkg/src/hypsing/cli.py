"""Command-line frontend emitting deterministic JSON reports.

Subcommands: classify, rouche, verify, grid, zeros, lambda0.  Reports go to
stdout as JSON with sorted keys and shortest round-trip floats; logs go to
stderr.  Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O
error.  Files are written to a temp name and atomically renamed, so a
failure never leaves partial output behind.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT_TOLERANCES, InstanceConfig, build_sum, load_config
from .contour import Circle, winding_count
from .developing import (
    canonical_path,
    default_base_point,
    estimate_lambda0,
    integrate_segment,
    monodromy,
    path_integral,
)
from .errors import ConfigError, HalfPlaneViolation, NumericalError
from .geometry import Disc
from .meromorphic import MeromorphicSum, _h0_tail_abs_bound, _h0_term, _term_values, make_h0, truncate
from .metric import curvature_check, grid_csv, grid_pgm, measure_cone_angle, sample_grid
from .schwarzian import classify_all, numeric_schwarzian, schwarzian_from_h
from .zeros import locate_zeros

log = logging.getLogger("hypsing")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

ROUCHE_CIRCLE_NODES = 4096


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _json_dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _tol_overrides(pairs: list[str]) -> dict[str, float]:
    overrides: dict[str, float] = {}
    for item in pairs:
        name, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance name {name!r}")
        try:
            overrides[name] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"tolerance {name!r} is not a number: {raw!r}") from exc
    return overrides


def _region(cfg: InstanceConfig) -> Disc:
    return cfg.window.circumscribed_disc()


def _lambda0_resolution(cfg: InstanceConfig, overrides: dict[str, float], region: Disc) -> float:
    res = cfg.tolerance("lambda0_resolution", overrides)
    if res > 0.0:
        return res
    return max(4.0 * cfg.spacing, region.radius / 40.0)


def _resolve_offset(cfg, overrides, h, region, base):
    """(lambda, lambda0 estimate) with 'auto' meaning threshold + 1."""
    res = _lambda0_resolution(cfg, overrides, region)
    est = estimate_lambda0(h, region, res, base)
    lam = est.value + 1.0 if cfg.lam == "auto" else float(cfg.lam)
    return lam, est


def _serialize_report(rep) -> dict:
    return {
        "location": _pair(rep.location),
        "kind": rep.kind,
        "theta": rep.theta,
        "angle": rep.angle,
        "c2": _pair(rep.c2),
        "indicial": [rep.indicial[0], rep.indicial[1]],
        "source": rep.source,
        "flag": rep.flag,
    }


def cmd_classify(cfg: InstanceConfig, overrides: dict[str, float], threads: int) -> dict:
    h = build_sum(cfg)
    region = _region(cfg)
    base = default_base_point(h)
    lam, est = _resolve_offset(cfg, overrides, h, region, base)
    reports = classify_all(
        h,
        region,
        class_tol=cfg.tolerance("class_tol", overrides),
        trunc_tol=cfg.tolerance("trunc_tol", overrides),
        zero_tol=cfg.tolerance("zero_tol", overrides),
        threads=threads,
    )
    cones = [
        {"location": _pair(r.location), "theta": r.theta, "angle": r.angle}
        for r in reports
        if r.kind == "cone"
    ]
    return {
        "command": "classify",
        "version": __version__,
        "base_point": _pair(base),
        "lambda": lam,
        "lambda0": {"value": est.value, "resolution": est.grid_resolution, "margin": est.margin},
        "singularities": [_serialize_report(r) for r in reports],
        "divisor": {"cusps": sum(1 for r in reports if r.kind == "cusp"), "cones": cones},
        "flags": [_pair(r.location) for r in reports if r.flag],
    }


def cmd_zeros(cfg: InstanceConfig, overrides: dict[str, float]) -> dict:
    h = build_sum(cfg)
    region = _region(cfg)
    records = locate_zeros(
        h,
        region,
        tol=cfg.tolerance("zero_tol", overrides),
        trunc_tol=cfg.tolerance("trunc_tol", overrides),
    )
    return {
        "command": "zeros",
        "version": __version__,
        "region": {"center": _pair(region.center), "radius": region.radius},
        "zeros": [
            {
                "location": _pair(r.location),
                "multiplicity": r.multiplicity,
                "residual": r.refinement_residual,
            }
            for r in records
        ],
        "total_multiplicity": sum(r.multiplicity for r in records),
    }


def cmd_lambda0(cfg: InstanceConfig, overrides: dict[str, float]) -> dict:
    h = build_sum(cfg)
    region = _region(cfg)
    base = default_base_point(h)
    res = _lambda0_resolution(cfg, overrides, region)
    est = estimate_lambda0(h, region, res, base)
    return {
        "command": "lambda0",
        "version": __version__,
        "base_point": _pair(base),
        "lambda0": {"value": est.value, "resolution": est.grid_resolution, "margin": est.margin},
    }


# ---------------------------------------------------------------------------
# Certified count comparison between the built-in infinite instance and its
# truncations on the circles |z| = 1 - 1/(2N).
# ---------------------------------------------------------------------------

def _inverse_square_tail(n: int, terms: int = 200_000) -> float:
    """Upper bound for sum over j > n of 1/j**2 by partial sum + remainder."""
    js = np.arange(n + 1, n + terms + 1, dtype=float)
    return float((1.0 / (js * js)).sum() + 1.0 / (n + terms))


def _rouche_single(n: int) -> dict:
    r_n = 1.0 - 1.0 / (2 * n)
    circle = Circle(0j, r_n, nodes=ROUCHE_CIRCLE_NODES)
    f_n = MeromorphicSum(tuple(_h0_term(j) for j in range(1, n + 1)))
    theta = 2.0 * np.pi * np.arange(ROUCHE_CIRCLE_NODES) / ROUCHE_CIRCLE_NODES
    ring = r_n * np.exp(1j * theta)
    (f_vals,) = _term_values(f_n, ring)
    min_f = float(np.abs(f_vals).min())

    m = n + 512
    g_block = MeromorphicSum(tuple(_h0_term(j) for j in range(n + 1, m + 1)))
    (g_vals,) = _term_values(g_block, ring)
    g_remainder = _h0_tail_abs_bound(m, Disc(0j, r_n))
    sampled_max_g = float(np.abs(g_vals).max() + g_remainder)

    bound = _inverse_square_tail(n)
    w_f = winding_count(f_n, circle)
    h0 = make_h0(tail_start=1)
    w_h = winding_count(h0, circle, trunc_tol=1e-6)
    return {
        "N": n,
        "r_N": r_n,
        "min_fN": min_f,
        "max_gN_bound": bound,
        "sampled_max_gN": sampled_max_g,
        "inequality_holds": bool(min_f > bound),
        "zero_count_fN": w_f.count + n,
        "zero_count_h0": w_h.count + n,
    }


def cmd_rouche(n_max: int) -> dict:
    if n_max < 2:
        raise ConfigError("rouche needs --nmax >= 2")
    return {
        "command": "rouche",
        "version": __version__,
        "reports": [_rouche_single(n) for n in range(2, n_max + 1)],
    }


# ---------------------------------------------------------------------------
# Full verification battery for one instance.
# ---------------------------------------------------------------------------

def _sample_clear_points(rng, window, singulars, clearance: float, count: int) -> list[complex]:
    points: list[complex] = []
    sing = np.array(singulars) if singulars else np.empty(0, dtype=complex)
    while len(points) < count:
        batch = rng.uniform(window.x0, window.x1, size=4 * count) + 1j * rng.uniform(
            window.y0, window.y1, size=4 * count
        )
        if sing.size:
            keep = np.abs(batch[:, None] - sing).min(axis=1) >= clearance
            batch = batch[keep]
        points.extend(complex(z) for z in batch[: count - len(points)])
    return points


def cmd_verify(cfg: InstanceConfig, overrides: dict[str, float], seed: int, threads: int) -> dict:
    h = build_sum(cfg)
    region = _region(cfg)
    base = default_base_point(h)
    lam, est = _resolve_offset(cfg, overrides, h, region, base)
    if lam <= est.value:
        raise HalfPlaneViolation(
            f"offset {lam} is not above the estimated threshold {est.value:.6g}"
        )
    trunc_tol = cfg.tolerance("trunc_tol", overrides)
    zero_tol = cfg.tolerance("zero_tol", overrides)
    fin = truncate(h, Disc(0j, max(region.sup_modulus, abs(base)) + 1e-3), trunc_tol).sum

    zeros = locate_zeros(fin, region, tol=zero_tol)
    reports = classify_all(
        fin,
        region,
        class_tol=cfg.tolerance("class_tol", overrides),
        zeros=zeros,
        threads=threads,
    )
    poles_in = [
        (i, complex(p), complex(a))
        for i, (a, p) in enumerate(((a, p) for a, p in fin.terms))
        if abs(p - region.center) < region.radius
    ]
    singulars = [p for _, p, _ in poles_in] + [r.location for r in zeros]

    mono_tol = cfg.tolerance("monodromy_tol", overrides)
    mono = []
    for idx, p, a in poles_in:
        measured = monodromy(fin, idx)
        expected = 2.0 * math.pi * a.real
        mono.append(
            {
                "pole": _pair(p),
                "measured": measured,
                "expected": expected,
                "ok": bool(abs(measured - expected) <= mono_tol),
            }
        )

    rng = np.random.default_rng(seed)
    clearance = max(5.0 * cfg.spacing, fin.pole_guard)
    curvature_pts = _sample_clear_points(rng, cfg.window, singulars, clearance, 200)
    curv = curvature_check(
        fin, lam, curvature_pts, base=base, singular_points=singulars
    )
    curvature_tol = cfg.tolerance("curvature_tol", overrides)

    cone_rel = cfg.tolerance("cone_angle_rel_tol", overrides)
    cones = []
    for rec in zeros:
        theta_expected = rec.multiplicity + 1.0
        d_min = min(
            (abs(rec.location - q) for q in singulars if q != rec.location),
            default=region.radius,
        )
        r1 = min(0.02, 0.25 * d_min)
        measured = measure_cone_angle(fin, lam, rec.location, (r1, 0.5 * r1), base=base)
        cones.append(
            {
                "location": _pair(rec.location),
                "theta_expected": theta_expected,
                "theta_measured": measured,
                "radii": [r1, 0.5 * r1],
                "ok": bool(abs(measured - theta_expected) <= cone_rel * theta_expected),
            }
        )

    cusp_limit = cfg.tolerance("cusp_theta_limit", overrides)
    cusps = []
    for _, p, _ in poles_in:
        d_min = min((abs(p - q) for q in singulars if q != p), default=region.radius)
        r1 = min(1e-3, 0.1 * d_min)
        measured = measure_cone_angle(fin, lam, p, (r1, 0.5 * r1), base=base)
        cusps.append(
            {
                "pole": _pair(p),
                "theta_measured": measured,
                "radii": [r1, 0.5 * r1],
                "ok": bool(measured < cusp_limit),
            }
        )

    schw_tol = cfg.tolerance("schwarzian_tol", overrides)
    schw_pts = _sample_clear_points(rng, cfg.window, singulars, clearance, 100)
    worst_schw = 0.0
    for z in schw_pts:
        base_integral, _ = path_integral(fin, canonical_path(fin, z, base))

        def branch(w, _z=z, _anchor=base_integral):
            if w == _z:
                return 1j * lam + _anchor
            val, _ = integrate_segment(
                lambda zz: -1j * _term_values(fin, np.asarray(zz, dtype=complex))[0],
                _z,
                w,
                tol=1e-13,
            )
            return 1j * lam + _anchor + val

        dist = min(abs(z - q) for q in singulars) if singulars else 1.0
        numeric = numeric_schwarzian(branch, z, step=0.02 * dist)
        closed = schwarzian_from_h(fin, z)
        worst_schw = max(worst_schw, abs(numeric - closed))

    checks = {
        "halfplane": {"lambda": lam, "lambda0": est.value, "ok": True},
        "classification": {
            "cusps": sum(1 for r in reports if r.kind == "cusp"),
            "cones": sum(1 for r in reports if r.kind == "cone"),
            "flagged": sum(1 for r in reports if r.flag),
            "ok": not any(r.flag for r in reports),
        },
        "monodromy": {"entries": mono, "ok": all(m["ok"] for m in mono)},
        "curvature": {
            "max_abs_deviation": curv.max_abs_deviation,
            "nodes_tested": curv.nodes_tested,
            "tolerance": curvature_tol,
            "ok": bool(curv.max_abs_deviation < curvature_tol),
        },
        "cone_angles": {"entries": cones, "ok": all(c["ok"] for c in cones)},
        "cusp_angles": {"entries": cusps, "ok": all(c["ok"] for c in cusps)},
        "schwarzian_agreement": {
            "max_abs_difference": worst_schw,
            "points": len(schw_pts),
            "tolerance": schw_tol,
            "ok": bool(worst_schw < schw_tol),
        },
    }
    return {
        "command": "verify",
        "version": __version__,
        "seed": seed,
        "checks": checks,
        "passed": all(section["ok"] for section in checks.values()),
    }


def cmd_grid(cfg: InstanceConfig, overrides: dict[str, float], out_dir: Path, pgm: bool) -> dict:
    h = build_sum(cfg)
    region = _region(cfg)
    base = default_base_point(h)
    lam, _ = _resolve_offset(cfg, overrides, h, region, base)
    grid = sample_grid(
        h,
        lam,
        cfg.window,
        cfg.spacing,
        base,
        trunc_tol=cfg.tolerance("trunc_tol", overrides),
        zero_tol=cfg.tolerance("zero_tol", overrides),
    )
    csv_path = out_dir / "grid.csv"
    _atomic_write(csv_path, grid_csv(grid).encode("ascii"))
    doc = {
        "command": "grid",
        "version": __version__,
        "lambda": lam,
        "nx": grid.nx,
        "ny": grid.ny,
        "masked_fraction": grid.masked_fraction,
        "csv": str(csv_path),
    }
    if pgm:
        payload, meta = grid_pgm(grid)
        pgm_path = out_dir / "grid.pgm"
        meta_path = out_dir / "grid_meta.json"
        _atomic_write(pgm_path, payload)
        _atomic_write(meta_path, _json_dumps(meta).encode("ascii"))
        doc["pgm"] = str(pgm_path)
        doc["pgm_meta"] = str(meta_path)
    return doc


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to an instance config (JSON)")
    common.add_argument("--out", default=".", help="output directory for file-writing commands")
    common.add_argument("--threads", type=int, default=1, help="worker threads for classification")
    common.add_argument(
        "--tol",
        action="append",
        default=[],
        metavar="NAME=VAL",
        help="override a named tolerance (repeatable)",
    )
    common.add_argument("--seed", type=int, default=0, help="seed for randomized check points")
    common.add_argument("--verbose", action="store_true", help="chatty logs on stderr")

    parser = argparse.ArgumentParser(
        prog="hypsing",
        description="Singular hyperbolic metrics from partial-fraction data: "
        "classification, zero counts, curvature and monodromy verification.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="singularity reports and divisor summary")
    sub.add_parser("zeros", parents=[common], help="certified zero census of the window disc")
    sub.add_parser("lambda0", parents=[common], help="offset threshold estimate")
    sub.add_parser("verify", parents=[common], help="full numerical verification battery")
    rouche = sub.add_parser(
        "rouche", parents=[common], help="truncation-vs-tail count comparison reports"
    )
    rouche.add_argument("--nmax", type=int, default=8, help="largest truncation index")
    grid = sub.add_parser("grid", parents=[common], help="write the sampled log-density grid")
    grid.add_argument("--pgm", action="store_true", help="also write an 8-bit PGM preview")
    return parser


def _require_config(args) -> InstanceConfig:
    if not args.config:
        raise ConfigError(f"{args.command} requires --config")
    return load_config(args.config)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        overrides = _tol_overrides(args.tol)
        if args.command == "classify":
            doc = cmd_classify(_require_config(args), overrides, args.threads)
        elif args.command == "zeros":
            doc = cmd_zeros(_require_config(args), overrides)
        elif args.command == "lambda0":
            doc = cmd_lambda0(_require_config(args), overrides)
        elif args.command == "verify":
            doc = cmd_verify(_require_config(args), overrides, args.seed, args.threads)
        elif args.command == "rouche":
            doc = cmd_rouche(args.nmax)
        elif args.command == "grid":
            doc = cmd_grid(_require_config(args), overrides, Path(args.out), args.pgm)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        _emit_error(exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        _emit_error(exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        _emit_error(exc)
        return EXIT_IO
    sys.stdout.write(_json_dumps(doc))
    if args.command == "verify" and not doc["passed"]:
        return EXIT_NUMERICAL
    return EXIT_OK


def _emit_error(exc: Exception) -> None:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    sys.stderr.write(_json_dumps(payload))


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
