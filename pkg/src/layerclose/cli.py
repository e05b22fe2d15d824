"""Command-line front end: solve, eval, error-map, predict-contours, sweep,
bench, curve-info. One process per command; deterministic outputs embed the
config hash. Exit codes: 0 ok, 2 config error, 3 solver failure, 4 missing
reference.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .boundary_data import make_boundary_data
from .closeeval import CloseEvalParams, close_evaluate
from .config import ConfigError, RunConfig
from .curves import Curve, builtin_curve, schwarz_singularities
from .fastsum import split_evaluate
from .grid import GridSpec, build_field_grid, MASK_EXCLUDED
from .potentials import Density, Kernel, native_eval, trig_upsample
from .prediction import predicted_contour
from .solver import BVPSpec, SolverError, assemble, solve
from .closeeval import convergence_sweep

log = logging.getLogger("layerclose")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_REFERENCE = 4


def _setup_logging() -> None:
    level = os.environ.get("LAYERCLOSE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def build_curve(cfg: RunConfig) -> Curve:
    seed = cfg.seed if cfg.curve == "random40" else None
    return builtin_curve(cfg.curve, seed=seed)


def build_scene(cfg: RunConfig):
    """Curve, boundary data, BVP spec, and representation kernel."""
    curve = build_curve(cfg)
    try:
        data = make_boundary_data(cfg.data, omega=cfg.omega,
                                  source=cfg.source,
                                  wave_angle=cfg.wave_angle)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.data == "unit_density":
        spec = None                # given density, no BVP solve
    else:
        spec = BVPSpec(pde=cfg.pde, omega=cfg.omega, side=cfg.side,
                       bc=cfg.bc, data=data.data_fn(cfg.bc), curve=curve,
                       N=cfg.N)
    if cfg.pde == "helmholtz":
        kernel = Kernel("helmholtz", cfg.omega, "combined")
    elif cfg.bc == "neumann":
        kernel = Kernel("laplace", 0.0, "single")
    else:
        kernel = Kernel("laplace", 0.0, "double")
    return curve, data, spec, kernel


def close_params(cfg: RunConfig) -> CloseEvalParams:
    return CloseEvalParams(
        p=cfg.p, beta=cfg.beta,
        n_boxes=cfg.n_boxes if cfg.n_boxes > 0 else None,
        alpha_bad=cfg.alpha_bad if cfg.alpha_bad > 0 else None,
        alpha0=cfg.alpha0 if cfg.alpha0 > 0 else None,
        side=cfg.side)


def solve_scene(cfg: RunConfig):
    curve, data, spec, kernel = build_scene(cfg)
    if spec is None:               # given density (tau = 1)
        dens = Density(curve, np.ones(cfg.N), equation="given_density")
        dens.solve_info = {"method": "none", "iterations": 0}
        report = {"config_hash": cfg.hash(), "N": cfg.N,
                  "equation": "given_density",
                  "timings": {"assemble_s": 0.0, "solve_s": 0.0}}
        return curve, data, spec, kernel, dens, report
    t0 = time.perf_counter()
    system = assemble(spec)
    t1 = time.perf_counter()
    dens = solve(system, method=cfg.method, tol=cfg.gmres_tol)
    t2 = time.perf_counter()
    report = {
        "config_hash": cfg.hash(),
        "N": cfg.N,
        "equation": system.equation,
        "timings": {"assemble_s": t1 - t0, "solve_s": t2 - t1},
        **dens.solve_info,
    }
    if cfg.method == "gmres":
        report["residual"] = dens.solve_info.get("residual")
    return curve, data, spec, kernel, dens, report


def _evaluate(cfg: RunConfig, kernel, dens, targets: np.ndarray):
    """Evaluate the potential at targets via the configured path."""
    params = close_params(cfg)
    if cfg.path == "native":
        vals = native_eval(kernel, dens, targets)
        if kernel.pde == "laplace":
            vals = vals.real
        tags = np.full(targets.shape, "native", dtype=object)
        return vals, tags
    if cfg.path == "surrogate":
        return close_evaluate(kernel, dens, params, targets)
    return split_evaluate(kernel, dens, params, targets, backend=cfg.backend,
                          accuracy_eps=cfg.accuracy_eps,
                          cutoff_factor=cfg.cutoff_factor)


def _evaluate_threaded(cfg: RunConfig, kernel, dens, targets: np.ndarray):
    if cfg.threads <= 1 or targets.size < 256:
        return _evaluate(cfg, kernel, dens, targets)
    chunks = np.array_split(np.arange(targets.size), cfg.threads)
    with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
        futs = [ex.submit(_evaluate, cfg, kernel, dens, targets[c])
                for c in chunks]
        parts = [f.result() for f in futs]
    vals = np.concatenate([p[0] for p in parts])
    tags = np.concatenate([p[1] for p in parts])
    return vals, tags


def _reference_field(cfg: RunConfig, data, kernel, dens, pts, dist):
    """Reference values at pts, or (None, reason) when unavailable.

    analytic: the exact field of the boundary data (valid on cfg.side).
    fine_native: native evaluation with a 16x upsampled density, excluding a
    1e-3 collar around the boundary.
    """
    if cfg.reference == "analytic":
        if data.valid_side not in (cfg.side, "both"):
            return None, None, "no analytic reference for this data/side"
        ref = data.u(pts)
        if cfg.pde == "laplace":
            ref = np.real(ref)
        return ref, np.zeros(pts.shape, bool), ""
    fine = Density(dens.curve, trig_upsample(dens.values, 16 * dens.N),
                   interpolant="trig")
    ref = native_eval(kernel, fine, pts)
    if cfg.pde == "laplace":
        ref = ref.real
    excl = dist < 1e-3
    return ref, excl, ""


def _active_cells(fg):
    return fg.mask != MASK_EXCLUDED


def _neumann_constant(vals, ref, active, dist):
    """Constant offset of the single-layer solution, fixed at the deepest cell."""
    idx = np.where(active.ravel())[0]
    far = idx[np.argmax(dist.ravel()[idx])]
    return vals.ravel()[far] - ref.ravel()[far]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve(cfg: RunConfig, out: str) -> int:
    curve, data, spec, kernel, dens, report = solve_scene(cfg)
    os.makedirs(out, exist_ok=True)
    payload = dens.to_json_dict()
    payload["config_hash"] = cfg.hash()
    with open(os.path.join(out, "density.json"), "w") as fh:
        json.dump(payload, fh, sort_keys=True)
    with open(os.path.join(out, "solve_report.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
    log.info("solve done: N=%d equation=%s", cfg.N, report["equation"])
    return EXIT_OK


def _eval_common(cfg: RunConfig):
    curve, data, spec, kernel, dens, report = solve_scene(cfg)
    gspec = GridSpec.parse(cfg.grid)
    alpha_bad = cfg.alpha_bad if cfg.alpha_bad > 0 else 10 * np.pi / cfg.N
    fg = build_field_grid(curve, gspec, alpha_bad, cfg.side)
    active = _active_cells(fg)
    t0 = time.perf_counter()
    vals, tags = _evaluate_threaded(cfg, kernel, dens, fg.points[active])
    report["timings"]["eval_s"] = time.perf_counter() - t0
    fg.values[active] = vals
    fg.method[active] = tags
    return curve, data, kernel, dens, fg, active, report


def cmd_eval(cfg: RunConfig, out: str) -> int:
    curve, data, kernel, dens, fg, active, report = _eval_common(cfg)
    os.makedirs(out, exist_ok=True)
    fg.write_csv(os.path.join(out, "field.csv"), cfg.hash())
    with open(os.path.join(out, "eval_report.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
    return EXIT_OK


def cmd_error_map(cfg: RunConfig, out: str) -> int:
    curve, data, kernel, dens, fg, active, report = _eval_common(cfg)
    ref, excl_ref, reason = _reference_field(cfg, data, kernel, dens,
                                             fg.points, fg.bdry_dist)
    if ref is None:
        log.error("reference unavailable: %s", reason)
        return EXIT_REFERENCE
    if cfg.bc == "neumann":
        c = _neumann_constant(fg.values, ref, active, fg.bdry_dist)
        fg.values = fg.values - c
    use = active & ~excl_ref
    fg.mask[active & excl_ref] = MASK_EXCLUDED
    sup = np.abs(ref[use]).max() if use.any() else 1.0
    err = np.full(fg.points.shape, np.nan)
    err[use] = np.abs(fg.values[use] - ref[use]) / sup
    fg.log10err = np.log10(np.maximum(err, 1e-18))   # floor exact zeros
    os.makedirs(out, exist_ok=True)
    fg.write_csv(os.path.join(out, "errmap.csv"), cfg.hash())
    report["max_rel_err"] = float(np.nanmax(err)) if use.any() else None
    eps_list = cfg.parse_list("contour_eps")
    if eps_list:
        _write_contours(curve, eps_list, cfg, os.path.join(out, "contours.csv"))
    with open(os.path.join(out, "errmap_report.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
    return EXIT_OK


def _write_contours(curve, eps_list, cfg, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"# config_hash={cfg.hash()}"])
        w.writerow(["x", "y", "alpha", "epsilon"])
        for eps in eps_list:
            rows = predicted_contour(curve, eps, C=1.0, N=cfg.N, n_points=240)
            for r in rows:
                w.writerow([repr(float(v)) for v in r])


def cmd_predict_contours(cfg: RunConfig, out: str) -> int:
    curve = build_curve(cfg)
    eps_list = cfg.parse_list("contour_eps") or [1e-2, 1e-4, 1e-6, 1e-8]
    os.makedirs(out, exist_ok=True)
    _write_contours(curve, eps_list, cfg, os.path.join(out, "contours.csv"))
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: str) -> int:
    curve, data, spec, kernel, dens, report = solve_scene(cfg)
    gspec = GridSpec.parse(cfg.grid)
    alpha_bad = cfg.alpha_bad if cfg.alpha_bad > 0 else 10 * np.pi / cfg.N
    fg = build_field_grid(curve, gspec, alpha_bad, cfg.side)
    active = _active_cells(fg)
    pts = fg.points[active]
    ref, excl, reason = _reference_field(cfg, data, kernel, dens, fg.points,
                                         fg.bdry_dist)
    if ref is None:
        log.error("reference unavailable: %s", reason)
        return EXIT_REFERENCE
    use = active & ~excl
    pts = fg.points[use]
    refv = ref[use]
    rows = convergence_sweep(kernel, dens, close_params(cfg), pts, refv,
                             cfg.parse_list("p_list", int),
                             cfg.parse_list("beta_list", float))
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"# config_hash={cfg.hash()}"])
        w.writerow(["p", "beta", "max_rel_err", "l2_rel_err"])
        for p, b, emax, el2 in rows:
            w.writerow([int(p), b, repr(float(emax)), repr(float(el2))])
    return EXIT_OK


def cmd_bench(cfg: RunConfig, out: str) -> int:
    sizes = cfg.parse_list("sizes", int)
    if sizes != sorted(sizes):
        raise ConfigError("sizes must be ascending")
    curve = build_curve(cfg)
    data = make_boundary_data(cfg.data, omega=cfg.omega, source=cfg.source)
    rows = []
    for n in sizes:
        spec = BVPSpec(pde="laplace", omega=0.0, side="interior",
                       bc="dirichlet", data=data.data_fn("dirichlet"),
                       curve=curve, N=n)
        t0 = time.perf_counter()
        system = assemble(spec)
        t1 = time.perf_counter()
        dens = solve(system, method="gmres", tol=cfg.gmres_tol)
        t2 = time.perf_counter()
        # O(N) collar targets on the interior side
        alpha_bad = 10 * np.pi / n
        tt = np.linspace(0, 2 * np.pi, 3 * n, endpoint=False)
        aa = alpha_bad * (0.2 + 0.6 * ((np.arange(3 * n) * 7919) % 97) / 97.0)
        targets = curve.z(tt + 1j * aa)
        params = CloseEvalParams(p=cfg.p, beta=cfg.beta, side="interior")
        kern = Kernel("laplace", 0.0, "double")
        t3 = time.perf_counter()
        split_evaluate(kern, dens, params, targets, backend=cfg.backend,
                       accuracy_eps=cfg.accuracy_eps,
                       cutoff_factor=cfg.cutoff_factor)
        t4 = time.perf_counter()
        close_evaluate(kern, dens, params, targets)
        t5 = time.perf_counter()
        rows.append({"N": n, "assemble_s": t1 - t0, "solve_s": t2 - t1,
                     "split_eval_s": t4 - t3, "global_eval_s": t5 - t4,
                     "n_targets": len(targets)})
        log.info("bench N=%d: split %.2fs global %.2fs", n, t4 - t3, t5 - t4)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "bench.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"# config_hash={cfg.hash()}"])
        w.writerow(["N", "assemble_s", "solve_s", "split_eval_s",
                    "global_eval_s", "n_targets"])
        for r in rows:
            w.writerow([r["N"], *(repr(float(r[k])) for k in
                                  ("assemble_s", "solve_s", "split_eval_s",
                                   "global_eval_s")), r["n_targets"]])
    ns = np.array([r["N"] for r in rows], float)
    fit = {}
    for key in ("split_eval_s", "global_eval_s"):
        ts = np.array([r[key] for r in rows])
        fit[key + "_exponent"] = float(np.polyfit(np.log(ns), np.log(ts), 1)[0])
    report = {"config_hash": cfg.hash(), "rows": rows, "fit": fit}
    with open(os.path.join(out, "bench_report.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
    return EXIT_OK


def _polyline(pts) -> list:
    return [[float(z.real), float(z.imag)] for z in pts]


def cmd_curve_info(cfg: RunConfig, out: str) -> int:
    curve = build_curve(cfg)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "curve.json"), "w") as fh:
        fh.write(curve.to_json())
    s = curve.nodes(1024)
    sp = curve.speed(s)
    sw = schwarz_singularities(curve, 0.6)
    info = {
        "config_hash": cfg.hash(),
        "name": curve.name,
        "K": curve.K,
        "area": curve.signed_area,
        "perimeter": float(np.sum(sp) * 2 * np.pi / len(s)),
        "speed_min": float(sp.min()),
        "speed_max": float(sp.max()),
        "schwarz_within_0.6": [[float(x.real), float(x.imag)] for x in sw],
    }
    with open(os.path.join(out, "curve_report.json"), "w") as fh:
        json.dump(info, fh, sort_keys=True, indent=2)
    # overlay geometry for the figure kit: boundary, bad-collar edges, boxes
    from layerclose.curves import build_box_cover
    cover = build_box_cover(curve, cfg.N,
                            n_boxes=cfg.n_boxes if cfg.n_boxes > 0 else None,
                            alpha_bad=cfg.alpha_bad if cfg.alpha_bad > 0
                            else None, side=cfg.side)
    t = np.linspace(0, 2 * np.pi, 513)
    sgn = 1.0 if cfg.side == "interior" else -1.0
    boxes = []
    nb = cover.n_boxes
    for b in range(nb):
        t0 = 2 * np.pi * (b - 0.5) / nb
        t1 = 2 * np.pi * (b + 0.5) / nb
        te = np.linspace(t0, t1, 9)
        ae = np.linspace(0, cover.alpha_bad, 5)
        ring = np.concatenate([
            curve.z(te + 0j), curve.z(t1 + 1j * sgn * ae),
            curve.z(te[::-1] + 1j * sgn * cover.alpha_bad),
            curve.z(t0 + 1j * sgn * ae[::-1])])
        boxes.append(_polyline(ring))
    overlays = {
        "config_hash": cfg.hash(),
        "boundary": _polyline(curve.z(t)),
        "gamma_bad": _polyline(curve.z(t + 1j * sgn * cover.alpha_bad)),
        "centers": _polyline(cover.centers),
        "boxes": boxes,
        "schwarz": [[float(x.real), float(x.imag)]
                    for x in curve.z(sw)] if len(sw) else [],
    }
    with open(os.path.join(out, "overlays.json"), "w") as fh:
        json.dump(overlays, fh, sort_keys=True)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "eval": cmd_eval,
    "error-map": cmd_error_map,
    "predict-contours": cmd_predict_contours,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "curve-info": cmd_curve_info,
}


def main(argv=None) -> int:
    _setup_logging()
    ap = argparse.ArgumentParser(prog="layerclose")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default="out")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--path", choices=["native", "surrogate", "split"])
    ap.add_argument("--backend", choices=["direct", "tree"])
    args = ap.parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        if args.threads is not None:
            cfg.threads = args.threads
        if args.path:
            cfg.path = args.path
        if args.backend:
            cfg.backend = args.backend
        cfg.validate()
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
