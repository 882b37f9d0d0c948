"""Command-line entry point: ``gradstate {solve,bench,alpha-sweep,mesh-info}``.

Exit codes: 0 success, 1 usage or data error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import io
from .mesh import MeshError, build_disk_mesh, mesh_size, min_angle
from .problems import PROBLEMS, alpha_sweep_spec, get_problem
from .solvers import ALGORITHMS, SolverConfig, discretize, run

log = logging.getLogger("gradstate")

EXIT_OK, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2

DEFAULT_ALPHAS = [1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5]

# config-file keys and their types; CLI flags override file values
CONFIG_KEYS = {
    "problem": str,
    "level": int,
    "levels": str,
    "algo": str,
    "algos": str,
    "alpha": float,
    "alphas": str,
    "tol": float,
    "max_iter": int,
    "admm_sigma": float,
    "out": str,
    "export_vtk": str,
}


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = CONFIG_KEYS[key](value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def h_label(radius: float, level: int) -> str:
    """Nominal mesh size r / 2^level written as ``1/2^e`` when possible."""
    e = level - math.log2(radius)
    if float(e).is_integer():
        return f"1/2^{int(e)}"
    return f"{radius / 2**level:.4g}"


def parse_int_list(text: str) -> list[int]:
    """``"2..5"`` or ``"2,3,4"``."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def thread_cap() -> int:
    raw = os.environ.get("GRADSTATE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _settings(args) -> dict:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _solver_config(cfg) -> SolverConfig:
    kw = {k: cfg[k] for k in ("tol", "max_iter", "admm_sigma") if k in cfg}
    return SolverConfig(**kw)


def _problem(cfg):
    name = cfg.get("problem", "example1")
    if name not in PROBLEMS:
        raise UsageError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    spec = get_problem(name)
    if cfg.get("alpha") is not None:
        spec = spec.with_alpha(cfg["alpha"])
    return spec


def _algorithms(text) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad or not algos:
        raise UsageError(f"unknown algorithm {bad or text!r}; choose from {sorted(ALGORITHMS)}")
    return algos


def cmd_solve(args) -> int:
    cfg = _settings(args)
    spec = _problem(cfg)
    algo = _algorithms(cfg.get("algo", "dabcd"))
    if len(algo) != 1:
        raise UsageError("solve takes a single --algo")
    level = cfg.get("level", 3)
    disc = discretize(spec, level)
    report = run(disc, algo[0], _solver_config(cfg))
    text = report.to_json()
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        summary = {k: report.to_dict()[k] for k in ("algorithm", "level", "alpha", "iterations", "residual", "converged", "wall_time_seconds")}
        print(json.dumps(summary))
    if cfg.get("export_vtk"):
        sysm = disc.system
        io.write_vtk(sysm.mesh, sysm.interior_map, {"y": report.y, "u": report.u, "p": report.p}, cfg["export_vtk"])
    return EXIT_OK if report.converged else EXIT_NOCONV


def _bench_one(spec, level, algos, sconf):
    disc = discretize(spec, level)
    rows = []
    for algo in algos:
        try:
            rep = run(disc, algo, sconf)
            rows.append(
                dict(
                    h_label=h_label(spec.radius, level),
                    dofs=disc.n,
                    algorithm=algo,
                    iterations=rep.iterations,
                    residual=rep.residual,
                    wall_time_seconds=rep.wall_time_seconds,
                    flag="" if rep.converged else "max_iter",
                )
            )
        except Exception as exc:  # record and keep sweeping
            log.error("level %d %s failed: %s", level, algo, exc)
            rows.append(
                dict(h_label=h_label(spec.radius, level), dofs=disc.n, algorithm=algo,
                     iterations=sconf.max_iter, residual=float("nan"), wall_time_seconds=0.0,
                     flag=f"error: {type(exc).__name__}")
            )
    return rows


def cmd_bench(args) -> int:
    cfg = _settings(args)
    spec = _problem(cfg)
    levels = parse_int_list(cfg.get("levels", "2..4"))
    algos = _algorithms(cfg.get("algos", "dabcd,ihadmm,admm"))
    sconf = _solver_config(cfg)
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        chunks = list(pool.map(lambda lv: _bench_one(spec, lv, algos, sconf), levels))
    rows = [r for chunk in chunks for r in chunk]
    _emit(rows, io.BENCH_FIELDS, cfg.get("out"))
    return EXIT_OK if all(not r["flag"] for r in rows) else EXIT_NOCONV


def cmd_alpha_sweep(args) -> int:
    cfg = _settings(args)
    base = _problem(cfg)
    alphas = parse_float_list(cfg["alphas"]) if cfg.get("alphas") else DEFAULT_ALPHAS
    specs = alpha_sweep_spec(base, alphas)
    level = cfg.get("level", 4)
    algo = _algorithms(cfg.get("algo", "dabcd"))[0]
    sconf = _solver_config(cfg)
    disc0 = discretize(specs[0], level)

    def one(spec):
        rep = run(disc0.with_problem(spec), algo, sconf)
        return dict(alpha=spec.alpha, iterations=rep.iterations, residual=rep.residual,
                    flag="" if rep.converged else "max_iter")

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        rows = list(pool.map(one, specs))
    _emit(rows, io.SWEEP_FIELDS, cfg.get("out"))
    return EXIT_OK if all(not r["flag"] for r in rows) else EXIT_NOCONV


def cmd_mesh_info(args) -> int:
    cfg = _settings(args)
    spec = _problem(cfg)
    level = cfg.get("level", 3)
    mesh = build_disk_mesh(spec.radius, level)
    info = {
        "problem": spec.name,
        "radius": spec.radius,
        "level": level,
        "h_label": h_label(spec.radius, level),
        "nodes": mesh.n_nodes,
        "triangles": mesh.n_triangles,
        "interior_dofs": int(mesh.interior_nodes.size),
        "h": mesh_size(mesh),
        "min_angle_deg": min_angle(mesh),
    }
    print(json.dumps(info))
    if cfg.get("out"):
        io.write_mesh(mesh, cfg["out"])
    return EXIT_OK


def _emit(rows, fields, out):
    if out:
        io.write_rows(rows, out, fields)
    else:
        io.write_rows(rows, "/dev/stdout", fields)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradstate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config")
        p.add_argument("--problem")
        p.add_argument("--alpha", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--admm-sigma", dest="admm_sigma", type=float)
        p.add_argument("--out")

    p = sub.add_parser("solve", help="single solve, JSON report")
    common(p)
    p.add_argument("--level", type=int)
    p.add_argument("--algo")
    p.add_argument("--export-vtk", dest="export_vtk")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="levels x algorithms table as CSV")
    common(p)
    p.add_argument("--levels", help="e.g. 2..5 or 2,3,4")
    p.add_argument("--algo", dest="algos", help="comma-separated list")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("alpha-sweep", help="alpha robustness sweep as CSV")
    common(p)
    p.add_argument("--level", type=int)
    p.add_argument("--alphas", help="comma-separated list")
    p.add_argument("--algo")
    p.set_defaults(func=cmd_alpha_sweep)

    p = sub.add_parser("mesh-info", help="mesh statistics; --out writes the mesh")
    p.add_argument("--config")
    p.add_argument("--problem")
    p.add_argument("--level", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mesh_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (UsageError, MeshError, KeyError, ValueError, OSError) as exc:
        print(f"gradstate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
