"""Command-line entry point: ``srot solve``, ``srot bench`` and ``srot color-transfer``.

Exit status: 0 on success, 2 on unreadable or inconsistent input, 3 on an
invalid configuration (including unknown or malformed flags).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bench import run_bench, synthetic_problem, write_merged_csv
from .colortransfer import (
    TransferConfig,
    color_transfer,
    heatmap,
    load_image,
    mapped_colors,
    save_image,
)
from .core import Problem
from .errors import ConfigError, InputError, InstanceError
from .matrix_io import read_matrix, read_vector, write_matrix
from .registry import LABELS, make_config, run
from .solvers import write_trace_csv

logger = logging.getLogger("srot")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class Manifest:
    """Run manifest, written exactly once as ``manifest.json`` in the output directory."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.data = {
            "command": command,
            "version": __version__,
            "config": {k: v for k, v in vars(args).items() if k != "func"},
            "inputs": {},
            "outputs": [],
            "started": _now(),
        }
        self.out = Path(args.out) if getattr(args, "out", None) else None
        self.written = False

    def add_input(self, path) -> None:
        if path is not None and os.path.isfile(path):
            self.data["inputs"][str(path)] = _sha256(path)

    def add_output(self, path) -> None:
        self.data["outputs"].append(str(path))

    def finish(self, status: str, error: str | None = None) -> None:
        if self.written or self.out is None:
            return
        self.data["finished"] = _now()
        self.data["status"] = status
        if error:
            self.data["error"] = error
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            with open(self.out / "manifest.json", "w") as fh:
                json.dump(self.data, fh, indent=2, sort_keys=True, default=str)
            self.written = True
        except OSError as exc:
            logger.error("could not write manifest: %s", exc)


def _load_problem(args, manifest: Manifest) -> Problem:
    for path in (args.cost, args.a, args.b):
        manifest.add_input(path)
    C = read_matrix(args.cost)
    a = read_vector(args.a)
    b = read_vector(args.b)
    if a.shape[0] != C.shape[0]:
        raise InstanceError(f"dimension mismatch: a has length {a.shape[0]} "
                            f"but cost has m={C.shape[0]} rows")
    if b.shape[0] != C.shape[1]:
        raise InstanceError(f"dimension mismatch: b has length {b.shape[0]} "
                            f"but cost has n={C.shape[1]} columns")
    return Problem(C, a, b, args.lam)


def _solver_config(args):
    return make_config(args.algo, step=args.step, sampling=args.sampling, epochs=args.epochs,
                       gap_tol=args.gap_tol, seed=args.seed, gap_check_period=args.gap_period)


def cmd_solve(args, manifest: Manifest) -> int:
    cfg = _solver_config(args)
    p = _load_problem(args, manifest)
    result = run(p, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    plan_path = out / f"plan.{args.plan_format}"
    write_matrix(plan_path, result.plan.entries)
    trace_path = out / "trace.csv"
    write_trace_csv(trace_path, result.trace)
    manifest.add_output(plan_path)
    manifest.add_output(trace_path)
    manifest.data["result"] = {"termination": result.termination,
                               "objective": result.objective,
                               "final_gap": result.final_gap,
                               "iterations": result.trace[-1].iteration}
    logger.info("%s: %s after %d iterations, objective %.12g, gap %.3g", cfg.label,
                result.termination, result.trace[-1].iteration, result.objective,
                result.final_gap)
    return EXIT_OK


def cmd_bench(args, manifest: Manifest) -> int:
    labels = [s.strip() for s in args.algos.split(",") if s.strip()]
    if not labels:
        raise ConfigError("--algos is empty")
    if args.cost or args.a or args.b:
        if not (args.cost and args.a and args.b):
            raise ConfigError("--cost, --a and --b must be given together")
        p = _load_problem(args, manifest)
    else:
        if args.m is None or args.n is None:
            raise ConfigError("give either --cost/--a/--b or --m/--n for a synthetic instance")
        if args.m < 1 or args.n < 1:
            raise ConfigError("--m and --n must be positive")
        p = synthetic_problem(args.m, args.n, args.lam, args.seed)
    results = run_bench(p, labels, epochs=args.epochs, gap_tol=args.gap_tol, seed=args.seed,
                        gap_check_period=args.gap_period)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for label, res in results.items():
        path = out / f"trace_{label}.csv"
        write_trace_csv(path, res.trace)
        manifest.add_output(path)
        summary[label] = {"termination": res.termination, "objective": res.objective,
                          "final_gap": res.final_gap, "iterations": res.trace[-1].iteration}
        logger.info("%s: %s, objective %.12g, gap %.3g", label, res.termination,
                    res.objective, res.final_gap)
    merged = out / "merged.csv"
    write_merged_csv(merged, results)
    manifest.add_output(merged)
    manifest.data["result"] = summary
    return EXIT_OK


def _parse_snapshots(text: str) -> list[int]:
    if not text:
        return []
    try:
        snaps = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"--snapshots must be comma-separated integers: {text!r}") from exc
    if any(s < 0 for s in snaps):
        raise ConfigError("--snapshots must be nonnegative")
    return snaps


def cmd_color_transfer(args, manifest: Manifest) -> int:
    solver = _solver_config(args)
    snaps = _parse_snapshots(args.snapshots)
    cfg = TransferConfig(k_source=args.k_source or args.k, k_reference=args.k_reference or args.k,
                         lam=args.lam, solver=solver, kmeans_seed=args.seed,
                         kmeans_max_iters=args.kmeans_iters, snapshot_iterations=snaps)
    manifest.add_input(args.source)
    manifest.add_input(args.reference)
    src_img = load_image(args.source)
    ref_img = load_image(args.reference)
    res = color_transfer(src_img, ref_img, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def emit(name, image):
        path = out / name
        save_image(path, image)
        manifest.add_output(path)

    emit("quantized_source.png", res.source_model.render())
    emit("quantized_reference.png", res.reference_model.render())
    for k in sorted(res.snapshots):
        plan = res.snapshots[k]
        emit(f"recolored_{k}.png",
             res.source_model.render(mapped_colors(res.source_model, res.reference_model, plan)))
        emit(f"heatmap_{k}.png", heatmap(plan))
    emit("recolored.png", res.recolored)
    emit("heatmap.png", heatmap(res.solve.plan))
    plan_path = out / f"plan.{args.plan_format}"
    write_matrix(plan_path, res.solve.plan.entries)
    manifest.add_output(plan_path)
    trace_path = out / "trace.csv"
    write_trace_csv(trace_path, res.solve.trace)
    manifest.add_output(trace_path)
    manifest.data["result"] = {"termination": res.solve.termination,
                               "objective": res.solve.objective,
                               "final_gap": res.solve.final_gap,
                               "snapshots": sorted(res.snapshots)}
    return EXIT_OK


def _add_solver_flags(sp, *, default_algo="bcfw", default_step="els"):
    sp.add_argument("--lambda", dest="lam", type=float, required=True,
                    help="relaxation parameter (> 0)")
    sp.add_argument("--algo", default=default_algo,
                    choices=["fw", "bcfw", "bcafw", "bcpfw", "pgd", "fista"])
    sp.add_argument("--step", default=default_step, choices=["dec", "els"])
    sp.add_argument("--sampling", default=None, choices=["u", "p"])
    sp.add_argument("--epochs", type=int, default=100)
    sp.add_argument("--gap-tol", type=float, default=0.0)
    sp.add_argument("--gap-period", type=int, default=None,
                    help="iterations between duality-gap checks (default n; 1 for FW)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--plan-format", default="csv", choices=["csv", "bin"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srot", description="Semi-relaxed optimal transport solvers.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="solve one instance from matrix files")
    sp.add_argument("--cost", required=True)
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("bench", help="compare algorithms from a shared initial plan")
    sp.add_argument("--algos", default="fw-dec,fw-els,bcfw-u-dec,bcfw-u-els",
                    help=f"comma-separated labels from: {', '.join(LABELS)}")
    sp.add_argument("--cost")
    sp.add_argument("--a")
    sp.add_argument("--b")
    sp.add_argument("--m", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--epochs", type=int, default=100)
    sp.add_argument("--gap-tol", type=float, default=0.0)
    sp.add_argument("--gap-period", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("color-transfer", help="recolor a source image toward a reference")
    sp.add_argument("--source", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--k", type=int, default=32, help="clusters per image")
    sp.add_argument("--k-source", type=int, default=None)
    sp.add_argument("--k-reference", type=int, default=None)
    sp.add_argument("--kmeans-iters", type=int, default=100)
    sp.add_argument("--snapshots", default="", help="comma-separated iteration counts")
    _add_solver_flags(sp, default_step="dec")
    sp.set_defaults(func=cmd_color_transfer)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    manifest = Manifest(args.command, args)
    t = time.perf_counter()
    try:
        status = args.func(args, manifest)
    except ConfigError as exc:
        print(f"srot: configuration error: {exc}", file=sys.stderr)
        manifest.finish("failed", str(exc))
        return EXIT_CONFIG
    except (InputError, InstanceError) as exc:
        print(f"srot: input error: {exc}", file=sys.stderr)
        manifest.finish("failed", str(exc))
        return EXIT_INPUT
    except BaseException as exc:
        manifest.finish("failed", repr(exc))
        raise
    manifest.data["elapsed_s"] = time.perf_counter() - t
    manifest.finish("ok")
    return status


if __name__ == "__main__":
    sys.exit(main())
