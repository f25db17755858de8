"""Convergence benchmark harness: same instance, same start, many algorithms."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .core import Problem, TransportPlan
from .registry import config_from_label, run
from .solvers import SolveResult, default_initial_plan


def synthetic_problem(m: int, n: int, lam: float, seed: int = 0) -> Problem:
    """Cost i.i.d. uniform on [0, 1]; a and b uniform then normalized to sum 1."""
    rng = np.random.default_rng(seed)
    C = rng.uniform(size=(m, n))
    a = rng.uniform(size=m)
    b = rng.uniform(size=n)
    return Problem(C, a / a.sum(), b / b.sum(), lam)


def bench_threads() -> int:
    try:
        return max(1, int(os.environ.get("SROT_THREADS", "1")))
    except ValueError:
        return 1


def run_bench(p: Problem, labels: Sequence[str], *, epochs: int, gap_tol: float = 0.0,
              seed: int = 0, gap_check_period: Optional[int] = None,
              t0: Optional[TransportPlan] = None, threads: Optional[int] = None
              ) -> dict[str, SolveResult]:
    """Run every labelled algorithm from the same initial plan.

    Each worker owns its solver state; results are keyed by label so the
    output does not depend on scheduling.
    """
    configs = {lab: config_from_label(lab, epochs=epochs, gap_tol=gap_tol, seed=seed,
                                      gap_check_period=gap_check_period)
               for lab in labels}
    start = t0 if t0 is not None else default_initial_plan(p)
    threads = threads or bench_threads()

    def one(label):
        return label, run(p, configs[label], start.copy())

    if threads == 1:
        pairs = [one(lab) for lab in labels]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(one, labels))
    return dict(pairs)


def epochs_to_gap(result: SolveResult, tol: float) -> float:
    """First recorded epoch with duality gap <= tol (inf if never reached)."""
    for rec in result.trace:
        if rec.duality_gap is not None and rec.duality_gap <= tol:
            return rec.epoch
    return math.inf


def iterations_to_gap(result: SolveResult, tol: float) -> float:
    for rec in result.trace:
        if rec.duality_gap is not None and rec.duality_gap <= tol:
            return rec.iteration
    return math.inf


def write_merged_csv(path, results: dict[str, SolveResult]) -> None:
    """Wide table keyed by epoch: ``<label>_objective`` and ``<label>_gap`` per algorithm.

    Wall times are left out so repeated runs produce identical files.
    """
    labels = list(results)
    table: dict[float, dict[str, str]] = {}
    for lab in labels:
        for rec in results[lab].trace:
            row = table.setdefault(rec.epoch, {})
            row[f"{lab}_objective"] = repr(float(rec.objective))
            if rec.duality_gap is not None:
                row[f"{lab}_gap"] = repr(float(rec.duality_gap))
    header = ["epoch"] + [f"{lab}_{col}" for lab in labels for col in ("objective", "gap")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for epoch in sorted(table):
            row = table[epoch]
            w.writerow([repr(float(epoch))] + [row.get(h, "") for h in header[1:]])
