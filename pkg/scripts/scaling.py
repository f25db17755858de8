"""Median BCFW per-iteration wall time as m doubles (n fixed).

    python scripts/scaling.py --ms 512,1024,2048,4096 --n 64
"""

import argparse
import time

import numpy as np

from srot.bench import synthetic_problem
from srot.solvers import SolverConfig, solve


def per_iteration(m, n, epochs, reps):
    p = synthetic_problem(m, n, 1e-3, 0)
    cfg = SolverConfig("bcfw", max_epochs=epochs)
    times = []
    for _ in range(reps):
        t = time.perf_counter()
        solve(p, cfg)
        times.append((time.perf_counter() - t) / (epochs * n))
    return float(np.median(times))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ms", default="512,1024,2048,4096")
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--reps", type=int, default=7)
    args = ap.parse_args()

    solve(synthetic_problem(4, 4, 1.0, 0), SolverConfig("bcfw", max_epochs=1))  # compile
    prev = None
    print(f"{'m':>6}{'us/iter':>10}{'ratio':>8}")
    for m in (int(s) for s in args.ms.split(",")):
        t = per_iteration(m, args.n, args.epochs, args.reps)
        ratio = f"{t / prev:8.2f}" if prev else " " * 8
        print(f"{m:>6}{t * 1e6:>10.2f}{ratio}")
        prev = t


if __name__ == "__main__":
    main()
