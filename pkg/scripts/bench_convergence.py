"""Convergence comparison of the solver family on synthetic instances.

Writes one trace CSV per algorithm plus ``merged.csv`` for each seed and
prints epochs and iterations to the target gap, e.g.::

    python scripts/bench_convergence.py --m 64 --n 64 --lam 1e-3 --seeds 3 --out runs/block
    python scripts/bench_convergence.py --algos bcfw-u-els,bcafw,bcpfw --out runs/away
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from srot.bench import epochs_to_gap, iterations_to_gap, run_bench, synthetic_problem, write_merged_csv
from srot.registry import LABELS
from srot.solvers import write_trace_csv

log = logging.getLogger("bench_convergence")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=64)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--lam", type=float, default=1e-3)
    ap.add_argument("--epochs", type=int, default=20000)
    ap.add_argument("--gap-tol", type=float, default=1e-3)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--algos", default="fw-dec,fw-els,bcfw-u-dec,bcfw-u-els,bcafw,bcpfw,fista",
                    help=f"comma-separated subset of {', '.join(LABELS)}")
    ap.add_argument("--out", default="runs/bench")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    labels = args.algos.split(",")
    table = {lab: {"epochs": [], "iterations": [], "time": []} for lab in labels}
    for seed in range(args.seeds):
        p = synthetic_problem(args.m, args.n, args.lam, seed)
        results = run_bench(p, labels, epochs=args.epochs, gap_tol=args.gap_tol, seed=seed)
        out = Path(args.out) / f"seed{seed}"
        out.mkdir(parents=True, exist_ok=True)
        for lab, res in results.items():
            write_trace_csv(out / f"trace_{lab}.csv", res.trace)
            table[lab]["epochs"].append(epochs_to_gap(res, args.gap_tol))
            table[lab]["iterations"].append(iterations_to_gap(res, args.gap_tol))
            table[lab]["time"].append(res.trace[-1].wall_time_seconds)
        write_merged_csv(out / "merged.csv", results)
        log.info("seed %d done", seed)

    print(f"\nm={args.m} n={args.n} lambda={args.lam:g}, medians over {args.seeds} seeds, "
          f"target gap {args.gap_tol:g}")
    print(f"{'algorithm':<12}{'epochs':>10}{'iterations':>14}{'seconds':>10}")
    for lab, row in table.items():
        print(f"{lab:<12}{np.median(row['epochs']):>10.0f}{np.median(row['iterations']):>14.0f}"
              f"{np.median(row['time']):>10.2f}")


if __name__ == "__main__":
    main()
