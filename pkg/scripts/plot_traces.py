"""Plot objective, duality gap and sparsity from trace CSVs (needs matplotlib).

    python scripts/plot_traces.py runs/bench/seed0 --out runs/bench/seed0/traces.png
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from srot.solvers import read_trace_csv  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory", help="folder with trace_<label>.csv files")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    folder = Path(args.directory)
    paths = sorted(folder.glob("trace_*.csv"))
    if not paths:
        raise SystemExit(f"no trace_*.csv files in {folder}")
    fig, axes = plt.subplots(1, 4, figsize=(18, 4))
    for path in paths:
        label = path.stem[len("trace_"):]
        trace = read_trace_csv(path)
        ep = [r.epoch for r in trace]
        axes[0].plot(ep, [r.objective for r in trace], label=label)
        axes[1].plot([r.wall_time_seconds for r in trace], [r.objective for r in trace])
        gaps = [(r.epoch, r.duality_gap) for r in trace if r.duality_gap]
        if gaps:
            axes[2].loglog(*zip(*gaps))
        axes[3].plot(ep, [r.sparsity for r in trace])
    for ax, (xl, yl) in zip(axes, [("epoch", "objective"), ("seconds", "objective"),
                                   ("epoch", "duality gap"), ("epoch", "sparsity")]):
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
    axes[0].set_xscale("log")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    out = Path(args.out) if args.out else folder / "traces.png"
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
