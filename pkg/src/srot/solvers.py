"""Frank-Wolfe family solvers: FW, block-coordinate FW and its away/pairwise variants."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import _kernels
from .core import DEFAULT_SUPPORT_RTOL, Problem, RowSumCache, TransportPlan
from .errors import ConfigError, InstanceError

ALGORITHMS = ("fw", "bcfw", "bcafw", "bcpfw")
SAMPLINGS = ("uniform", "permutation")
STEPSIZES = ("decay", "exact_line_search")
TERMINATIONS = ("gap_tolerance_met", "max_epochs", "stalled")

TRACE_HEADER = ["iteration", "epoch", "time_s", "objective", "duality_gap", "sparsity"]

Callback = Callable[[int, TransportPlan], None]


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "bcfw"
    sampling: str = "uniform"
    stepsize: str = "exact_line_search"
    max_epochs: int = 100
    gap_tolerance: float = 0.0
    gap_check_period: Optional[int] = None  # iterations; None means n
    rng_seed: int = 0
    away_oracle: str = "argmax"
    support_rtol: float = DEFAULT_SUPPORT_RTOL

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.sampling not in SAMPLINGS:
            raise ConfigError(f"unknown sampling {self.sampling!r}; choose from {SAMPLINGS}")
        if self.stepsize not in STEPSIZES:
            raise ConfigError(f"unknown stepsize {self.stepsize!r}; choose from {STEPSIZES}")
        if self.algorithm == "fw" and self.sampling != "uniform":
            raise ConfigError("permutation sampling only applies to block-coordinate methods")
        if self.algorithm in ("bcafw", "bcpfw") and self.stepsize != "exact_line_search":
            raise ConfigError(f"{self.algorithm} requires the exact line search stepsize")
        if self.away_oracle not in ("argmax", "argmin"):
            raise ConfigError(f"away_oracle must be 'argmax' or 'argmin', got {self.away_oracle!r}")
        if int(self.max_epochs) != self.max_epochs or self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be a positive integer, got {self.max_epochs}")
        if not self.gap_tolerance >= 0:
            raise ConfigError(f"gap_tolerance must be nonnegative, got {self.gap_tolerance}")
        if self.gap_check_period is not None and self.gap_check_period < 1:
            raise ConfigError(f"gap_check_period must be positive, got {self.gap_check_period}")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError(f"rng_seed must be a 64-bit unsigned integer, got {self.rng_seed}")
        if not self.support_rtol >= 0:
            raise ConfigError("support_rtol must be nonnegative")

    @property
    def label(self) -> str:
        step = "dec" if self.stepsize == "decay" else "els"
        if self.algorithm == "fw":
            return f"fw-{step}"
        if self.algorithm == "bcfw":
            return f"bcfw-{self.sampling[0]}-{step}"
        return self.algorithm


@dataclass
class TraceRecord:
    iteration: int
    epoch: float
    wall_time_seconds: float
    objective: float
    duality_gap: Optional[float]
    sparsity: float


@dataclass
class SolveResult:
    plan: TransportPlan
    trace: list[TraceRecord]
    termination: str
    final_gap: float

    @property
    def objective(self) -> float:
        return self.trace[-1].objective


class _Recorder:
    """Appends trace rows; objective, gap and sparsity come from one compiled pass."""

    def __init__(self, p: Problem, iters_per_epoch: int, support_rtol: float,
                 callback: Optional[Callback]):
        self.p = p
        self.cost = np.asfortranarray(p.cost)
        self.iters_per_epoch = iters_per_epoch
        self.support_rtol = support_rtol
        self.callback = callback
        self.trace: list[TraceRecord] = []
        self.scratch = np.empty(p.m)
        self.start = time.perf_counter()

    def record(self, k: int, T: np.ndarray, with_gap: bool = True) -> float:
        obj, gap, sp = _kernels.evaluate(self.cost, self.p.a, self.p.b, self.p.lam, T,
                                         self.support_rtol, self.scratch)
        self.trace.append(TraceRecord(
            iteration=k,
            epoch=k / self.iters_per_epoch,
            wall_time_seconds=time.perf_counter() - self.start,
            objective=obj,
            duality_gap=gap if with_gap else None,
            sparsity=sp,
        ))
        if self.callback is not None:
            self.callback(k, TransportPlan(T, self.support_rtol))
        return gap


def default_initial_plan(p: Problem, support_rtol: float = DEFAULT_SUPPORT_RTOL) -> TransportPlan:
    """All of column i's mass on row 0, i.e. the vertex b_i * e_0."""
    T = np.zeros(p.shape, order="F")
    T[0, :] = p.b
    return TransportPlan(T, support_rtol)


def decay_stepsize(k: int, n: int = 1, blockwise: bool = False) -> float:
    if blockwise:
        return 2.0 * n / (k + 2.0 * n)
    return 2.0 / (k + 2.0)


def exact_line_search(p: Problem, row_sums: RowSumCache, i: int, d, gamma_max: float = 1.0
                      ) -> tuple[float, bool]:
    """Exact minimizer of f(T + gamma * d e_i^T) over gamma in [0, gamma_max].

    Returns ``(gamma, ok)``; ``ok`` is False for a zero direction, which
    yields gamma = 0.
    """
    d = np.ascontiguousarray(d, dtype=np.float64)
    if d.shape != (p.m,):
        raise InstanceError(f"direction has shape {d.shape}, expected ({p.m},)")
    resid = row_sums.row_sums - p.a
    gamma, ok = _kernels.line_search(p.lam, np.ascontiguousarray(p.cost[:, i]), resid, d,
                                     float(gamma_max))
    return float(gamma), bool(ok)


def theorem1_bound(n: int, k: int, lam: float, h0: float) -> float:
    """Worst-case expected suboptimality of BCFW with the 2n/(k+2n) decay stepsize.

    The curvature constant is replaced by its upper bound 4/lam.
    """
    return 2.0 * n / (k + 2.0 * n) * (4.0 / lam + h0)


def theorem1_iterations(n: int, lam: float, eps: float, h0: float) -> int:
    """Smallest k for which :func:`theorem1_bound` drops to ``eps``.

    Splits as 8n/(lam eps) + 2n h0/eps - 2n: the second term is the extra
    cost paid when the start is far from optimal.
    """
    k = max(0, int(np.ceil(2.0 * n * (4.0 / lam + h0) / eps - 2.0 * n)))
    # the closed form can be off by one through rounding at an exact crossing
    while k > 0 and theorem1_bound(n, k - 1, lam, h0) <= eps:
        k -= 1
    while theorem1_bound(n, k, lam, h0) > eps:
        k += 1
    return k


def _start(p: Problem, cfg: SolverConfig, t0) -> np.ndarray:
    if t0 is None:
        t0 = default_initial_plan(p)
    T = np.array(t0.entries if isinstance(t0, TransportPlan) else t0,
                 dtype=np.float64, order="F", copy=True)
    if T.shape != p.shape:
        raise InstanceError(f"initial plan has shape {T.shape}, problem is {p.shape}")
    TransportPlan(T).check_feasible(p.b)
    return T


def solve_fw(p: Problem, cfg: SolverConfig, t0=None, callback: Optional[Callback] = None,
             checkpoints: Iterable[int] = ()) -> SolveResult:
    """Full Frank-Wolfe: every column moves toward its LMO vertex with one shared stepsize.

    The duality gap comes for free with S, so the tolerance is tested every
    iteration. A trace row is written every ``cfg.gap_check_period``
    iterations (default 1 for FW, i.e. every iteration) and at each of
    ``checkpoints``.
    """
    if cfg.algorithm != "fw":
        raise ConfigError(f"solve_fw called with algorithm {cfg.algorithm!r}")
    T = _start(p, cfg, t0)
    C = np.asfortranarray(p.cost)
    a, b, lam = p.a, p.b, p.lam
    period = cfg.gap_check_period or 1
    total = cfg.max_epochs
    extra = sorted({int(c) for c in checkpoints if 0 < c < total})
    rowsum = np.empty(p.m)
    srow = np.empty(p.m)
    js = np.empty(p.n, dtype=np.int64)
    stuck = np.zeros(1, dtype=np.int64)
    decay = cfg.stepsize == "decay"

    rec = _Recorder(p, 1, cfg.support_rtol, callback)
    gap = rec.record(0, T)
    termination = "gap_tolerance_met" if gap <= cfg.gap_tolerance else "max_epochs"
    k = 0
    ei = 0
    while termination == "max_epochs" and k < total:
        stop = min(total, (k // period + 1) * period)
        while ei < len(extra) and extra[ei] <= k:
            ei += 1
        if ei < len(extra):
            stop = min(stop, extra[ei])
        done, status, _ = _kernels.fw_steps(C, a, b, lam, T, stop - k, k, decay,
                                            cfg.gap_tolerance, stuck, rowsum, srow, js)
        k += done
        gap = rec.record(k, T)
        if status == 1 or gap <= cfg.gap_tolerance:
            termination = "gap_tolerance_met"
        elif status == 2:
            termination = "stalled"
    return SolveResult(TransportPlan(T, cfg.support_rtol), rec.trace, termination, float(gap))


class _BlockSampler:
    def __init__(self, rng: np.random.Generator, active: np.ndarray, mode: str):
        self.rng = rng
        self.active = active
        self.mode = mode
        self.buffer = np.empty(0, dtype=np.int64)

    def draw(self, count: int) -> np.ndarray:
        if self.mode == "uniform":
            return self.active[self.rng.integers(0, self.active.size, size=count)]
        parts = [self.buffer]
        have = self.buffer.size
        while have < count:
            perm = self.rng.permutation(self.active)
            parts.append(perm)
            have += perm.size
        pool = np.concatenate(parts)
        self.buffer = pool[count:]
        return np.ascontiguousarray(pool[:count], dtype=np.int64)


_VARIANTS = {
    "bcfw": _kernels.VARIANT_BCFW,
    "bcafw": _kernels.VARIANT_BCAFW,
    "bcpfw": _kernels.VARIANT_BCPFW,
}


def _solve_blocks(p: Problem, cfg: SolverConfig, t0, callback, checkpoints) -> SolveResult:
    T = _start(p, cfg, t0)
    n = p.n
    C = np.asfortranarray(p.cost)
    a, b, lam = p.a, p.b, p.lam
    variant = _VARIANTS[cfg.algorithm]
    decay = cfg.stepsize == "decay"
    away_max = cfg.away_oracle == "argmax"
    period = cfg.gap_check_period or n
    total = cfg.max_epochs * n
    extra = sorted({int(c) for c in checkpoints if 0 < c < total})

    active = np.flatnonzero(b > 0).astype(np.int64)
    T[:, b == 0] = 0.0
    sampler = _BlockSampler(np.random.default_rng(cfg.rng_seed), active, cfg.sampling)
    rowsum = T.sum(axis=1)
    stuck = np.zeros(4, dtype=np.int64)
    g = np.empty(p.m)
    d = np.empty(p.m)
    resid = np.empty(p.m)

    rec = _Recorder(p, n, cfg.support_rtol, callback)
    gap = rec.record(0, T)
    termination = "max_epochs"
    if gap <= cfg.gap_tolerance:
        termination = "gap_tolerance_met"
    k = 0
    ei = 0
    while termination == "max_epochs" and k < total:
        stop = min(total, (k // period + 1) * period)
        while ei < len(extra) and extra[ei] <= k:
            ei += 1
        if ei < len(extra):
            stop = min(stop, extra[ei])
        blocks = sampler.draw(stop - k)
        done = _kernels.block_steps(C, a, b, lam, T, rowsum, blocks, k, variant, decay,
                                    away_max, cfg.support_rtol, stuck, g, d, resid)
        k += done
        if stuck[0] >= 3:
            gap = rec.record(k, T)
            termination = "gap_tolerance_met" if gap <= cfg.gap_tolerance else "stalled"
            break
        if k % period == 0 or k == total or k in extra:
            gap = rec.record(k, T)
            if gap <= cfg.gap_tolerance:
                termination = "gap_tolerance_met"
    if rec.trace[-1].iteration != k:
        gap = rec.record(k, T)
    return SolveResult(TransportPlan(T, cfg.support_rtol), rec.trace, termination, float(gap))


def solve_bcfw(p: Problem, cfg: SolverConfig, t0=None, callback: Optional[Callback] = None,
               checkpoints: Iterable[int] = ()) -> SolveResult:
    """Block-coordinate FW: one randomly chosen column moves toward its LMO vertex per iteration.

    The full duality gap is evaluated every ``cfg.gap_check_period``
    iterations (default n), which is also when a trace row is written.
    """
    if cfg.algorithm != "bcfw":
        raise ConfigError(f"solve_bcfw called with algorithm {cfg.algorithm!r}")
    return _solve_blocks(p, cfg, t0, callback, checkpoints)


def solve_bcafw(p: Problem, cfg: SolverConfig, t0=None, callback: Optional[Callback] = None,
                checkpoints: Iterable[int] = ()) -> SolveResult:
    """Block-coordinate FW with away steps.

    Per iteration the better of the FW direction and the away direction
    (measured by its inner product with the block gradient) is taken with an
    exact line search; a maximal away step removes the atom from the support.
    """
    if cfg.algorithm != "bcafw":
        raise ConfigError(f"solve_bcafw called with algorithm {cfg.algorithm!r}")
    return _solve_blocks(p, cfg, t0, callback, checkpoints)


def solve_bcpfw(p: Problem, cfg: SolverConfig, t0=None, callback: Optional[Callback] = None,
                checkpoints: Iterable[int] = ()) -> SolveResult:
    """Block-coordinate pairwise FW: mass moves from the away atom straight to the LMO atom."""
    if cfg.algorithm != "bcpfw":
        raise ConfigError(f"solve_bcpfw called with algorithm {cfg.algorithm!r}")
    return _solve_blocks(p, cfg, t0, callback, checkpoints)


_SOLVERS = {"fw": solve_fw, "bcfw": solve_bcfw, "bcafw": solve_bcafw, "bcpfw": solve_bcpfw}


def solve(p: Problem, cfg: SolverConfig, t0=None, callback: Optional[Callback] = None,
          checkpoints: Iterable[int] = ()) -> SolveResult:
    return _SOLVERS[cfg.algorithm](p, cfg, t0, callback=callback, checkpoints=checkpoints)


def write_trace_csv(path, trace: Iterable[TraceRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for r in trace:
            w.writerow([
                r.iteration,
                repr(float(r.epoch)),
                f"{r.wall_time_seconds:.6f}",
                repr(float(r.objective)),
                "" if r.duality_gap is None else repr(float(r.duality_gap)),
                repr(float(r.sparsity)),
            ])


def read_trace_csv(path) -> list[TraceRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            out.append(TraceRecord(
                iteration=int(row["iteration"]),
                epoch=float(row["epoch"]),
                wall_time_seconds=float(row["time_s"]),
                objective=float(row["objective"]),
                duality_gap=float(row["duality_gap"]) if row["duality_gap"] else None,
                sparsity=float(row["sparsity"]),
            ))
    return out
