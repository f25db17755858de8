"""Projected gradient baselines (PGD and FISTA) over the product of scaled simplices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import DEFAULT_SUPPORT_RTOL, Problem, TransportPlan, project_columns
from .errors import ConfigError
from .solvers import Callback, SolveResult, _Recorder, _start


@dataclass(frozen=True)
class BaselineConfig:
    algorithm: str = "fista"
    max_iterations: int = 1000
    gap_tolerance: float = 0.0
    gap_check_period: Optional[int] = None  # iterations; None means n
    step_length: Optional[float] = None  # None means 1/L with L = n/lam
    support_rtol: float = DEFAULT_SUPPORT_RTOL

    def __post_init__(self):
        if self.algorithm not in ("pgd", "fista"):
            raise ConfigError(f"unknown baseline {self.algorithm!r}; choose 'pgd' or 'fista'")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if self.step_length is not None and not self.step_length > 0:
            raise ConfigError(f"step_length must be positive, got {self.step_length}")
        if not self.gap_tolerance >= 0:
            raise ConfigError(f"gap_tolerance must be nonnegative, got {self.gap_tolerance}")
        if self.gap_check_period is not None and self.gap_check_period < 1:
            raise ConfigError(f"gap_check_period must be positive, got {self.gap_check_period}")

    @property
    def label(self) -> str:
        return self.algorithm


def lipschitz_constant(p: Problem) -> float:
    # Hessian of the penalty is (1/lam) * (ones(n, n) kron I_m), spectral norm n/lam
    return p.n / p.lam


def _grad(p: Problem, T: np.ndarray) -> np.ndarray:
    resid = T.sum(axis=1) - p.a
    return p.cost + (resid / p.lam)[:, None]


def _run(p: Problem, cfg: BaselineConfig, t0, callback, momentum: bool) -> SolveResult:
    T = _start(p, cfg, t0)
    eta = cfg.step_length or 1.0 / lipschitz_constant(p)
    period = cfg.gap_check_period or p.n
    rec = _Recorder(p, 1, cfg.support_rtol, callback)
    gap = rec.record(0, T)
    if gap <= cfg.gap_tolerance:
        return SolveResult(TransportPlan(T, cfg.support_rtol), rec.trace, "gap_tolerance_met", gap)

    termination = "max_epochs"
    Y = T
    t_k = 1.0
    for k in range(1, cfg.max_iterations + 1):
        T_new = project_columns(Y - eta * _grad(p, Y), p.b)
        if momentum:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
            Y = T_new + ((t_k - 1.0) / t_next) * (T_new - T)
            t_k = t_next
        else:
            Y = T_new
        T = T_new
        if k % period == 0 or k == cfg.max_iterations:
            gap = rec.record(k, T)
            if gap <= cfg.gap_tolerance:
                termination = "gap_tolerance_met"
                break
        else:
            rec.record(k, T, with_gap=False)
    return SolveResult(TransportPlan(T, cfg.support_rtol), rec.trace, termination, float(gap))


def solve_pgd(p: Problem, cfg: BaselineConfig, t0=None, callback: Optional[Callback] = None,
              checkpoints: Iterable[int] = ()) -> SolveResult:
    """Projected gradient descent with a fixed step (default 1/L).

    One iteration counts as one epoch; the trace gets an objective row every
    iteration and a duality gap every ``gap_check_period`` iterations.
    """
    if cfg.algorithm != "pgd":
        raise ConfigError(f"solve_pgd called with algorithm {cfg.algorithm!r}")
    return _run(p, cfg, t0, callback, momentum=False)


def solve_fista(p: Problem, cfg: BaselineConfig, t0=None, callback: Optional[Callback] = None,
                checkpoints: Iterable[int] = ()) -> SolveResult:
    """FISTA (Beck-Teboulle momentum, no restarts) with column-wise simplex projection."""
    if cfg.algorithm != "fista":
        raise ConfigError(f"solve_fista called with algorithm {cfg.algorithm!r}")
    return _run(p, cfg, t0, callback, momentum=True)


def solve_baseline(p: Problem, cfg: BaselineConfig, t0=None, callback: Optional[Callback] = None,
                   checkpoints: Iterable[int] = ()) -> SolveResult:
    fn = solve_pgd if cfg.algorithm == "pgd" else solve_fista
    return fn(p, cfg, t0, callback=callback, checkpoints=checkpoints)


def reference_optimum(p: Problem, gap_tolerance: float = 1e-10, max_iterations: int = 200_000
                      ) -> SolveResult:
    """High-accuracy FISTA run used as the f* oracle."""
    cfg = BaselineConfig("fista", max_iterations=max_iterations, gap_tolerance=gap_tolerance,
                         gap_check_period=1)
    return solve_fista(p, cfg)
