"""Algorithm labels used by the CLI and benchmarks, e.g. ``bcfw-u-els`` or ``fista``."""

from __future__ import annotations

from typing import Optional, Union

from .baselines import BaselineConfig, solve_baseline
from .errors import ConfigError
from .solvers import SolverConfig, solve

AnyConfig = Union[SolverConfig, BaselineConfig]

LABELS = ("fw-dec", "fw-els", "bcfw-u-dec", "bcfw-u-els", "bcfw-p-dec", "bcfw-p-els",
          "bcafw", "bcpfw", "pgd", "fista")

_STEP = {"dec": "decay", "els": "exact_line_search"}
_SAMPLING = {"u": "uniform", "p": "permutation"}


def make_config(algo: str, *, step: str = "els", sampling: Optional[str] = None,
                epochs: int = 100, gap_tol: float = 0.0, seed: int = 0,
                gap_check_period: Optional[int] = None) -> AnyConfig:
    """Config from separate CLI-style flags (``--algo bcfw --step dec --sampling u``)."""
    if algo in ("pgd", "fista"):
        if sampling is not None:
            raise ConfigError(f"--sampling does not apply to {algo}")
        return BaselineConfig(algo, max_iterations=epochs, gap_tolerance=gap_tol,
                              gap_check_period=gap_check_period)
    if step not in _STEP:
        raise ConfigError(f"unknown stepsize {step!r}; choose 'dec' or 'els'")
    if sampling is not None and sampling not in _SAMPLING:
        raise ConfigError(f"unknown sampling {sampling!r}; choose 'u' or 'p'")
    if algo == "fw" and sampling is not None:
        raise ConfigError("--sampling only applies to block-coordinate methods")
    return SolverConfig(algo, sampling=_SAMPLING[sampling or "u"], stepsize=_STEP[step],
                        max_epochs=epochs, gap_tolerance=gap_tol, rng_seed=seed,
                        gap_check_period=gap_check_period)


def config_from_label(label: str, **kwargs) -> AnyConfig:
    """Config for a benchmark label such as ``fw-els``, ``bcfw-p-dec`` or ``bcpfw``."""
    parts = label.lower().split("-")
    algo = parts[0]
    if algo in ("pgd", "fista", "bcafw", "bcpfw") and len(parts) == 1:
        return make_config(algo, **kwargs)
    if algo == "fw" and len(parts) == 2:
        return make_config("fw", step=parts[1], **kwargs)
    if algo == "bcfw" and len(parts) == 3:
        return make_config("bcfw", sampling=parts[1], step=parts[2], **kwargs)
    raise ConfigError(f"unknown algorithm label {label!r}; known: {', '.join(LABELS)}")


def run(p, cfg: AnyConfig, t0=None, callback=None, checkpoints=()):
    if isinstance(cfg, BaselineConfig):
        return solve_baseline(p, cfg, t0, callback=callback, checkpoints=checkpoints)
    return solve(p, cfg, t0, callback=callback, checkpoints=checkpoints)
