"""Frank-Wolfe solvers for semi-relaxed optimal transport."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Problem,
    TransportPlan,
    duality_gap,
    objective,
    project_scaled_simplex,
)
from .solvers import SolveResult, SolverConfig, default_initial_plan, solve  # noqa: E402
from .baselines import BaselineConfig, reference_optimum, solve_fista, solve_pgd  # noqa: E402

__all__ = [
    "BaselineConfig",
    "Problem",
    "SolveResult",
    "SolverConfig",
    "TransportPlan",
    "default_initial_plan",
    "duality_gap",
    "objective",
    "project_scaled_simplex",
    "reference_optimum",
    "solve",
    "solve_fista",
    "solve_pgd",
]
