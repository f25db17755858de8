"""Problem data, objective and the per-block oracles for semi-relaxed OT.

The problem solved throughout the package is::

    min_T  <T, C> + 1/(2 lam) * ||T 1_n - a||^2
    s.t.   T >= 0,  T^T 1_m = b

so column ``i`` of ``T`` lives on the scaled simplex ``b_i * Delta_m`` and the
row marginal ``a`` is only enforced through the quadratic penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InstanceError

DEFAULT_SUPPORT_RTOL = 1e-12


def _as_vector(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2 and 1 in x.shape:
        x = x.ravel()
    if x.ndim != 1:
        raise InstanceError(f"{name} must be a vector, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class Problem:
    """An instance: cost ``C`` (m x n), marginals ``a`` (m) and ``b`` (n), relaxation ``lam``."""

    cost: np.ndarray
    a: np.ndarray
    b: np.ndarray
    lam: float

    def __post_init__(self):
        cost = np.array(self.cost, dtype=np.float64, order="F")
        if cost.ndim != 2 or cost.shape[0] < 1 or cost.shape[1] < 1:
            raise InstanceError(f"cost must be a nonempty matrix, got shape {cost.shape}")
        a = _as_vector(self.a, "a").copy()
        b = _as_vector(self.b, "b").copy()
        m, n = cost.shape
        if a.shape[0] != m:
            raise InstanceError(f"a has length {a.shape[0]} but cost has m={m} rows")
        if b.shape[0] != n:
            raise InstanceError(f"b has length {b.shape[0]} but cost has n={n} columns")
        if not np.all(np.isfinite(cost)):
            raise InstanceError("cost has non-finite entries")
        if not (np.all(np.isfinite(a)) and np.all(a >= 0)):
            raise InstanceError("a must be finite and nonnegative")
        if not (np.all(np.isfinite(b)) and np.all(b >= 0)):
            raise InstanceError("b must be finite and nonnegative")
        if not b.sum() > 0:
            raise InstanceError("b must have positive total mass")
        lam = float(self.lam)
        if not (np.isfinite(lam) and lam > 0):
            raise InstanceError(f"lam must be positive, got {self.lam}")
        for arr in (cost, a, b):
            arr.flags.writeable = False
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lam", lam)

    @property
    def m(self) -> int:
        return self.cost.shape[0]

    @property
    def n(self) -> int:
        return self.cost.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape


@dataclass(eq=False)
class TransportPlan:
    """Feasible point of the problem, stored column-major.

    The support of each column doubles as its active set; entries at or
    below ``support_rtol * b_i`` count as zero.
    """

    entries: np.ndarray
    support_rtol: float = DEFAULT_SUPPORT_RTOL

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64, order="F")
        if entries.ndim != 2:
            raise InstanceError(f"plan must be a matrix, got shape {entries.shape}")
        self.entries = entries

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def copy(self) -> TransportPlan:
        return TransportPlan(self.entries.copy(order="F"), self.support_rtol)

    def thresholds(self) -> np.ndarray:
        return self.support_rtol * self.entries.sum(axis=0)

    def active_set(self, i: int) -> np.ndarray:
        col = self.entries[:, i]
        return np.flatnonzero(col > self.support_rtol * col.sum())

    def feasibility_error(self, b) -> tuple[float, float]:
        """Return (max column-sum error, min entry)."""
        b = _as_vector(b, "b")
        return (float(np.max(np.abs(self.entries.sum(axis=0) - b))),
                float(self.entries.min()))

    def check_feasible(self, b, atol: float = 1e-9) -> None:
        b = _as_vector(b, "b")
        if b.shape[0] != self.shape[1]:
            raise InstanceError(f"b has length {b.shape[0]} but plan has {self.shape[1]} columns")
        sums = self.entries.sum(axis=0)
        bad = np.abs(sums - b) > atol * np.maximum(1.0, b)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise InstanceError(f"column {i} sums to {sums[i]!r}, expected {b[i]!r}")
        if self.entries.min() < -1e-12:
            raise InstanceError("plan has negative entries")


@dataclass(frozen=True)
class GradientBlock:
    values: np.ndarray
    column_index: int


@dataclass(eq=False)
class RowSumCache:
    """Row sums ``T 1_n`` maintained incrementally under column updates."""

    row_sums: np.ndarray
    dirty: bool = False

    @classmethod
    def from_plan(cls, plan: TransportPlan) -> RowSumCache:
        return cls(plan.entries.sum(axis=1))

    def rebuild(self, plan: TransportPlan) -> None:
        self.row_sums = plan.entries.sum(axis=1)
        self.dirty = False

    def update_column(self, old_col, new_col) -> None:
        self.row_sums += np.asarray(new_col) - np.asarray(old_col)


def _check_plan(p: Problem, t: TransportPlan) -> np.ndarray:
    T = t.entries if isinstance(t, TransportPlan) else np.asarray(t, dtype=np.float64)
    if T.shape != p.shape:
        raise InstanceError(f"plan has shape {T.shape}, problem is {p.shape}")
    return T


def objective(p: Problem, t: TransportPlan) -> float:
    T = _check_plan(p, t)
    resid = T.sum(axis=1) - p.a
    return float(np.vdot(T, p.cost) + resid @ resid / (2.0 * p.lam))


def full_gradient(p: Problem, t: TransportPlan) -> np.ndarray:
    T = _check_plan(p, t)
    resid = T.sum(axis=1) - p.a
    return p.cost + (resid / p.lam)[:, None]


def gradient_block(p: Problem, row_sums: RowSumCache, i: int) -> GradientBlock:
    if row_sums.dirty:
        raise InstanceError("row-sum cache is dirty; rebuild before use")
    if not 0 <= i < p.n:
        raise InstanceError(f"column index {i} out of range [0, {p.n})")
    if row_sums.row_sums.shape != (p.m,):
        raise InstanceError(f"row sums have shape {row_sums.row_sums.shape}, expected ({p.m},)")
    values = p.cost[:, i] + (row_sums.row_sums - p.a) / p.lam
    return GradientBlock(values, i)


def _values(g) -> np.ndarray:
    return np.ascontiguousarray(g.values if isinstance(g, GradientBlock) else g, dtype=np.float64)


def lmo_block(g, b_i: float) -> np.ndarray:
    """Vertex ``b_i * e_j`` of the scaled simplex minimizing ``<., g>``; ties go to the lowest j."""
    values = _values(g)
    if b_i < 0:
        raise InstanceError(f"b_i must be nonnegative, got {b_i}")
    s = np.zeros_like(values)
    s[_kernels.argmin_first(values)] = b_i
    return s


def away_oracle_block(g, t_i, b_i: float, *, use_max: bool = True,
                      support_rtol: float = DEFAULT_SUPPORT_RTOL) -> tuple[int, np.ndarray]:
    """Active atom with the largest gradient value (smallest if ``use_max`` is False)."""
    values = _values(g)
    col = np.ascontiguousarray(t_i, dtype=np.float64)
    if col.shape != values.shape:
        raise InstanceError(f"column has shape {col.shape}, gradient has {values.shape}")
    j, _ = _kernels.away_index(values, col, support_rtol * b_i, use_max)
    if j < 0:
        raise InstanceError("empty active set")
    atom = np.zeros_like(values)
    atom[j] = b_i
    return int(j), atom


def full_lmo(p: Problem, t: TransportPlan) -> np.ndarray:
    """Column-wise LMO solution S for the whole plan."""
    G = full_gradient(p, t)
    S = np.zeros(p.shape, order="F")
    S[np.argmin(G, axis=0), np.arange(p.n)] = p.b
    return S


def duality_gap(p: Problem, t: TransportPlan, s=None) -> float:
    """Linearization gap <T - S, grad f(T)>; equals the Lagrangian duality gap here."""
    T = _check_plan(p, t)
    S = full_lmo(p, T) if s is None else np.asarray(s, dtype=np.float64)
    if S.shape != p.shape:
        raise InstanceError(f"S has shape {S.shape}, problem is {p.shape}")
    D = T - S
    resid = T.sum(axis=1) - p.a
    return float(np.vdot(D, p.cost) + (D.sum(axis=1) @ resid) / p.lam)


def project_scaled_simplex(v, radius: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{x >= 0, sum(x) = radius}`` by sort-and-threshold."""
    v = _as_vector(v, "v")
    if radius < 0:
        raise InstanceError(f"radius must be nonnegative, got {radius}")
    return project_columns(v[:, None], np.array([radius]))[:, 0]


def project_columns(V, radii) -> np.ndarray:
    """Project every column of ``V`` onto its own scaled simplex."""
    V = np.asarray(V, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    m = V.shape[0]
    U = -np.sort(-V, axis=0)
    css = np.cumsum(U, axis=0) - radii
    ks = np.arange(1, m + 1)[:, None]
    cond = U - css / ks > 0
    # the first entry is radius > 0 in exact arithmetic but can round to zero
    cond[0] = True
    # cond is true on a prefix; rho is its last index
    rho = m - 1 - np.argmax(cond[::-1], axis=0)
    theta = css[rho, np.arange(V.shape[1])] / (rho + 1)
    out = np.maximum(V - theta, 0.0)
    out[:, radii == 0] = 0.0
    return np.asfortranarray(out)


def sparsity(t: TransportPlan) -> float:
    """Fraction of entries at or below the plan's support threshold."""
    T = t.entries
    return float(np.mean(T <= t.thresholds()[None, :]))
