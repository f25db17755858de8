import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from conftest import random_plan, random_problem
from srot.baselines import reference_optimum
from srot.bench import iterations_to_gap, synthetic_problem
from srot.core import Problem, RowSumCache, TransportPlan, full_lmo, objective
from srot.errors import ConfigError, InstanceError
from srot.solvers import (
    TRACE_HEADER,
    SolverConfig,
    _BlockSampler,
    decay_stepsize,
    default_initial_plan,
    exact_line_search,
    read_trace_csv,
    solve,
    solve_bcafw,
    solve_bcfw,
    solve_bcpfw,
    solve_fw,
    theorem1_bound,
    theorem1_iterations,
    write_trace_csv,
)

ELS_VARIANTS = [("fw", "exact_line_search"), ("bcfw", "exact_line_search"),
                ("bcafw", "exact_line_search"), ("bcpfw", "exact_line_search")]
ALL_VARIANTS = ELS_VARIANTS + [("fw", "decay"), ("bcfw", "decay")]


def every_iterate(p, cfg, t0=None):
    """Run with a trace row (and callback) at every iteration; return (result, plans)."""
    plans = []
    cfg = SolverConfig(**{**cfg.__dict__, "gap_check_period": 1})
    res = solve(p, cfg, t0, callback=lambda k, t: plans.append((k, t.entries.copy())))
    return res, plans


# ------------------------------------------------------------ initial plan


def test_default_initial_plan_examples():
    p = Problem(np.zeros((2, 2)), [0.5, 0.5], [0.5, 0.5], 1)
    assert_array_equal(default_initial_plan(p).entries, [[0.5, 0.5], [0, 0]])
    p = Problem(np.zeros((1, 3)), [1.0], [0.2, 0.3, 0.5], 1)
    assert_array_equal(default_initial_plan(p).entries, [[0.2, 0.3, 0.5]])
    p = Problem(np.zeros((2, 2)), [0.5, 0.5], [1.0, 0.0], 1)
    assert_array_equal(default_initial_plan(p).entries, [[1, 0], [0, 0]])


# --------------------------------------------------------------- stepsizes


def test_decay_examples():
    assert decay_stepsize(0) == 1.0
    assert decay_stepsize(8, n=4, blockwise=True) == 0.5
    assert decay_stepsize(0, n=4, blockwise=True) == 1.0
    assert decay_stepsize(2) == 0.5


@given(k=st.integers(0, 10**9), n=st.integers(1, 10**4), blockwise=st.booleans())
def test_decay_in_unit_interval(k, n, blockwise):
    assert 0 < decay_stepsize(k, n, blockwise) <= 1


def test_line_search_hand_example():
    # c_i = [1, 0], T 1 - a = [0.5, -0.5], d = s_i - t_i = [-0.5, 0.5]: raw 2, clipped to 1
    p = Problem([[1.0], [0.0]], [0.0, 0.5], [0.5], 1.0)
    cache = RowSumCache.from_plan(TransportPlan([[0.5], [0.0]]))
    assert_allclose(cache.row_sums - p.a, [0.5, -0.5])
    assert exact_line_search(p, cache, 0, [-0.5, 0.5], 1.0) == (1.0, True)
    gamma, ok = exact_line_search(p, cache, 0, [-0.5, 0.5], 10.0)
    assert ok and gamma == pytest.approx(2.0, rel=1e-15)


def test_line_search_non_descent_direction_gives_zero():
    p = Problem([[1.0], [0.0]], [0.0, 0.5], [0.5], 1.0)
    cache = RowSumCache.from_plan(TransportPlan([[0.5], [0.0]]))
    assert exact_line_search(p, cache, 0, [0.5, -0.5], 1.0) == (0.0, True)


def test_line_search_zero_direction_signals():
    p = Problem([[1.0], [0.0]], [0.0, 0.5], [0.5], 1.0)
    cache = RowSumCache.from_plan(TransportPlan([[0.5], [0.0]]))
    assert exact_line_search(p, cache, 0, [0.0, 0.0], 1.0) == (0.0, False)
    with pytest.raises(InstanceError):
        exact_line_search(p, cache, 0, [0.0, 0.0, 1.0], 1.0)


@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 6), n=st.integers(1, 5),
       lam=st.sampled_from([0.01, 1.0, 10.0]))
def test_line_search_beats_grid(seed, m, n, lam):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, m, n, lam)
    t = random_plan(rng, p)
    i = int(rng.integers(n))
    s = np.zeros(m)
    s[rng.integers(m)] = p.b[i]
    d = s - t.entries[:, i]
    gamma, _ = exact_line_search(p, RowSumCache.from_plan(t), i, d, 1.0)

    def f(g):
        T = t.entries.copy()
        T[:, i] += g * d
        return objective(p, T)

    best = f(gamma)
    for g in np.linspace(0, 1, 101):
        assert best <= f(g) + 1e-12 * max(1.0, abs(best))


# ------------------------------------------------------- convergence bound


def test_theorem1_examples():
    assert theorem1_bound(1, 0, 4.0, 0.0) == 1.0
    assert theorem1_bound(16, 32, 1.0, 2.0) == 3.0
    assert theorem1_bound(3, 10**15, 1.0, 1.0) < 1e-13


@given(n=st.integers(1, 100), lam=st.floats(1e-3, 1e3), h0=st.floats(0, 100),
       eps=st.floats(1e-4, 1.0))
def test_theorem1_iterations_is_first_crossing(n, lam, h0, eps):
    k = theorem1_iterations(n, lam, eps, h0)
    assert theorem1_bound(n, k, lam, h0) <= eps
    if k > 0:
        assert theorem1_bound(n, k - 1, lam, h0) > eps


# ------------------------------------------------------------------ config


@pytest.mark.parametrize("kwargs", [
    dict(algorithm="sgd"),
    dict(algorithm="fw", sampling="permutation"),
    dict(sampling="cyclic"),
    dict(stepsize="armijo"),
    dict(algorithm="bcafw", stepsize="decay"),
    dict(algorithm="bcpfw", stepsize="decay"),
    dict(max_epochs=0),
    dict(max_epochs=1.5),
    dict(gap_tolerance=-1.0),
    dict(gap_check_period=0),
    dict(rng_seed=-1),
    dict(rng_seed=2**64),
    dict(away_oracle="random"),
])
def test_invalid_configs(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


def test_labels():
    assert SolverConfig("fw", stepsize="decay").label == "fw-dec"
    assert SolverConfig("bcfw", sampling="permutation").label == "bcfw-p-els"
    assert SolverConfig("bcpfw").label == "bcpfw"


def test_wrong_entry_point(rng):
    p = random_problem(rng, 3, 3)
    with pytest.raises(ConfigError):
        solve_fw(p, SolverConfig("bcfw"))
    for fn in (solve_bcfw, solve_bcafw, solve_bcpfw):
        with pytest.raises(ConfigError):
            fn(p, SolverConfig("fw"))


def test_infeasible_start_rejected(rng):
    p = random_problem(rng, 3, 3)
    with pytest.raises(InstanceError):
        solve(p, SolverConfig("bcfw"), np.ones((3, 3)))
    with pytest.raises(InstanceError):
        solve(p, SolverConfig("fw"), np.ones((2, 3)))


# ---------------------------------------------------------------------- FW


def test_fw_zero_cost_descends_to_zero(tiny):
    res, _ = every_iterate(tiny, SolverConfig("fw", max_epochs=2000))
    objs = [r.objective for r in res.trace]
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))
    assert objs[-1] <= 1e-12
    assert res.final_gap <= 1e-9


def test_fw_first_decay_step_lands_on_lmo_vertex(rng):
    p = random_problem(rng, 4, 5, 0.5)
    t0 = default_initial_plan(p)
    res = solve_fw(p, SolverConfig("fw", stepsize="decay", max_epochs=1), t0)
    assert_array_equal(res.plan.entries, full_lmo(p, t0))


def test_fw_matches_oracle_on_3x3(rng):
    p = random_problem(rng, 3, 3, 1.0)
    f_star = reference_optimum(p).objective
    res = solve_fw(p, SolverConfig("fw", max_epochs=200_000, gap_tolerance=1e-9,
                                   gap_check_period=10_000))
    assert abs(res.objective - f_star) <= 1e-6


def test_fw_records_gap_every_iteration(rng):
    p = random_problem(rng, 3, 4, 1e-3)
    res = solve_fw(p, SolverConfig("fw", max_epochs=7))
    assert res.termination == "max_epochs"
    assert [r.iteration for r in res.trace] == list(range(8))
    assert all(r.duality_gap is not None for r in res.trace)


# -------------------------------------------------------------------- BCFW


@pytest.mark.parametrize("stepsize", ["decay", "exact_line_search"])
def test_bcfw_single_block_is_fw(rng, stepsize):
    p = random_problem(rng, 5, 1, 0.3)
    fw, _ = every_iterate(p, SolverConfig("fw", stepsize=stepsize, max_epochs=40))
    bc, _ = every_iterate(p, SolverConfig("bcfw", stepsize=stepsize, max_epochs=40))
    assert [r.iteration for r in fw.trace] == [r.iteration for r in bc.trace]
    assert_allclose([r.objective for r in bc.trace], [r.objective for r in fw.trace],
                    rtol=1e-12, atol=1e-14)
    assert_allclose(bc.plan.entries, fw.plan.entries, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("algorithm,stepsize", ALL_VARIANTS)
def test_determinism(rng, algorithm, stepsize):
    p = random_problem(rng, 6, 5, 0.2)
    cfg = SolverConfig(algorithm, stepsize=stepsize, max_epochs=30, rng_seed=7)
    r1, r2 = solve(p, cfg), solve(p, cfg)
    assert [r.objective for r in r1.trace] == [r.objective for r in r2.trace]
    assert_array_equal(r1.plan.entries, r2.plan.entries)


def test_seed_changes_block_order(rng):
    p = random_problem(rng, 6, 5, 0.2)
    r1 = solve(p, SolverConfig("bcfw", max_epochs=5, rng_seed=1))
    r2 = solve(p, SolverConfig("bcfw", max_epochs=5, rng_seed=2))
    assert not np.array_equal(r1.plan.entries, r2.plan.entries)


@given(n=st.integers(1, 9), seed=st.integers(0, 1000), chunks=st.lists(st.integers(1, 20),
                                                                        min_size=1, max_size=6))
def test_permutation_sampler_covers_each_epoch(n, seed, chunks):
    sampler = _BlockSampler(np.random.default_rng(seed), np.arange(n), "permutation")
    drawn = np.concatenate([sampler.draw(c) for c in chunks])
    for e in range(len(drawn) // n):
        assert sorted(drawn[e * n:(e + 1) * n]) == list(range(n))


def test_zero_mass_columns_stay_zero(rng):
    p = random_problem(rng, 4, 4)
    b = p.b.copy()
    b[2] = 0.0
    p = Problem(p.cost, p.a, b, 0.5)
    for algorithm in ("bcfw", "bcafw", "bcpfw"):
        res = solve(p, SolverConfig(algorithm, max_epochs=50))
        assert_array_equal(res.plan.entries[:, 2], 0.0)
        res.plan.check_feasible(p.b)


@pytest.mark.parametrize("algorithm,stepsize", ELS_VARIANTS)
@pytest.mark.parametrize("lam", [0.05, 1.0])
def test_monotone_descent_under_line_search(algorithm, stepsize, lam):
    rng = np.random.default_rng(3)
    for _ in range(3):
        p = random_problem(rng, 6, 5, lam)
        res, _ = every_iterate(p, SolverConfig(algorithm, stepsize=stepsize, max_epochs=60))
        objs = np.array([r.objective for r in res.trace])
        assert np.all(np.diff(objs) <= 1e-12 * np.maximum(1.0, np.abs(objs[:-1])))


@pytest.mark.parametrize("algorithm,stepsize", ALL_VARIANTS)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 7), n=st.integers(1, 7),
       lam=st.sampled_from([1e-3, 0.1, 10.0]))
def test_feasibility_of_every_iterate(algorithm, stepsize, seed, m, n, lam):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, m, n, lam)
    _, plans = every_iterate(p, SolverConfig(algorithm, stepsize=stepsize, max_epochs=15,
                                             rng_seed=seed), random_plan(rng, p, sparse=True))
    for _, T in plans:
        assert np.max(np.abs(T.sum(axis=0) - p.b)) <= 1e-9
        assert T.min() >= -1e-12


def _support(col):
    return set(np.flatnonzero(col > 1e-12 * col.sum()))


@given(seed=st.integers(0, 2**32 - 1), lam=st.sampled_from([1e-2, 1.0]))
def test_bcfw_support_grows_by_at_most_one(seed, lam):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 6, 4, lam)
    _, plans = every_iterate(p, SolverConfig("bcfw", max_epochs=10, rng_seed=seed),
                             random_plan(rng, p, sparse=True))
    for (_, A), (_, B) in zip(plans, plans[1:]):
        changed = np.flatnonzero(np.any(A != B, axis=0))
        assert changed.size <= 1
        for i in changed:
            old, new = _support(A[:, i]), _support(B[:, i])
            assert len(new - old) <= 1
            # either a convex step keeping old atoms, or gamma = 1 and a single vertex
            assert old <= new or len(new) == 1


# --------------------------------------------------------- away / pairwise


def _four_atom_column():
    # t = [0.4, 0.2, 0.4, 0], T 1 = a so the block gradient equals the cost column
    t = np.array([[0.4], [0.2], [0.4], [0.0]])
    c = np.array([[1.0], [5.0], [1.0], [0.99]])
    return Problem(c, t[:, 0], [1.0], 1.0), TransportPlan(t)


def test_bcafw_maximal_away_step_drops_atom():
    p, t0 = _four_atom_column()
    # <d_away, g> = 1.8 - 5 = -3.2 beats <d_fw, g> = 0.99 - 1.8; gamma_max = 0.2/0.8
    res = solve_bcafw(p, SolverConfig("bcafw", max_epochs=1), t0)
    T = res.plan.entries[:, 0]
    assert T[1] == 0.0
    assert_allclose(T, [0.5, 0.0, 0.5, 0.0], atol=1e-15)
    assert len(_support(T)) == 2


def test_bcpfw_maximal_pair_step_moves_whole_atom():
    p, t0 = _four_atom_column()
    res = solve_bcpfw(p, SolverConfig("bcpfw", max_epochs=1), t0)
    T = res.plan.entries[:, 0]
    assert T[1] == 0.0 and T[3] == 0.2
    assert_array_equal(T[[0, 2]], [0.4, 0.4])
    assert T.sum() == pytest.approx(1.0, abs=1e-15)


def test_away_oracle_argmin_switch_changes_path():
    p, t0 = _four_atom_column()
    res = solve_bcafw(p, SolverConfig("bcafw", max_epochs=1, away_oracle="argmin"), t0)
    assert res.plan.entries[1, 0] != 0.0


@pytest.mark.parametrize("algorithm", ["bcafw", "bcpfw"])
def test_optimal_block_takes_zero_step(algorithm):
    # column 1 sits on its cheapest vertex and stays optimal whatever column 0 does
    C = np.array([[0.3, 0.0], [0.1, 100.0], [0.2, 100.0]])
    p = Problem(C, [0.2, 0.3, 0.5], [0.6, 0.4], 1.0)
    t0 = np.array([[0.2, 0.4], [0.2, 0.0], [0.2, 0.0]])
    _, plans = every_iterate(p, SolverConfig(algorithm, max_epochs=40), t0)
    for _, T in plans:
        assert_array_equal(T[:, 1], [0.4, 0.0, 0.0])


def test_bcpfw_preserves_column_sums_exactly_on_dyadic_data():
    C = np.array([[0.5, 0.25], [0.0, 0.75], [1.0, 0.0]])
    p = Problem(C, [0.25, 0.25, 0.5], [0.5, 0.5], 1.0)
    _, plans = every_iterate(p, SolverConfig("bcpfw", max_epochs=30))
    for _, T in plans:
        assert np.all(T >= 0)
        assert_allclose(T.sum(axis=0), p.b, rtol=0, atol=1e-15)


def test_away_variants_need_fewer_iterations_than_bcfw():
    its = {"bcafw": [], "bcpfw": [], "bcfw": []}
    for seed in range(20):
        p = synthetic_problem(16, 16, 0.1, seed)
        for algorithm in its:
            res = solve(p, SolverConfig(algorithm, max_epochs=5000, gap_tolerance=1e-3,
                                        rng_seed=seed))
            its[algorithm].append(iterations_to_gap(res, 1e-3))
    assert np.median(its["bcafw"]) <= np.median(its["bcfw"])
    assert np.median(its["bcpfw"]) <= np.median(its["bcfw"])


# ------------------------------------------------------- termination rules


@pytest.mark.parametrize("algorithm,stepsize", ALL_VARIANTS)
def test_gap_tolerance_stops_run(algorithm, stepsize):
    p = synthetic_problem(8, 6, 1.0, 4)
    res = solve(p, SolverConfig(algorithm, stepsize=stepsize, max_epochs=100_000,
                                gap_tolerance=1e-3))
    assert res.termination == "gap_tolerance_met"
    assert res.final_gap <= 1e-3
    assert res.trace[-1].duality_gap == res.final_gap


def test_max_epochs_accounting():
    p = synthetic_problem(5, 4, 1e-3, 0)
    res = solve(p, SolverConfig("bcfw", max_epochs=3))
    assert res.termination == "max_epochs"
    assert [r.iteration for r in res.trace] == [0, 4, 8, 12]
    assert [r.epoch for r in res.trace] == [0, 1, 2, 3]
    res = solve(p, SolverConfig("bcfw", max_epochs=3, gap_check_period=5))
    assert [r.iteration for r in res.trace] == [0, 5, 10, 12]


def _stalling_instance():
    # lam is so small that the exact step is ~1e-200: entries cannot change
    C = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    b = np.array([0.5, 0.25, 0.25])
    return Problem(C, [0.5, 0.5], b, 1e-200), np.vstack([b / 2, b / 2])


@pytest.mark.parametrize("algorithm", ["fw", "bcfw", "bcafw", "bcpfw"])
def test_stall_detection(algorithm):
    p, t0 = _stalling_instance()
    res = solve(p, SolverConfig(algorithm, max_epochs=1000, gap_check_period=1), t0)
    assert res.termination == "stalled"
    assert res.final_gap > 0
    assert res.trace[-1].iteration <= 10
    assert_array_equal(res.plan.entries, t0)


def test_zero_gap_blocks_do_not_count_as_stalls():
    # every column optimal: the run simply hits the tolerance at the start
    p = Problem([[0.0, 0.0], [1.0, 1.0]], [1.0, 0.0], [0.5, 0.5], 1.0)
    res = solve(p, SolverConfig("bcfw", max_epochs=5))
    assert res.termination == "gap_tolerance_met"


def test_checkpoints_trigger_callbacks(rng):
    p = random_problem(rng, 4, 5)
    seen = []
    for algorithm in ("fw", "bcfw"):
        seen.clear()
        solve(p, SolverConfig(algorithm, max_epochs=20), callback=lambda k, t: seen.append(k),
              checkpoints=[0, 3, 7, 13])
        assert {0, 3, 7, 13} <= set(seen)


# ------------------------------------------------------------------ traces


@pytest.mark.parametrize("algorithm,stepsize", ALL_VARIANTS)
def test_trace_invariants(rng, algorithm, stepsize):
    p = random_problem(rng, 5, 6, 0.1)
    res = solve(p, SolverConfig(algorithm, stepsize=stepsize, max_epochs=25))
    its = [r.iteration for r in res.trace]
    times = [r.wall_time_seconds for r in res.trace]
    assert all(b > a for a, b in zip(its, its[1:]))
    assert all(b >= a for a, b in zip(times, times[1:]))
    assert all(0 <= r.sparsity <= 1 for r in res.trace)


def test_trace_csv_round_trip(tmp_path, rng):
    p = random_problem(rng, 4, 3)
    res = solve(p, SolverConfig("bcfw", max_epochs=4, gap_check_period=5))
    res.trace.append(type(res.trace[0])(99, 33.0, 1.5, 0.25, None, 0.5))
    path = tmp_path / "trace.csv"
    write_trace_csv(path, res.trace)
    assert path.read_text().splitlines()[0] == ",".join(TRACE_HEADER)
    assert path.read_text().splitlines()[-1].split(",")[4] == ""
    back = read_trace_csv(path)
    for a, b in zip(back, res.trace):
        assert (a.iteration, a.epoch, a.objective, a.duality_gap, a.sparsity) == \
               (b.iteration, b.epoch, b.objective, b.duality_gap, b.sparsity)
        assert a.wall_time_seconds == pytest.approx(b.wall_time_seconds, abs=1e-6)


def test_trace_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trace_csv(path)


def test_epochs_to_gap_inf_when_never_reached(rng):
    p = synthetic_problem(10, 10, 1e-4, 0)
    res = solve(p, SolverConfig("bcfw", max_epochs=2))
    assert math.isinf(iterations_to_gap(res, 1e-12))
