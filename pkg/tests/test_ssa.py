"""Simulation engine tests: exactness, statistics against the brute-force
oracle, conservation, seeding and thread determinism."""

import numpy as np
import pytest

from gpa import (
    all_moment_indices,
    build_grid,
    parse_model,
    propensities,
    replication_stream,
    run_simulation,
    simulate_replication,
    validate,
)
from gpa.moments import MomentIndex, mean_index

import models
import oracles


@pytest.fixture(scope="module")
def tiny():
    """Six-state processor/resource chain (m=2, n=1) with its oracle."""
    vm, idx, classes = models.setup(models.processor_resource(m=2, n=1))
    oracle = oracles.TransientOracle(idx.initial, oracles.processor_resource_rules())
    return vm, idx, classes, oracle


def test_no_transitions_path_constant():
    vm, idx, classes = models.setup("r = 1.0;\nA = (a, r).stop;\nG{A[0] | B[4]}\n".replace("| B[4]", ""))
    # zero population: nothing can fire
    grid = build_grid(1.0, 0.25)
    path = simulate_replication(classes, idx, idx.initial, grid, replication_stream(0, 0))
    assert np.all(path == np.array(idx.initial))


def test_deadlocked_state_held_to_stop_time():
    vm, idx, classes = models.setup("r = 5.0;\nA = (a, r).stop;\nG{A[3]}\n")
    grid = build_grid(50.0, 10.0)
    path = simulate_replication(classes, idx, idx.initial, grid, replication_stream(0, 1))
    # by t=10 everything is almost surely dead; the absorbing state holds
    assert tuple(path[-1]) == (0, 3)
    assert np.all(path[:, 0] + path[:, 1] == 3)


def test_pure_death_mean_matches_analytic():
    n0, rate = 20, 0.7
    vm, idx, classes = models.setup(f"r = {rate};\nA = (a, r).stop;\nG{{A[{n0}]}}\n")
    reps = 10000
    moms = all_moment_indices(2, 1)
    ds = run_simulation(classes, idx, 2.0, 0.5, reps, moms, seed=7)
    alive = ds.columns[mean_index(0, 2)]
    for j, t in enumerate(ds.grid):
        p = np.exp(-rate * t)
        se = np.sqrt(n0 * p * (1 - p) / reps) if 0 < p < 1 else 1e-9
        assert abs(alive[j] - n0 * p) < 3 * se + 1e-9


def test_tiny_model_mean_within_ci(tiny):
    _, idx, classes, oracle = tiny
    reps = 4000
    ds = run_simulation(classes, idx, 0.5, 0.1, reps, all_moment_indices(4, 1), seed=11)
    got = ds.columns[mean_index(0, 4)]
    for j, t in enumerate(ds.grid):
        if t == 0:
            continue
        dist = oracle.distribution(t)
        mu = oracle.mean(t, 0, dist)
        se = np.sqrt(max(oracle.variance(t, 0, dist), 1e-12) / reps)
        assert abs(got[j] - mu) < 3 * se


def test_propensity_exactness_everywhere(tiny):
    _, idx, classes, oracle = tiny
    rules = oracles.processor_resource_rules()
    assert len(oracle.states) == 6
    for state in oracle.states:
        got = propensities(classes, idx, state)
        want = [rule(np.array(state, dtype=float)) for _, rule in rules]
        assert got == pytest.approx(want, abs=0.0)


def test_conservation_along_paths():
    vm, idx, classes = models.setup(models.client_server_a(c=30, s=15))
    grid = build_grid(5.0, 0.05)
    for rep in range(5):
        path = simulate_replication(classes, idx, idx.initial, grid, replication_stream(3, rep))
        assert np.all(path[:, :3].sum(axis=1) == 30)
        assert np.all(path[:, 3:].sum(axis=1) == 15)


def test_seed_determinism_across_thread_counts():
    vm, idx, classes = models.setup(models.client_server_a(c=20, s=10))
    moms = all_moment_indices(6, 2)
    a = run_simulation(classes, idx, 2.0, 0.1, 64, moms, seed=5, threads=1)
    b = run_simulation(classes, idx, 2.0, 0.1, 64, moms, seed=5, threads=8)
    for m in moms:
        assert np.array_equal(a.columns[m], b.columns[m])


def test_different_seeds_differ():
    vm, idx, classes = models.setup(models.client_server_a(c=20, s=10))
    moms = [mean_index(0, 6)]
    a = run_simulation(classes, idx, 2.0, 0.5, 10, moms, seed=0)
    b = run_simulation(classes, idx, 2.0, 0.5, 10, moms, seed=1)
    assert not np.array_equal(a.columns[moms[0]], b.columns[moms[0]])


def test_single_replication_columns_are_path_monomials():
    vm, idx, classes = models.setup(models.processor_resource(m=3, n=2))
    grid = build_grid(1.0, 0.1)
    path = simulate_replication(classes, idx, idx.initial, grid, replication_stream(9, 0))
    moms = all_moment_indices(4, 2)
    ds = run_simulation(classes, idx, 1.0, 0.1, 1, moms, seed=9)
    for m in moms:
        want = np.ones(len(grid))
        for d, e in enumerate(m.exps):
            if e:
                want *= path[:, d].astype(float) ** e
        assert np.array_equal(ds.columns[m], want)


def test_variance_of_frozen_model_is_zero():
    vm, idx, classes = models.setup("r = 1.0;\nA = (a, r).stop;\nG{A[0]}\n")
    moms = all_moment_indices(2, 2)
    ds = run_simulation(classes, idx, 1.0, 0.5, 50, moms, seed=2)
    var = ds.columns[MomentIndex((2, 0))] - ds.columns[mean_index(0, 2)] ** 2
    assert np.all(var == 0.0)


def test_cadlag_grid_sampling_convention():
    # a single unit-rate transition: the grid sample at a time t takes the
    # value after the last jump at or before t
    vm, idx, classes = models.setup("r = 1.0;\nA = (a, r).stop;\nG{A[1]}\n")
    grid = build_grid(10.0, 0.01)
    rng = replication_stream(21, 0)
    path = simulate_replication(classes, idx, idx.initial, grid, rng)
    ones = path[:, 0]
    flips = np.where(np.diff(ones) != 0)[0]
    assert len(flips) == 1
    assert ones[0] == 1 and ones[-1] == 0
    assert np.all(np.diff(ones) <= 0)
