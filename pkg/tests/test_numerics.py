"""Integrator tests: accuracy, order, grid layout, determinism."""

import numpy as np
import pytest

from gpa import MomentIndex, build_grid, generate_moment_odes, initial_values, integrate_rk4, validate, parse_model
from gpa.errors import GpaRuntimeError
from gpa.exprs import Linear
from gpa.moments import MomentSystem, mean_index
from gpa.semantics import StateIndex

import models


def _scalar_system(coeff):
    """One unknown v with dv/dt = coeff * v."""
    idx = StateIndex((("G", "A"),), (1,), 1)
    u = MomentIndex((1,))
    return MomentSystem("closure", (u,), (Linear(((u, coeff),)),), idx), u


def test_exponential_decay_accuracy():
    system, u = _scalar_system(-1.0)
    ds = integrate_rk4(system, [1.0], 1.0, 0.1, 10)
    assert ds.columns[u][-1] == pytest.approx(np.exp(-1.0), abs=1e-8)


def test_constant_rhs_constant_columns():
    system, u = _scalar_system(0.0)
    ds = integrate_rk4(system, [3.5], 2.0, 0.5, 3)
    assert np.all(ds.columns[u] == 3.5)


def test_fourth_order_convergence():
    system, u = _scalar_system(-1.0)
    exact = np.exp(-1.0)
    err = []
    for density in (5, 10, 20):
        ds = integrate_rk4(system, [1.0], 1.0, 1.0, density)
        err.append(abs(ds.columns[u][-1] - exact))
    assert err[0] / err[1] == pytest.approx(16.0, rel=0.2)
    assert err[1] / err[2] == pytest.approx(16.0, rel=0.2)


def test_population_conservation_along_trajectory():
    vm, idx, classes = models.setup(models.client_server_a())
    system = generate_moment_odes(classes, idx, 1)
    ds = integrate_rk4(system, initial_values(system, idx), 10.0, 0.05, 4)
    clients = sum(ds.columns[mean_index(d, 6)] for d in range(3))
    servers = sum(ds.columns[mean_index(d, 6)] for d in range(3, 6))
    assert np.abs(clients - 100.0).max() < 1e-9
    assert np.abs(servers - 50.0).max() < 1e-9


def test_grid_point_count():
    assert len(build_grid(3.0, 0.001)) == 3001
    assert len(build_grid(1.0, 0.1)) == 11
    assert len(build_grid(10.0, 0.05)) == 201


def test_determinism_bit_identical():
    vm, idx, classes = models.setup(models.client_server_a())
    system = generate_moment_odes(classes, idx, 2)
    init = initial_values(system, idx)
    a = integrate_rk4(system, init, 3.0, 0.1, 5)
    b = integrate_rk4(system, init, 3.0, 0.1, 5)
    for u in system.unknowns:
        assert np.array_equal(a.columns[u], b.columns[u])


def test_nonfinite_abort_reports_time():
    system, u = _scalar_system(100.0)  # explodes quickly
    with pytest.raises(GpaRuntimeError, match="non-finite state at t="):
        integrate_rk4(system, [1.0], 100.0, 1.0, 1)
