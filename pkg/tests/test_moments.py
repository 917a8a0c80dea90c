"""Moment-ODE generation tests: closure structure, published-equation fidelity,
linear-noise covariances, min-term inventory, required order."""

import numpy as np
import pytest

from gpa import (
    CovEntry,
    MomentIndex,
    all_moment_indices,
    collect_min_terms,
    generate_lna_odes,
    generate_moment_odes,
    initial_values,
    integrate_rk4,
    parse_model,
    required_order,
    validate,
)
from gpa.errors import GpaError, GpaRuntimeError
from gpa.exprs import Min, min_nodes
from gpa.language import ast
from gpa.moments import compile_rhs, mean_index

import models
import oracles

A = models.MODEL_A


@pytest.fixture(scope="module")
def cs():
    return models.setup(models.client_server_a())


def _m(*exps):
    return MomentIndex(tuple(exps))


def test_first_order_rhs_equals_published_drift(cs):
    _, idx, classes = cs
    system = generate_moment_odes(classes, idx, 1)
    rhs = compile_rhs(system)
    r_req, r_break, r_think, r_data, r_reset = (
        A["r_req"], A["r_break"], A["r_think"], A["r_data"], A["r_reset"],
    )

    def reference(v):
        req = min(v[3], v[0]) * r_req
        data = min(v[1], v[4]) * r_data
        return [
            -req + v[2] * r_think,
            -data + req,
            -v[2] * r_think + data,
            -req - v[3] * r_break + data + v[5] * r_reset,
            -data + req,
            -v[5] * r_reset + v[3] * r_break,
        ]

    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.uniform(0.0, 150.0, size=6)
        assert rhs(list(v)) == pytest.approx(reference(v), rel=1e-12, abs=1e-12)


def test_second_order_server_equation_matches_closed_form(cs):
    # raw-moment equation for the squared server count: every expectation of a
    # min is replaced by the min of expectations, pushed through the monomials
    _, idx, classes = cs
    system = generate_moment_odes(classes, idx, 2)
    slot = system.slot_map()
    rhs = compile_rhs(system)
    i_s2 = slot[_m(0, 0, 0, 2, 0, 0)]

    def closed_form(y):
        def g(*exps):
            return y[slot[_m(*exps)]]

        e_c, e_s, e_cw, e_sg, e_sb = g(1, 0, 0, 0, 0, 0), g(0, 0, 0, 1, 0, 0), g(0, 1, 0, 0, 0, 0), g(0, 0, 0, 0, 1, 0), g(0, 0, 0, 0, 0, 1)
        e_cs, e_s2 = g(1, 0, 0, 1, 0, 0), g(0, 0, 0, 2, 0, 0)
        e_cws, e_sgs, e_sbs = g(0, 1, 0, 1, 0, 0), g(0, 0, 0, 1, 1, 0), g(0, 0, 0, 1, 0, 1)
        out = A["r_req"] * (-2 * min(e_cs, e_s2) + min(e_c, e_s))
        out += A["r_data"] * (2 * min(e_cws, e_sgs) + min(e_cw, e_sg))
        out += A["r_break"] * (-2 * e_s2 + e_s)
        out += A["r_reset"] * (2 * e_sbs + e_sb)
        return out

    rng = np.random.default_rng(1)
    for _ in range(100):
        y = rng.uniform(0.0, 120.0, size=len(system.unknowns))
        assert rhs(list(y))[i_s2] == pytest.approx(closed_form(y), rel=1e-12)

    # the second-order switched term min(E[N_C N_S], E[N_S^2]) appears as such
    nodes = min_nodes(system.rhs[i_s2])
    keys = {(tuple(sorted(k.exps for k, _ in n.left.terms)), tuple(sorted(k.exps for k, _ in n.right.terms))) for n in nodes if hasattr(n.left, "terms") and hasattr(n.right, "terms")}
    assert (((1, 0, 0, 1, 0, 0),), ((0, 0, 0, 2, 0, 0),)) in keys


def test_purely_concurrent_has_no_min_nodes():
    _, idx, classes = models.setup(models.PURE_CONCURRENT)
    for p in (1, 2, 3):
        system = generate_moment_odes(classes, idx, p)
        assert all(not min_nodes(expr) for expr in system.rhs)


def test_order_one_subsystem_stable_across_orders(cs):
    _, idx, classes = cs
    base = generate_moment_odes(classes, idx, 1)
    for p in (2, 3):
        system = generate_moment_odes(classes, idx, p)
        assert system.unknowns[:6] == base.unknowns
        assert system.rhs[:6] == base.rhs


def test_group_sum_moments_symbolically_zero(cs):
    from gpa.exprs import Const, add

    _, idx, classes = cs
    system = generate_moment_odes(classes, idx, 2)
    for dims in ([0, 1, 2], [3, 4, 5]):
        total = add(*(system.rhs[d] for d in dims))
        assert total == Const(0.0)


def test_min_terms_client_server(cs):
    _, idx, classes = cs
    system = generate_moment_odes(classes, idx, 2)
    terms = collect_min_terms(system, 1)
    assert len(terms) == 2
    assert terms[0].left.terms == ((mean_index(0, 6), 2.0),)
    assert terms[0].right.terms == ((mean_index(3, 6), 2.0),)
    assert terms[1].left.terms == ((mean_index(1, 6), 1.0),)
    assert terms[1].right.terms == ((mean_index(4, 6), 1.0),)
    assert [t.id for t in terms] == [1, 2]
    assert all(t.max_order == 1 for t in terms)


def test_min_terms_processor_resource():
    _, idx, classes = models.setup(models.processor_resource())
    system = generate_moment_odes(classes, idx, 1)
    terms = collect_min_terms(system, 1)
    assert len(terms) == 1
    assert terms[0].left.terms == ((mean_index(0, 4), 2.0),)
    assert terms[0].right.terms == ((mean_index(2, 4), 14.0),)


def test_min_terms_pure_concurrent_empty():
    _, idx, classes = models.setup(models.PURE_CONCURRENT)
    system = generate_moment_odes(classes, idx, 2)
    assert collect_min_terms(system, 2) == []


def test_required_order_examples():
    def cmd(body):
        return ast.Command(body)

    pair = ast.GCPair("G", "C")
    assert required_order([cmd(ast.PlotCmd((ast.MExpect(((( pair, 1),),)),)))]) == 1
    assert required_order([cmd(ast.PlotCmd((ast.MVarOf((pair,)),)))]) == 2
    assert required_order([cmd(ast.PlotCmd((ast.MCentral(pair, 4),)))]) == 4
    assert required_order([cmd(ast.SwitchCmd(3))]) == 3
    assert required_order([]) == 1


def test_moment_order_validation(cs):
    _, idx, classes = cs
    with pytest.raises(GpaError):
        generate_moment_odes(classes, idx, 0)


def test_unknown_enumeration_is_graded_lex(cs):
    _, idx, classes = cs
    unknowns = all_moment_indices(3, 2)
    assert [u.exps for u in unknowns] == [
        (1, 0, 0), (0, 1, 0), (0, 0, 1),
        (2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2),
    ]
    assert len(all_moment_indices(6, 2)) == 27


def test_initial_values_products(cs):
    _, idx, classes = cs
    system = generate_moment_odes(classes, idx, 2)
    init = initial_values(system, idx)
    slot = system.slot_map()
    assert init[slot[_m(1, 0, 0, 0, 0, 0)]] == 100.0
    assert init[slot[_m(2, 0, 0, 0, 0, 0)]] == 10000.0
    assert init[slot[_m(1, 0, 0, 1, 0, 0)]] == 5000.0
    assert init[slot[_m(0, 1, 0, 0, 0, 0)]] == 0.0


# --- linear-noise mode ---------------------------------------------------------


def test_lna_server_variance_equation_matches_published_form(cs):
    # the covariance equation for the server count, with indicators switching
    # on first-order comparisons only
    _, idx, classes = cs
    system = generate_lna_odes(classes, idx)
    slot = system.slot_map()
    rhs = compile_rhs(system)
    i_ss = slot[CovEntry(3, 3)]

    def cov(y, a, b):
        return y[slot[CovEntry(min(a, b), max(a, b))]]

    def published(y):
        v = [y[slot[mean_index(d, 6)]] for d in range(6)]
        out = -2 * A["r_req"] * (cov(y, 3, 3) if v[3] <= v[0] else cov(y, 3, 0))
        out += 2 * A["r_data"] * (cov(y, 3, 4) if v[4] <= v[1] else cov(y, 3, 1))
        out += -2 * A["r_break"] * cov(y, 3, 3) + 2 * A["r_reset"] * cov(y, 3, 5)
        out += A["r_req"] * min(v[0], v[3]) + A["r_data"] * min(v[1], v[4])
        out += A["r_break"] * v[3] + A["r_reset"] * v[5]
        return out

    rng = np.random.default_rng(2)
    for _ in range(100):
        y = rng.uniform(0.5, 90.0, size=len(system.unknowns))
        assert rhs(list(y))[i_ss] == pytest.approx(published(y), rel=1e-12)


def test_lna_diffusion_at_initial_state(cs):
    # d/dt Cov[N_S, N_S] at t=0 is pure diffusion: r_req*min(c,s) + r_break*s
    _, idx, classes = cs
    system = generate_lna_odes(classes, idx)
    rhs = compile_rhs(system)
    init = initial_values(system, idx)
    slot = system.slot_map()
    out = rhs(list(init))
    assert out[slot[CovEntry(3, 3)]] == pytest.approx(2.0 * 50 + 0.1 * 50)  # 105


def test_lna_initial_covariances_zero(cs):
    _, idx, classes = cs
    system = generate_lna_odes(classes, idx)
    init = initial_values(system, idx)
    slot = system.slot_map()
    for u in system.unknowns:
        if isinstance(u, CovEntry):
            assert init[slot[u]] == 0.0


def test_lna_refuses_non_split_free():
    _, idx, classes = models.setup(models.SPLIT_MODEL)
    with pytest.raises(GpaRuntimeError, match="split-free"):
        generate_lna_odes(classes, idx)


def test_lna_mean_rows_equal_closure_means(cs):
    _, idx, classes = cs
    lna = generate_lna_odes(classes, idx)
    closure = generate_moment_odes(classes, idx, 1)
    assert lna.rhs[:6] == closure.rhs
    assert lna.unknowns[:6] == closure.unknowns


def test_lna_agrees_with_closure_before_switch_point(cs):
    # away from switch points the two variance treatments coincide
    _, idx, classes = cs
    lna = generate_lna_odes(classes, idx)
    clo = generate_moment_odes(classes, idx, 2)
    ds_l = integrate_rk4(lna, initial_values(lna, idx), 1.5, 0.01, 4)
    ds_c = integrate_rk4(clo, initial_values(clo, idx), 1.5, 0.01, 4)
    for d in range(6):
        var_l = ds_l.columns[CovEntry(d, d)]
        mean = ds_c.columns[mean_index(d, 6)]
        var_c = ds_c.raw_moment(_m(*[2 if i == d else 0 for i in range(6)])) - mean ** 2
        denom = np.maximum(np.maximum(np.abs(var_l), np.abs(var_c)), 1e-9)
        assert (np.abs(var_l - var_c) / denom).max() < 0.01


def test_closure_mean_exact_when_min_ordering_uniform():
    # resources recover so fast that the processor side is effectively always
    # the minimum; the closure mean then tracks the exact mean tightly
    src = models.processor_resource(m=3, n=2, r1=0.5, q=100.0, r2=100.0, s=100.0)
    vm, idx, classes = models.setup(src)
    system = generate_moment_odes(classes, idx, 1)
    ds = integrate_rk4(system, initial_values(system, idx), 3.0, 0.1, 20)
    # the fluid path keeps a wide margin between the min arguments
    margin = 0.5 * ds.columns[mean_index(0, 4)] - 100.0 * ds.columns[mean_index(2, 4)]
    assert margin.max() < -50.0

    oracle = oracles.TransientOracle(idx.initial, oracles.processor_resource_rules(0.5, 100.0, 100.0, 100.0))
    for j, t in enumerate(ds.grid):
        if t == 0.0:
            continue
        dist = oracle.distribution(t)
        for d in range(4):
            exact = oracle.mean(t, d, dist)
            got = ds.columns[mean_index(d, 4)][j]
            assert abs(got - exact) <= 5e-3 * idx.total_population
