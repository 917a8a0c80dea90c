"""Analysis orchestration: moment-expression evaluation, switch-point series,
and the odes / simulation / comparison pipelines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import exprs
from .errors import GpaError, GpaRuntimeError
from .language import ast
from .language.printer import format_moment_expr
from .language.validate import ValidatedModel
from .moments import (
    MomentIndex,
    MomentSystem,
    all_moment_indices,
    collect_min_terms,
    generate_lna_odes,
    generate_moment_odes,
    initial_values,
    required_order,
)
from .numerics import DataSet, integrate_rk4
from .semantics import StateIndex, build_state_index, enumerate_transition_classes
from .ssa import run_simulation


@dataclass
class EvaluatedSeries:
    label: str
    values: np.ndarray


@dataclass
class SwitchPointReport:
    """Per min-term distance series and the grid times where each crosses zero."""

    grid: np.ndarray
    terms: tuple  # tuple[MinTerm, ...]
    series: tuple  # tuple[np.ndarray, ...] left minus right
    crossings: tuple  # tuple[tuple[float, ...], ...]
    labels: tuple


@dataclass
class CommandResult:
    command: ast.Command
    payload: Union[list, SwitchPointReport]


@dataclass
class OdesRun:
    results: list
    dataset: DataSet
    system: MomentSystem


@dataclass
class SimulationRun:
    results: list
    dataset: DataSet


@dataclass
class ComparisonRun:
    results: list  # difference series of the comparison's own commands
    odes: OdesRun
    simulation: SimulationRun


@dataclass
class AnalysisOptions:
    seed: int = 0
    threads: int = 1
    variance_method: str = "closure"  # "closure" | "lna"
    sim_switchpoints: bool = False


def _monomial_index(monomial, idx: StateIndex) -> MomentIndex:
    exps = [0] * len(idx.dims)
    for pair, exp in monomial:
        exps[idx.dim_of(pair.group, pair.component)] += exp
    return MomentIndex(tuple(exps))


def _pair_dim(pair: ast.GCPair, idx: StateIndex) -> int:
    return idx.dim_of(pair.group, pair.component)


def _power_moment(dim: int, power: int, ndims: int) -> MomentIndex:
    exps = [0] * ndims
    exps[dim] = power
    return MomentIndex(tuple(exps))


def _nan_divide(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.asarray(num, dtype=float) / den
    return np.where(den == 0.0, np.nan, out)


def evaluate_expression(expr, ds: DataSet, vm: ValidatedModel, idx: StateIndex) -> EvaluatedSeries:
    """Evaluate one moment expression pointwise over a data set.

    Var, Cov and central moments are derived from raw moments; divisions by
    zero yield NaN at the affected grid points only.
    """
    n = len(ds.grid)
    ndims = len(idx.dims)

    def mean_of(dim):
        return ds.raw_moment(_power_moment(dim, 1, ndims))

    def central(dim, order):
        mean = mean_of(dim)
        out = np.zeros(n)
        for j in range(order + 1):
            ej = ds.raw_moment(_power_moment(dim, j, ndims)) if j > 0 else 1.0
            out = out + math.comb(order, j) * (-1.0) ** (order - j) * ej * mean ** (order - j)
        return out

    def go(e):
        if isinstance(e, ast.MNum):
            return np.full(n, float(e.value))
        if isinstance(e, ast.MParam):
            return np.full(n, float(vm.params[e.name]))
        if isinstance(e, ast.MBin):
            a = go(e.left)
            b = go(e.right)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return _nan_divide(a, b)
            return a ** b
        if isinstance(e, ast.MExpect):
            out = np.zeros(n)
            for mono in e.monomials:
                out = out + ds.raw_moment(_monomial_index(mono, idx))
            return out
        if isinstance(e, ast.MVarOf):
            dims = [_pair_dim(p, idx) for p in e.pairs]
            mean = sum(mean_of(d) for d in dims)
            second = np.zeros(n)
            for a in dims:
                for b in dims:
                    exps = [0] * ndims
                    exps[a] += 1
                    exps[b] += 1
                    second = second + ds.raw_moment(MomentIndex(tuple(exps)))
            return second - mean ** 2
        if isinstance(e, ast.MCovOf):
            a = _pair_dim(e.first, idx)
            b = _pair_dim(e.second, idx)
            exps = [0] * ndims
            exps[a] += 1
            exps[b] += 1
            return ds.raw_moment(MomentIndex(tuple(exps))) - mean_of(a) * mean_of(b)
        if isinstance(e, ast.MCentral):
            d = _pair_dim(e.pair, idx)
            out = central(d, e.order)
            if e.standardised:
                variance = central(d, 2)
                return _nan_divide(out, variance ** (e.order / 2.0))
            return out
        raise GpaError(f"unexpected moment expression {type(e).__name__}")

    return EvaluatedSeries(format_moment_expr(expr), go(expr))


def crossing_times(grid, values) -> tuple:
    """Zero crossings of a series: exact zeros plus sign changes, linearly interpolated."""
    times = []
    for j, v in enumerate(values):
        if v == 0.0:
            if j == 0 or values[j - 1] != 0.0:
                times.append(float(grid[j]))
        elif j > 0:
            u = values[j - 1]
            if u != 0.0 and (u < 0.0) != (v < 0.0):
                times.append(float(grid[j - 1] + (grid[j] - grid[j - 1]) * (-u) / (v - u)))
    return tuple(times)


def switch_point_report(system: MomentSystem, ds: DataSet, order: int, idx: StateIndex) -> SwitchPointReport:
    terms = collect_min_terms(system, order)
    series = []
    crossings = []
    labels = []
    env = _MomentEnv(ds)
    for term in terms:
        d = np.asarray(exprs.evaluate(term.left, env) - exprs.evaluate(term.right, env), dtype=float)
        series.append(d)
        crossings.append(crossing_times(ds.grid, d))
        labels.append(term.label(idx))
    return SwitchPointReport(ds.grid, tuple(terms), tuple(series), tuple(crossings), tuple(labels))


class _MomentEnv:
    """Maps moment unknowns to data-set series for expression evaluation."""

    def __init__(self, ds: DataSet):
        self.ds = ds

    def __getitem__(self, key):
        if isinstance(key, MomentIndex):
            return self.ds.raw_moment(key)
        return self.ds.columns[key]


class AnalysisRunner:
    """Executes the analysis blocks of one validated model."""

    def __init__(self, vm: ValidatedModel, options: AnalysisOptions = None):
        self.vm = vm
        self.options = options or AnalysisOptions()
        self.idx = build_state_index(vm)
        self.classes = enumerate_transition_classes(vm, self.idx)

    # -- data set production -------------------------------------------------

    def _generate_system(self, p: int) -> MomentSystem:
        if self.options.variance_method == "lna":
            if p > 2:
                raise GpaRuntimeError(
                    "linear-noise mode provides moments up to order 2; "
                    f"this analysis needs order {p}"
                )
            return generate_lna_odes(self.classes, self.idx)
        return generate_moment_odes(self.classes, self.idx, p)

    def odes_dataset(self, block: ast.OdesBlock, p: int):
        system = self._generate_system(p)
        init = initial_values(system, self.idx)
        ds = integrate_rk4(system, init, block.stop_time, block.step_size, block.density)
        return system, ds

    def simulation_dataset(self, block: ast.SimulationBlock, p: int) -> DataSet:
        moms = all_moment_indices(len(self.idx.dims), p)
        return run_simulation(
            self.classes,
            self.idx,
            block.stop_time,
            block.step_size,
            block.replications,
            moms,
            seed=self.options.seed,
            threads=self.options.threads,
        )

    # -- block execution ---------------------------------------------------------

    def run_block(self, block):
        if isinstance(block, ast.OdesBlock):
            return self.run_odes(block)
        if isinstance(block, ast.SimulationBlock):
            return self.run_simulation(block)
        return self.run_comparison(block)

    def run_odes(self, block: ast.OdesBlock, min_order: int = 1) -> OdesRun:
        p = max(required_order(block.commands), min_order)
        system, ds = self.odes_dataset(block, p)
        results = []
        for cmd in block.commands:
            if isinstance(cmd.body, ast.SwitchCmd):
                payload = switch_point_report(system, ds, cmd.body.order, self.idx)
            else:
                payload = [evaluate_expression(e, ds, self.vm, self.idx) for e in cmd.body.exprs]
            results.append(CommandResult(cmd, payload))
        return OdesRun(results, ds, system)

    def run_simulation(self, block: ast.SimulationBlock, min_order: int = 1) -> SimulationRun:
        p = max(required_order(block.commands), min_order)
        ds = self.simulation_dataset(block, p)
        results = []
        for cmd in block.commands:
            if isinstance(cmd.body, ast.SwitchCmd):
                if not self.options.sim_switchpoints:
                    raise GpaRuntimeError(
                        "plotSwitchpoints inside a simulation analysis is an extension; "
                        "enable it with --sim-switchpoints"
                    )
                system = generate_moment_odes(self.classes, self.idx, cmd.body.order)
                payload = switch_point_report(system, ds, cmd.body.order, self.idx)
            else:
                payload = [evaluate_expression(e, ds, self.vm, self.idx) for e in cmd.body.exprs]
            results.append(CommandResult(cmd, payload))
        return SimulationRun(results, ds)

    def run_comparison(self, block: ast.ComparisonBlock) -> ComparisonRun:
        p = required_order(block.commands)
        odes_run = self.run_odes(block.odes, min_order=p)
        sim_run = self.run_simulation(block.simulation, min_order=p)
        results = []
        for cmd in block.commands:
            series = []
            for e in cmd.body.exprs:
                left = evaluate_expression(e, odes_run.dataset, self.vm, self.idx)
                right = evaluate_expression(e, sim_run.dataset, self.vm, self.idx)
                series.append(EvaluatedSeries(left.label, left.values - right.values))
            results.append(CommandResult(cmd, series))
        return ComparisonRun(results, odes_run, sim_run)


def run_odes_analysis(vm: ValidatedModel, block: ast.OdesBlock, options: AnalysisOptions = None) -> OdesRun:
    return AnalysisRunner(vm, options).run_odes(block)


def run_simulation_analysis(
    vm: ValidatedModel, block: ast.SimulationBlock, options: AnalysisOptions = None
) -> SimulationRun:
    return AnalysisRunner(vm, options).run_simulation(block)


def run_comparison(
    vm: ValidatedModel, block: ast.ComparisonBlock, options: AnalysisOptions = None
) -> ComparisonRun:
    return AnalysisRunner(vm, options).run_comparison(block)
