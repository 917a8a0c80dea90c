"""Moment ODE generation.

Two generators share one container type:

* ``generate_moment_odes``: raw-moment equations up to a requested order,
  closed by pushing count monomials inside min (valid on the non-negative
  orthant) and replacing the expectation of a min by the min of expectations,
  recursively. Rational prefactors of non-split-free models are evaluated at
  the first-order unknowns.
* ``generate_lna_odes``: first-order means plus the Lyapunov-type covariance
  equations driven by the piecewise Jacobian of the drift and the diffusion
  term of the aggregated chain. Each min differentiates toward its left
  argument on ties. Covariances are integrated unnormalized (covariances of
  the counts themselves), which degree-1 homogeneity of the drift permits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from . import exprs
from .errors import GpaError, GpaRuntimeError
from .exprs import ZERO, Const, Indicator, Linear, Min, Prod, Ratio, Sum, add, minimum, mul, scale
from .language import ast
from .semantics import StateIndex


@dataclass(frozen=True)
class MomentIndex:
    """A raw moment of the counts: exponent per state dimension."""

    exps: tuple

    @property
    def order(self) -> int:
        return sum(self.exps)

    def label(self, idx: StateIndex) -> str:
        parts = []
        for d, e in enumerate(self.exps):
            if e == 1:
                parts.append(idx.label(d))
            elif e > 1:
                parts.append(f"{idx.label(d)}^{e}")
        return "E[" + " ".join(parts) + "]"


@dataclass(frozen=True)
class CovEntry:
    """A covariance unknown Cov[N_i, N_j] with i <= j."""

    i: int
    j: int

    @property
    def order(self) -> int:
        return 2

    def label(self, idx: StateIndex) -> str:
        return f"Cov[{idx.label(self.i)}, {idx.label(self.j)}]"


def unknown_order(u) -> int:
    return u.order


def mean_index(dim: int, ndims: int) -> MomentIndex:
    exps = [0] * ndims
    exps[dim] = 1
    return MomentIndex(tuple(exps))


def cov_entry(i: int, j: int) -> CovEntry:
    return CovEntry(min(i, j), max(i, j))


@dataclass(frozen=True)
class MinTerm:
    """One structurally distinct min occurrence in a generated system."""

    id: int
    left: object
    right: object
    max_order: int

    def label(self, idx: StateIndex) -> str:
        def name(u):
            return u.label(idx)

        return (
            f"min#{self.id}"
            f"({exprs.format_expr(self.left, name)}|{exprs.format_expr(self.right, name)})"
        )


@dataclass(frozen=True)
class MomentSystem:
    """A closed ODE system over moment (or mean + covariance) unknowns."""

    kind: str  # "closure" | "lna"
    unknowns: tuple
    rhs: tuple
    idx: StateIndex

    def slot_map(self) -> dict:
        return {u: i for i, u in enumerate(self.unknowns)}

    def labels(self) -> list:
        return [u.label(self.idx) for u in self.unknowns]


def all_moment_indices(ndims: int, p: int) -> list:
    """All moment indices of order 1..p, graded lexicographic (dim 0 ranks highest)."""
    out = []
    for order in range(1, p + 1):
        exps_list = []
        for combo in combinations_with_replacement(range(ndims), order):
            exps = [0] * ndims
            for d in combo:
                exps[d] += 1
            exps_list.append(tuple(exps))
        exps_list.sort(key=lambda e: tuple(-x for x in e))
        out.extend(MomentIndex(e) for e in exps_list)
    return out


def _shift_poly(exps: tuple, jump: tuple) -> dict:
    """Integer polynomial m(N + jump) - m(N) as a map from exponent tuple to coefficient."""
    ndims = len(exps)
    poly = {tuple([0] * ndims): 1}
    for dim, a in enumerate(exps):
        if a == 0:
            continue
        l = jump[dim]
        if l == 0:
            shifted = {}
            for key, c in poly.items():
                k = list(key)
                k[dim] += a
                shifted[tuple(k)] = c
            poly = shifted
            continue
        expanded = {}
        for t in range(a + 1):
            coeff = math.comb(a, t) * l ** (a - t)
            for key, c in poly.items():
                k = list(key)
                k[dim] += t
                k = tuple(k)
                expanded[k] = expanded.get(k, 0) + c * coeff
        poly = expanded
    poly[exps] = poly.get(exps, 0) - 1
    return {k: c for k, c in poly.items() if c != 0}


class _Closure:
    """Pushes count monomials through a class rate and closes expectations."""

    def __init__(self, ndims: int):
        self.ndims = ndims
        self.zero = tuple([0] * ndims)
        self._memo = {}

    def monomial(self, b: tuple):
        if b == self.zero:
            return Const(1.0)
        return exprs.var(MomentIndex(b))

    def push(self, expr, b: tuple):
        key = (expr, b)
        got = self._memo.get(key)
        if got is not None:
            return got
        out = self._push(expr, b)
        self._memo[key] = out
        return out

    def _push(self, expr, b):
        if isinstance(expr, Const):
            return scale(self.monomial(b), expr.value)
        if isinstance(expr, Linear):
            pairs = []
            for dim, c in expr.terms:
                e = list(b)
                e[dim] += 1
                pairs.append((MomentIndex(tuple(e)), c))
            return exprs.linear(pairs)
        if isinstance(expr, Sum):
            return add(*(self.push(t, b) for t in expr.terms))
        if isinstance(expr, Min):
            return minimum(self.push(expr.left, b), self.push(expr.right, b))
        if isinstance(expr, Ratio):
            closed = Ratio(self.push(expr.num, self.zero), self.push(expr.den, self.zero))
            return mul(closed, self.monomial(b))
        if isinstance(expr, Prod):
            ratios = [f for f in expr.factors if isinstance(f, Ratio)]
            cores = [f for f in expr.factors if not isinstance(f, Ratio)]
            if len(cores) > 1:
                raise GpaError("unsupported rate shape: product of non-rational factors")
            closed_ratios = [
                Ratio(self.push(r.num, self.zero), self.push(r.den, self.zero)) for r in ratios
            ]
            core = self.push(cores[0], b) if cores else self.monomial(b)
            return mul(*closed_ratios, core, coeff=expr.coeff)
        raise GpaError(f"unexpected rate node {type(expr).__name__}")

    def close0(self, expr):
        return self.push(expr, self.zero)


def generate_moment_odes(classes, idx: StateIndex, p: int) -> MomentSystem:
    """Closed raw-moment system for all moments of order 1..p."""
    if p < 1:
        raise GpaError(f"moment order must be at least 1, got {p}")
    ndims = len(idx.dims)
    closure = _Closure(ndims)
    unknowns = all_moment_indices(ndims, p)
    rhs = []
    for m in unknowns:
        terms = []
        for cls in classes:
            for b, coeff in _shift_poly(m.exps, cls.jump).items():
                terms.append(scale(closure.push(cls.rate, b), coeff))
        rhs.append(add(*terms))
    return MomentSystem("closure", tuple(unknowns), tuple(rhs), idx)


def _d_close(expr, dim: int, closure: _Closure):
    """Jacobian entry contribution d(rate)/d(count_dim), closed at the means.

    Min differentiates toward its left argument when left <= right.
    """
    if isinstance(expr, Const):
        return ZERO
    if isinstance(expr, Linear):
        for d, c in expr.terms:
            if d == dim:
                return Const(c)
        return ZERO
    if isinstance(expr, Sum):
        return add(*(_d_close(t, dim, closure) for t in expr.terms))
    if isinstance(expr, Prod):
        if not expr.factors:
            return ZERO
        if len(expr.factors) == 1:
            return scale(_d_close(expr.factors[0], dim, closure), expr.coeff)
        raise GpaError("unsupported rate shape for linear-noise mode")
    if isinstance(expr, Min):
        lc = closure.close0(expr.left)
        rc = closure.close0(expr.right)
        return add(
            mul(Indicator(lc, rc, strict=False), _d_close(expr.left, dim, closure)),
            mul(Indicator(rc, lc, strict=True), _d_close(expr.right, dim, closure)),
        )
    raise GpaRuntimeError("linear-noise mode requires a split-free model")


def generate_lna_odes(classes, idx: StateIndex) -> MomentSystem:
    """Means plus covariance unknowns driven by the piecewise Jacobian and diffusion."""
    ndims = len(idx.dims)
    closure = _Closure(ndims)
    for cls in classes:
        if _contains_ratio(cls.rate):
            raise GpaRuntimeError("linear-noise mode requires a split-free model")

    means = [mean_index(d, ndims) for d in range(ndims)]
    covs = [CovEntry(i, j) for i in range(ndims) for j in range(i, ndims)]
    closed_rates = [closure.close0(cls.rate) for cls in classes]

    mean_rhs = []
    for d in range(ndims):
        mean_rhs.append(
            add(*(scale(closed_rates[k], cls.jump[d]) for k, cls in enumerate(classes) if cls.jump[d]))
        )

    jac = [[None] * ndims for _ in range(ndims)]
    for a in range(ndims):
        for j in range(ndims):
            jac[a][j] = add(
                *(
                    scale(_d_close(cls.rate, j, closure), cls.jump[a])
                    for cls in classes
                    if cls.jump[a]
                )
            )

    cov_rhs = []
    for entry in covs:
        a, b = entry.i, entry.j
        terms = []
        for j in range(ndims):
            if jac[a][j] != ZERO:
                terms.append(mul(jac[a][j], exprs.var(cov_entry(j, b))))
            if jac[b][j] != ZERO:
                terms.append(mul(jac[b][j], exprs.var(cov_entry(a, j))))
        diffusion = add(
            *(
                scale(closed_rates[k], cls.jump[a] * cls.jump[b])
                for k, cls in enumerate(classes)
                if cls.jump[a] and cls.jump[b]
            )
        )
        terms.append(diffusion)
        cov_rhs.append(add(*terms))

    return MomentSystem("lna", tuple(means) + tuple(covs), tuple(mean_rhs) + tuple(cov_rhs), idx)


def _contains_ratio(expr) -> bool:
    if isinstance(expr, Ratio):
        return True
    if isinstance(expr, Sum):
        return any(_contains_ratio(t) for t in expr.terms)
    if isinstance(expr, Prod):
        return any(_contains_ratio(f) for f in expr.factors)
    if isinstance(expr, Min):
        return _contains_ratio(expr.left) or _contains_ratio(expr.right)
    return False


def collect_min_terms(system: MomentSystem, max_order: int) -> list:
    """Structurally distinct Min nodes whose arguments only involve unknowns of order <= max_order."""
    seen = []
    seen_set = set()
    for expr in system.rhs:
        for node in exprs.min_nodes(expr):
            if node in seen_set:
                continue
            seen_set.add(node)
            seen.append(node)
    out = []
    for node in seen:
        keys = exprs.variables(node.left) | exprs.variables(node.right)
        order = max((unknown_order(k) for k in keys), default=1)
        if order <= max_order:
            out.append(MinTerm(len(out) + 1, node.left, node.right, order))
    return out


def _expr_order(e) -> int:
    if isinstance(e, ast.MExpect):
        return max(sum(exp for _, exp in mono) for mono in e.monomials)
    if isinstance(e, (ast.MVarOf, ast.MCovOf)):
        return 2
    if isinstance(e, ast.MCentral):
        return max(e.order, 2) if e.standardised else e.order
    if isinstance(e, ast.MBin):
        return max(_expr_order(e.left), _expr_order(e.right))
    return 0


def required_order(commands) -> int:
    """Highest moment order any command in an analysis block needs."""
    p = 1
    for cmd in commands:
        if isinstance(cmd.body, ast.SwitchCmd):
            p = max(p, cmd.body.order)
        else:
            for e in cmd.body.exprs:
                p = max(p, _expr_order(e))
    return p


def initial_values(system: MomentSystem, idx: StateIndex) -> np.ndarray:
    """Deterministic-start initial condition: products of initial counts; zero covariances."""
    n0 = idx.initial
    out = np.empty(len(system.unknowns))
    for i, u in enumerate(system.unknowns):
        if isinstance(u, CovEntry):
            out[i] = 0.0
        else:
            v = 1.0
            for d, e in enumerate(u.exps):
                if e:
                    v *= float(n0[d]) ** e
            out[i] = v
    return out


def compile_rhs(system: MomentSystem):
    """Tape-compiled derivative function: f(y) -> list of floats."""
    tape = exprs.Tape(system.rhs, system.slot_map())
    n = len(system.unknowns)

    def rhs(y, out=None):
        if out is None:
            out = [0.0] * n
        return tape(y, out)

    return rhs


def format_system(system: MomentSystem) -> str:
    """Dump, one ``d/dt <unknown> = <expr>`` line per unknown."""
    labels = {u: u.label(system.idx) for u in system.unknowns}
    lines = []
    for u, expr in zip(system.unknowns, system.rhs):
        lines.append(f"d/dt {labels[u]} = {exprs.format_expr(expr, lambda k: labels[k])}")
    return "\n".join(lines)
