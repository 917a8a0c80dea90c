"""Gillespie simulation of the aggregated chain with replication averaging.

Class rates are compiled to a small stack-machine program so the jump loop can
be JIT-compiled with numba when available (set GPA_NO_NUMBA=1 to force the
pure-Python interpreter; semantics are identical, only speed differs).

Randomness: replication ``r`` draws from the counter-based Philox generator
keyed by SeedSequence((master_seed, r)), so every replication is an
independent, reproducible substream regardless of how work is scheduled.
Each jump consumes exactly two uniforms: waiting time and class selection.
Grid samples take the value after the last jump at or before the grid time
(right-continuous paths); an absorbing state holds its value to the end.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from . import exprs
from .errors import GpaError, GpaRuntimeError
from .exprs import Const, Linear, Min, Prod, Ratio, Sum
from .numerics import DataSet, build_grid
from .semantics import StateIndex

_BUF = 65536  # uniforms drawn per refill

_OP_CONST = 0
_OP_LIN = 1
_OP_MIN = 2
_OP_ADD = 3
_OP_MUL = 4
_OP_DIV0 = 5
_OP_STORE = 6


def _kernel(counts, grid, out, rand, rc, code, consts, lin_ptr, lin_dim, lin_coef, jumps, props, stack, t, gi):
    """Advance one replication; returns (t, gi, rc, status).

    status 0: all grid points recorded; 1: random buffer exhausted, refill and
    re-enter; 2: negative propensity (internal invariant violation).
    """
    G = grid.shape[0]
    K = props.shape[0]
    ndim = counts.shape[0]
    ncode = code.shape[0]
    while gi < G:
        sp = 0
        i = 0
        while i < ncode:
            op = code[i]
            arg = code[i + 1]
            i += 2
            if op == _OP_LIN:
                s = 0.0
                for j in range(lin_ptr[arg], lin_ptr[arg + 1]):
                    s += lin_coef[j] * counts[lin_dim[j]]
                stack[sp] = s
                sp += 1
            elif op == _OP_CONST:
                stack[sp] = consts[arg]
                sp += 1
            elif op == _OP_MIN:
                b = stack[sp - 1]
                a = stack[sp - 2]
                sp -= 1
                stack[sp - 1] = a if a < b else b
            elif op == _OP_ADD:
                stack[sp - 2] = stack[sp - 2] + stack[sp - 1]
                sp -= 1
            elif op == _OP_MUL:
                stack[sp - 2] = stack[sp - 2] * stack[sp - 1]
                sp -= 1
            elif op == _OP_DIV0:
                d = stack[sp - 1]
                sp -= 1
                stack[sp - 1] = stack[sp - 1] / d if d != 0.0 else 0.0
            else:  # _OP_STORE
                sp -= 1
                props[arg] = stack[sp]
        total = 0.0
        for k in range(K):
            if props[k] < 0.0:
                return t, gi, rc, 2
            total += props[k]
        if total <= 0.0:
            for j in range(gi, G):
                for d in range(ndim):
                    out[j, d] = counts[d]
            gi = G
            break
        if rc + 2 > rand.shape[0]:
            return t, gi, rc, 1
        u1 = rand[rc]
        u2 = rand[rc + 1]
        rc += 2
        tn = t - np.log1p(-u1) / total
        while gi < G and grid[gi] < tn:
            for d in range(ndim):
                out[gi, d] = counts[d]
            gi += 1
        t = tn
        if gi >= G:
            break
        target = u2 * total
        acc = 0.0
        chosen = -1
        for k in range(K):
            acc += props[k]
            if props[k] > 0.0 and target <= acc:
                chosen = k
                break
        if chosen < 0:
            for k in range(K - 1, -1, -1):
                if props[k] > 0.0:
                    chosen = k
                    break
        for d in range(ndim):
            counts[d] += jumps[chosen, d]
    return t, gi, rc, 0


if os.environ.get("GPA_NO_NUMBA"):
    _jitted = _kernel
else:
    try:
        from numba import njit

        _jitted = njit(cache=True, nogil=True)(_kernel)
    except ImportError:  # pragma: no cover
        _jitted = _kernel


@dataclass(frozen=True)
class _Program:
    code: np.ndarray
    consts: np.ndarray
    lin_ptr: np.ndarray
    lin_dim: np.ndarray
    lin_coef: np.ndarray
    jumps: np.ndarray
    nclasses: int


def _compile_rate(expr, emit, consts, linrows):
    if isinstance(expr, Const):
        emit(_OP_CONST, len(consts))
        consts.append(float(expr.value))
    elif isinstance(expr, Linear):
        emit(_OP_LIN, len(linrows))
        linrows.append(tuple(expr.terms))
    elif isinstance(expr, Sum):
        _compile_rate(expr.terms[0], emit, consts, linrows)
        for term in expr.terms[1:]:
            _compile_rate(term, emit, consts, linrows)
            emit(_OP_ADD, 0)
    elif isinstance(expr, Prod):
        emit(_OP_CONST, len(consts))
        consts.append(float(expr.coeff))
        for f in expr.factors:
            _compile_rate(f, emit, consts, linrows)
            emit(_OP_MUL, 0)
    elif isinstance(expr, Min):
        _compile_rate(expr.left, emit, consts, linrows)
        _compile_rate(expr.right, emit, consts, linrows)
        emit(_OP_MIN, 0)
    elif isinstance(expr, Ratio):
        _compile_rate(expr.num, emit, consts, linrows)
        _compile_rate(expr.den, emit, consts, linrows)
        emit(_OP_DIV0, 0)
    else:
        raise GpaError(f"unexpected rate node {type(expr).__name__}")


_program_cache: dict = {}


def compile_classes(classes, idx: StateIndex) -> _Program:
    """Stack-machine program computing every class propensity at an integer state."""
    key = (classes, idx.dims)
    got = _program_cache.get(key)
    if got is not None:
        return got
    code: list[int] = []
    consts: list[float] = []
    linrows: list[tuple] = []

    def emit(op, arg):
        code.extend((op, arg))

    for k, cls in enumerate(classes):
        _compile_rate(cls.rate, emit, consts, linrows)
        emit(_OP_STORE, k)

    lin_ptr = [0]
    lin_dim: list[int] = []
    lin_coef: list[float] = []
    for row in linrows:
        for dim, c in row:
            lin_dim.append(dim)
            lin_coef.append(float(c))
        lin_ptr.append(len(lin_dim))

    prog = _Program(
        code=np.asarray(code, dtype=np.int32),
        consts=np.asarray(consts, dtype=np.float64),
        lin_ptr=np.asarray(lin_ptr, dtype=np.int32),
        lin_dim=np.asarray(lin_dim, dtype=np.int32),
        lin_coef=np.asarray(lin_coef, dtype=np.float64),
        jumps=np.asarray([cls.jump for cls in classes], dtype=np.int64),
        nclasses=len(classes),
    )
    _program_cache[key] = prog
    return prog


def propensities(classes, idx: StateIndex, counts) -> np.ndarray:
    """Evaluate every class rate at one integer state (exact min/ratio semantics)."""
    env = np.asarray(counts, dtype=np.float64)
    return np.array([float(exprs.evaluate(c.rate, env)) for c in classes])


def simulate_replication(classes, idx: StateIndex, init, grid, rng: Generator) -> np.ndarray:
    """One exact path sampled on ``grid``; returns integer counts, shape (len(grid), ndims)."""
    prog = compile_classes(classes, idx)
    counts = np.asarray(init, dtype=np.int64).copy()
    if (counts < 0).any():
        raise GpaError("initial counts must be non-negative")
    out = np.empty((len(grid), len(counts)), dtype=np.int64)
    props = np.zeros(prog.nclasses)
    stack = np.zeros(64)
    rand = rng.random(_BUF)
    t = 0.0
    gi = 0
    rc = 0
    while True:
        t, gi, rc, status = _jitted(
            counts, grid, out, rand, rc, prog.code, prog.consts,
            prog.lin_ptr, prog.lin_dim, prog.lin_coef, prog.jumps, props, stack, t, gi,
        )
        if status == 0:
            return out
        if status == 2:
            raise GpaRuntimeError("negative propensity encountered during simulation")
        rand = rng.random(_BUF)
        rc = 0


def replication_stream(seed: int, replication: int) -> Generator:
    """The documented substream for one replication: Philox keyed by (seed, replication)."""
    return Generator(Philox(SeedSequence((seed, replication))))


class MomentAccumulator:
    """Running sums of count monomials per grid point, over replications."""

    def __init__(self, moments, ndims: int, npoints: int):
        self.moments = list(moments)
        self.ndims = ndims
        self.sums = np.zeros((npoints, len(self.moments)))
        self.count = 0

    def add_path(self, counts: np.ndarray):
        cf = counts.astype(np.float64)
        for c, m in enumerate(self.moments):
            col = np.ones(cf.shape[0])
            for d, e in enumerate(m.exps):
                if e == 1:
                    col *= cf[:, d]
                elif e > 1:
                    col *= cf[:, d] ** e
            self.sums[:, c] += col
        self.count += 1

    def columns(self) -> dict:
        return {m: self.sums[:, c] / self.count for c, m in enumerate(self.moments)}


def run_simulation(
    classes,
    idx: StateIndex,
    stop_time: float,
    step_size: float,
    replications: int,
    moments,
    seed: int = 0,
    threads: int = 1,
) -> DataSet:
    """Replication-averaged raw-moment estimates on the output grid.

    Accumulation happens in replication order whatever the thread count, so a
    fixed seed gives bit-identical results.
    """
    if replications < 1:
        raise GpaError(f"replications must be at least 1, got {replications}")
    grid = build_grid(stop_time, step_size)
    init = np.asarray(idx.initial, dtype=np.int64)
    acc = MomentAccumulator(moments, len(idx.dims), len(grid))

    def one(rep: int) -> np.ndarray:
        return simulate_replication(classes, idx, init, grid, replication_stream(seed, rep))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for path in pool.map(one, range(replications)):
                acc.add_path(path)
    else:
        for rep in range(replications):
            acc.add_path(one(rep))

    return DataSet(
        grid=grid,
        columns=acc.columns(),
        kind="simulation",
        meta={
            "stopTime": stop_time,
            "stepSize": step_size,
            "replications": replications,
            "seed": seed,
        },
    )
