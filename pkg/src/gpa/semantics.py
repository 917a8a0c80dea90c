"""Aggregated counting semantics for validated models.

The grouped system is abstracted to a vector of per-derivative counts. This
module derives the full set of aggregated transition classes: for each class a
jump vector over the count dimensions and a symbolic rate over the counts.
Synchronised actions proceed at the minimum of the cooperating sides' apparent
rates (bounded capacity); when a side offers an action through several
distinct local transitions, the combined class rate carries the flux fraction
of each contribution as a Ratio factor, and the model is no longer split-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exprs
from .errors import GpaError
from .exprs import ZERO, Const, Linear, Min, Prod, Ratio, Sum, add, linear, minimum, mul, scale
from .language.validate import ResolvedGroup, ValidatedModel


@dataclass(frozen=True)
class StateIndex:
    """Bijection between (group, derivative) pairs and count-vector dimensions."""

    dims: tuple  # ((group label, derivative key), ...)
    initial: tuple  # ints, one per dim
    total_population: int

    def dim_of(self, group: str, key: str) -> int:
        return self.dims.index((group, key))

    def label(self, dim: int) -> str:
        group, key = self.dims[dim]
        return f"{group}:{key}"

    def __len__(self):
        return len(self.dims)


@dataclass(frozen=True)
class TransitionClass:
    action: str
    jump: tuple  # ints, one per dim
    rate: object  # expression over dims


@dataclass(frozen=True)
class VectorField:
    """Per-dimension net rate expressions: increment rate minus decrement rate."""

    rows: tuple

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return np.array([exprs.evaluate(row, v) for row in self.rows])


def explore_derivatives(local_states: dict, start: str) -> dict:
    """Transitive closure of derivative states from ``start``; insertion order is discovery order."""
    out = {}
    frontier = [start]
    while frontier:
        key = frontier.pop(0)
        if key in out:
            continue
        transitions = local_states[key]
        out[key] = transitions
        for tr in transitions:
            if tr.target not in out:
                frontier.append(tr.target)
    return out


def build_state_index(vm: ValidatedModel) -> StateIndex:
    """Count dimensions in group declaration order, derivatives in breadth-first discovery order."""
    dims = []
    initial = []
    for label in vm.group_order:
        members = vm.group_members[label]
        counts = dict(members)
        discovered = {}
        frontier = [key for key, _ in members]
        while frontier:
            key = frontier.pop(0)
            if key in discovered:
                continue
            discovered[key] = True
            for tr in vm.local_states[key]:
                if tr.target not in discovered:
                    frontier.append(tr.target)
        for key in discovered:
            dims.append((label, key))
            initial.append(counts.get(key, 0))
    return StateIndex(tuple(dims), tuple(initial), int(sum(initial)))


def _enabled_rate(transitions, action: str) -> float:
    return sum(tr.rate for tr in transitions if tr.action == action)


def apparent_rate(vm: ValidatedModel, node, action: str, idx: StateIndex):
    """Total symbolic rate at which ``node`` offers ``action``.

    Groups contribute the count-weighted sum of their derivatives' enabled
    rates; cooperation takes the minimum over a shared action and the sum
    otherwise. Returns Const(0) when the action is nowhere enabled.
    """
    if isinstance(node, ResolvedGroup):
        pairs = []
        for group, key in idx.dims:
            if group != node.label:
                continue
            r = _enabled_rate(vm.local_states[key], action)
            if r > 0:
                pairs.append((idx.dim_of(group, key), r))
        return linear(pairs)
    left = apparent_rate(vm, node.left, action, idx)
    right = apparent_rate(vm, node.right, action, idx)
    if action in node.actions:
        if left == ZERO or right == ZERO:
            return ZERO
        return minimum(left, right)
    if left == ZERO:
        return right
    if right == ZERO:
        return left
    return add(left, right)


def _ordered_partials(vm, node, idx):
    """All transition classes below ``node`` as (action, jump dict, flux expr) triples.

    Order: for a cooperation node, synchronised actions first in declaration
    order (left-major pairing), then the left side's independent classes, then
    the right side's. For a group, derivatives in index order and prefixes in
    textual order.
    """
    if isinstance(node, ResolvedGroup):
        out = []
        for group, key in idx.dims:
            if group != node.label:
                continue
            src = idx.dim_of(group, key)
            for tr in vm.local_states[key]:
                jump = {}
                if tr.target != key:
                    dst = idx.dim_of(group, tr.target)
                    jump = {src: -1, dst: +1}
                out.append((tr.action, jump, linear([(src, tr.rate)])))
        return out

    left = _ordered_partials(vm, node.left, idx)
    right = _ordered_partials(vm, node.right, idx)
    out = []
    for action in node.actions:
        lparts = [p for p in left if p[0] == action]
        rparts = [p for p in right if p[0] == action]
        if not lparts or not rparts:
            continue
        al = apparent_rate(vm, node.left, action, idx)
        ar = apparent_rate(vm, node.right, action, idx)
        core = minimum(al, ar)
        for _, ljump, lflux in lparts:
            for _, rjump, rflux in rparts:
                factors = []
                if lflux != al:
                    factors.append(Ratio(lflux, al))
                if rflux != ar:
                    factors.append(Ratio(rflux, ar))
                jump = dict(ljump)
                for d, delta in rjump.items():
                    jump[d] = jump.get(d, 0) + delta
                out.append((action, jump, mul(*factors, core)))
    for action, jump, flux in left:
        if action not in node.actions:
            out.append((action, jump, flux))
    for action, jump, flux in right:
        if action not in node.actions:
            out.append((action, jump, flux))
    return out


def enumerate_transition_classes(vm: ValidatedModel, idx: StateIndex) -> tuple:
    """One TransitionClass per aggregated transition of the underlying chain."""
    classes = []
    for action, jump, flux in _ordered_partials(vm, vm.system, idx):
        vec = [0] * len(idx.dims)
        for d, delta in jump.items():
            vec[d] = delta
        classes.append(TransitionClass(action, tuple(vec), flux))
    return tuple(classes)


def _has_ratio(expr) -> bool:
    if isinstance(expr, Ratio):
        return True
    if isinstance(expr, (Const, Linear)):
        return False
    if isinstance(expr, Sum):
        return any(_has_ratio(t) for t in expr.terms)
    if isinstance(expr, Prod):
        return any(_has_ratio(f) for f in expr.factors)
    if isinstance(expr, Min):
        return _has_ratio(expr.left) or _has_ratio(expr.right)
    raise GpaError(f"unexpected rate node {type(expr).__name__}")


def is_split_free(vm: ValidatedModel, classes=None, idx=None) -> bool:
    """True iff no aggregated class rate needs a rational prefactor."""
    if classes is None:
        idx = idx or build_state_index(vm)
        classes = enumerate_transition_classes(vm, idx)
    return not any(_has_ratio(c.rate) for c in classes)


def build_vector_field(classes, idx: StateIndex) -> VectorField:
    """Net drift of the counts: sum of jump * rate over classes, like terms merged."""
    rows = []
    for i in range(len(idx.dims)):
        rows.append(add(*(scale(c.rate, c.jump[i]) for c in classes if c.jump[i] != 0)))
    return VectorField(tuple(rows))


def format_rate(expr, idx: StateIndex) -> str:
    return exprs.format_expr(expr, lambda d: idx.label(d))


def format_classes(classes, idx: StateIndex) -> str:
    """Debug dump, one line per class: ``k: action l=[...] rate=<expr>``."""
    lines = []
    for k, c in enumerate(classes, start=1):
        lines.append(f"{k}: {c.action} l=[{', '.join(str(j) for j in c.jump)}] rate={format_rate(c.rate, idx)}")
    return "\n".join(lines)
