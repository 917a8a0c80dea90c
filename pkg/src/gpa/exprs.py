"""Symbolic expression trees shared by the rate and moment-ODE layers.

One node vocabulary serves two variable spaces: transition rates are
expressions over state-vector dimensions (integer keys), generated moment
ODEs are expressions over moment unknowns (MomentIndex / CovEntry keys).
Keys only need to be hashable and orderable by the caller's conventions.

Node семantics:
  Const(c)                constant
  Linear(terms)           sum of coeff * variable, no constant part
  Sum(terms)              n-ary sum
  Prod(coeff, factors)    scalar coefficient times a product of factors
  Min(left, right)        pointwise minimum; argument order is meaningful
  Ratio(num, den)         quotient with the convention value 0 when den == 0
  Indicator(l, r, strict) 1 when l < r (strict) or l <= r (non-strict), else 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Linear:
    # ((key, coeff), ...), keys unique, coeffs nonzero
    terms: tuple


@dataclass(frozen=True)
class Sum:
    terms: tuple


@dataclass(frozen=True)
class Prod:
    coeff: float
    factors: tuple


@dataclass(frozen=True)
class Min:
    left: object
    right: object


@dataclass(frozen=True)
class Ratio:
    num: object
    den: object


@dataclass(frozen=True)
class Indicator:
    left: object
    right: object
    strict: bool = False


ZERO = Const(0.0)
ONE = Const(1.0)


def var(key):
    return Linear(((key, 1.0),))


def linear(pairs):
    """Build a Linear from (key, coeff) pairs, merging duplicates and dropping zeros."""
    acc = {}
    for key, c in pairs:
        acc[key] = acc.get(key, 0.0) + c
    acc = {k: c for k, c in acc.items() if c != 0.0}
    if not acc:
        return ZERO
    return Linear(tuple(acc.items()))


def scale(expr, c):
    """Multiply an expression by a scalar."""
    if c == 0.0:
        return ZERO
    if c == 1.0:
        return expr
    if isinstance(expr, Const):
        return Const(expr.value * c)
    if isinstance(expr, Linear):
        return Linear(tuple((k, v * c) for k, v in expr.terms))
    if isinstance(expr, Prod):
        return Prod(expr.coeff * c, expr.factors)
    if isinstance(expr, Sum):
        return add(*(scale(t, c) for t in expr.terms))
    return Prod(c, (expr,))


def mul(*factors, coeff=1.0):
    """Product of expressions; constants fold into the coefficient, nested Prods flatten."""
    flat = []
    c = coeff
    for f in factors:
        if isinstance(f, Const):
            c *= f.value
        elif isinstance(f, Prod):
            c *= f.coeff
            flat.extend(f.factors)
        else:
            flat.append(f)
    if c == 0.0:
        return ZERO
    if not flat:
        return Const(c)
    if len(flat) == 1:
        return scale(flat[0], c)
    return Prod(c, tuple(flat))


def _split_term(expr):
    """Decompose into (coeff, atom) with atom carrying no leading scalar."""
    if isinstance(expr, Prod):
        if len(expr.factors) == 1:
            return expr.coeff, expr.factors[0]
        return expr.coeff, Prod(1.0, expr.factors)
    return 1.0, expr


def add(*terms):
    """n-ary sum with flattening, constant folding, Linear merging and like-term merging."""
    const = 0.0
    lin = {}
    atoms = {}  # atom -> coeff, insertion-ordered
    stack = list(terms)
    for t in stack:
        if isinstance(t, Sum):
            stack.extend(t.terms)
            continue
        if isinstance(t, Const):
            const += t.value
        elif isinstance(t, Linear):
            for k, c in t.terms:
                lin[k] = lin.get(k, 0.0) + c
        else:
            c, atom = _split_term(t)
            atoms[atom] = atoms.get(atom, 0.0) + c
    out = []
    lin = {k: c for k, c in lin.items() if c != 0.0}
    if lin:
        out.append(Linear(tuple(lin.items())))
    for atom, c in atoms.items():
        if c != 0.0:
            out.append(scale(atom, c))
    if const != 0.0 or not out:
        out.insert(0, Const(const))
    if len(out) == 1:
        return out[0]
    return Sum(tuple(out))


def minimum(left, right):
    return Min(left, right)


def ratio(num, den):
    return Ratio(num, den)


def evaluate(expr, env):
    """Evaluate with variables drawn from ``env`` (mapping key -> float or ndarray).

    Works elementwise on numpy arrays, so a whole time series can be evaluated
    in one call. Ratio uses the 0-denominator convention.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Linear):
        return sum(c * env[k] for k, c in expr.terms)
    if isinstance(expr, Sum):
        return sum(evaluate(t, env) for t in expr.terms)
    if isinstance(expr, Prod):
        out = expr.coeff
        for f in expr.factors:
            out = out * evaluate(f, env)
        return out
    if isinstance(expr, Min):
        return np.minimum(evaluate(expr.left, env), evaluate(expr.right, env))
    if isinstance(expr, Ratio):
        num = evaluate(expr.num, env)
        den = evaluate(expr.den, env)
        if np.isscalar(den) or getattr(den, "ndim", 0) == 0:
            return num / den if den != 0.0 else den * 0.0
        out = np.divide(num, den, out=np.zeros_like(np.broadcast_to(num + den, np.shape(den)).astype(float)), where=den != 0.0)
        return out
    if isinstance(expr, Indicator):
        lv = evaluate(expr.left, env)
        rv = evaluate(expr.right, env)
        cond = lv < rv if expr.strict else lv <= rv
        return np.where(cond, 1.0, 0.0)
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def variables(expr, out=None):
    """Set of variable keys appearing in an expression."""
    if out is None:
        out = set()
    if isinstance(expr, Linear):
        out.update(k for k, _ in expr.terms)
    elif isinstance(expr, Sum):
        for t in expr.terms:
            variables(t, out)
    elif isinstance(expr, Prod):
        for f in expr.factors:
            variables(f, out)
    elif isinstance(expr, Min):
        variables(expr.left, out)
        variables(expr.right, out)
    elif isinstance(expr, Ratio):
        variables(expr.num, out)
        variables(expr.den, out)
    elif isinstance(expr, Indicator):
        variables(expr.left, out)
        variables(expr.right, out)
    return out


def min_nodes(expr, out=None, seen=None):
    """All structurally distinct Min nodes, in first-appearance order (outer before inner)."""
    if out is None:
        out = []
        seen = set()
    if isinstance(expr, Min):
        if expr not in seen:
            seen.add(expr)
            out.append(expr)
        min_nodes(expr.left, out, seen)
        min_nodes(expr.right, out, seen)
    elif isinstance(expr, Sum):
        for t in expr.terms:
            min_nodes(t, out, seen)
    elif isinstance(expr, Prod):
        for f in expr.factors:
            min_nodes(f, out, seen)
    elif isinstance(expr, Ratio):
        min_nodes(expr.num, out, seen)
        min_nodes(expr.den, out, seen)
    elif isinstance(expr, Indicator):
        min_nodes(expr.left, out, seen)
        min_nodes(expr.right, out, seen)
    return out


def format_expr(expr, label, coeff_fmt="%.12g"):
    """Readable min/linear notation; ``label`` maps a variable key to its display name."""

    def fc(c):
        return coeff_fmt % c

    def term(c, s):
        if c == 1.0:
            return s
        if c == -1.0:
            return "-" + s
        return f"{fc(c)}*{s}"

    def go(e, parent_sum=False):
        if isinstance(e, Const):
            return fc(e.value)
        if isinstance(e, Linear):
            parts = [term(c, label(k)) for k, c in e.terms]
            s = " + ".join(parts).replace("+ -", "- ")
            if len(parts) > 1 and not parent_sum:
                return f"({s})"
            return s
        if isinstance(e, Sum):
            parts = [go(t, parent_sum=True) for t in e.terms]
            s = " + ".join(parts).replace("+ -", "- ")
            if not parent_sum:
                return f"({s})"
            return s
        if isinstance(e, Prod):
            body = "*".join(go(f) for f in e.factors)
            if e.coeff == 1.0:
                return body
            if e.coeff == -1.0:
                return f"-{body}"
            return f"{fc(e.coeff)}*{body}"
        if isinstance(e, Min):
            return f"min({go(e.left, parent_sum=True)}, {go(e.right, parent_sum=True)})"
        if isinstance(e, Ratio):
            return f"({go(e.num, parent_sum=True)})/({go(e.den, parent_sum=True)})"
        if isinstance(e, Indicator):
            op = "<" if e.strict else "<="
            return f"[{go(e.left, parent_sum=True)} {op} {go(e.right, parent_sum=True)}]"
        raise TypeError(type(e).__name__)

    return go(expr, parent_sum=True)


# --- compiled scalar evaluation ------------------------------------------------
#
# RK4 evaluates right-hand sides tens of thousands of times; a flat tape over a
# shared-subexpression DAG avoids re-walking the trees. Opcodes carry python
# floats, not numpy scalars.

_OP_CONST = 0
_OP_LIN = 1
_OP_SUM = 2
_OP_PROD = 3
_OP_MIN = 4
_OP_RATIO = 5
_OP_IND = 6


class Tape:
    """Compiled evaluator for a list of expressions over a fixed variable ordering."""

    def __init__(self, exprs, key_slot):
        self._instr = []
        self._memo = {}
        self._nslots = 0
        self._key_slot = key_slot
        self.out_slots = [self._compile(e) for e in exprs]

    def _new_slot(self):
        s = self._nslots
        self._nslots += 1
        return s

    def _compile(self, e):
        got = self._memo.get(e)
        if got is not None:
            return got
        if isinstance(e, Const):
            slot = self._new_slot()
            self._instr.append((_OP_CONST, slot, float(e.value), None))
        elif isinstance(e, Linear):
            slot = self._new_slot()
            pairs = tuple((self._key_slot[k], float(c)) for k, c in e.terms)
            self._instr.append((_OP_LIN, slot, None, pairs))
        elif isinstance(e, Sum):
            args = tuple(self._compile(t) for t in e.terms)
            slot = self._new_slot()
            self._instr.append((_OP_SUM, slot, None, args))
        elif isinstance(e, Prod):
            args = tuple(self._compile(f) for f in e.factors)
            slot = self._new_slot()
            self._instr.append((_OP_PROD, slot, float(e.coeff), args))
        elif isinstance(e, Min):
            a = self._compile(e.left)
            b = self._compile(e.right)
            slot = self._new_slot()
            self._instr.append((_OP_MIN, slot, None, (a, b)))
        elif isinstance(e, Ratio):
            a = self._compile(e.num)
            b = self._compile(e.den)
            slot = self._new_slot()
            self._instr.append((_OP_RATIO, slot, None, (a, b)))
        elif isinstance(e, Indicator):
            a = self._compile(e.left)
            b = self._compile(e.right)
            slot = self._new_slot()
            self._instr.append((_OP_IND, slot, e.strict, (a, b)))
        else:
            raise TypeError(type(e).__name__)
        self._memo[e] = slot
        return slot

    def __call__(self, y, out):
        """Evaluate into ``out`` (list of floats); ``y`` indexable by variable slot."""
        vals = [0.0] * self._nslots
        for op, slot, aux, args in self._instr:
            if op == _OP_LIN:
                s = 0.0
                for ks, c in args:
                    s += c * y[ks]
                vals[slot] = s
            elif op == _OP_SUM:
                s = 0.0
                for a in args:
                    s += vals[a]
                vals[slot] = s
            elif op == _OP_PROD:
                s = aux
                for a in args:
                    s *= vals[a]
                vals[slot] = s
            elif op == _OP_MIN:
                a, b = args
                va = vals[a]
                vb = vals[b]
                vals[slot] = va if va < vb else vb
            elif op == _OP_CONST:
                vals[slot] = aux
            elif op == _OP_RATIO:
                a, b = args
                d = vals[b]
                vals[slot] = vals[a] / d if d != 0.0 else 0.0
            else:  # _OP_IND
                a, b = args
                if aux:  # strict
                    vals[slot] = 1.0 if vals[a] < vals[b] else 0.0
                else:
                    vals[slot] = 1.0 if vals[a] <= vals[b] else 0.0
        for i, slot in enumerate(self.out_slots):
            out[i] = vals[slot]
        return out
