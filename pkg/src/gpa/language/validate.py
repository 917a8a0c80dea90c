"""Static validation: name resolution, parameter substitution, analysis checks.

Produces a ValidatedModel in which every sequential component is lowered to a
flat table of derivative states with numeric rates. Anonymous summations that
appear as prefix continuations become derivative states keyed by their printed
form; the deadlock continuation is the shared state key ``stop``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import GpaValidationError
from . import ast, printer

STOP_KEY = "stop"

MULTIPLICITY_TOL = 1e-9

_IN_PROGRESS = object()  # placeholder while a definition is being lowered


@dataclass(frozen=True)
class LocalTransition:
    action: str
    rate: float
    target: str


@dataclass(frozen=True)
class ResolvedGroup:
    label: str
    members: tuple  # ((derivative key, count), ...) counts are non-negative ints


@dataclass(frozen=True)
class ResolvedCoop:
    left: object
    right: object
    actions: tuple


@dataclass(frozen=True)
class ValidatedModel:
    params: dict
    local_states: dict  # derivative key -> tuple[LocalTransition, ...]
    system: object  # ResolvedCoop | ResolvedGroup
    group_order: tuple  # labels, left to right in the system equation
    group_members: dict  # label -> ((key, count), ...)
    reachable: dict  # label -> frozenset of derivative keys
    analyses: tuple  # validated AST analysis blocks
    source: ast.ModelFile


def _err(msg, node=None):
    pos = getattr(node, "pos", None)
    raise GpaValidationError(msg, pos.line if pos else None, pos.col if pos else None)


class _Validator:
    def __init__(self, mf: ast.ModelFile):
        self.mf = mf
        self.params = mf.parameter_map()
        self.defs = mf.component_map()
        self.states: dict[str, tuple] = {}
        self.aliases: dict[str, str] = {}

    def resolve_amount(self, a: ast.Amount, what: str) -> float:
        if a.param is not None:
            if a.param not in self.params:
                _err(f"undefined parameter '{a.param}' used as {what}", a)
            return self.params[a.param]
        return a.value

    # -- sequential components ------------------------------------------------

    def _forbid_coop(self, body, defn):
        if isinstance(body, ast.SeqCoop):
            _err("cooperation is not supported inside component definitions", body)
        if isinstance(body, ast.Summation):
            for b in body.branches:
                if isinstance(b.target, ast.Summation):
                    self._forbid_coop(b.target, defn)

    def lower_component(self, name: str) -> str:
        """Resolve a named component to its derivative key, registering its transitions.

        Recursion through prefixes is guarded and expected; only alias chains
        (``A = B;``) may not be circular.
        """
        if name == STOP_KEY:
            self.states.setdefault(STOP_KEY, ())
            return STOP_KEY
        if name not in self.defs:
            _err(f"undefined component {name}")
        if name in self.states:
            return name
        self.states[name] = _IN_PROGRESS
        body = self.defs[name]
        self._forbid_coop(body, name)
        if isinstance(body, ast.NameRef):
            if body.name not in self.defs:
                _err(f"undefined component {body.name}", body)
            # alias: shares the target's transitions, resolved after all
            # definitions are lowered (the target may still be in progress)
            self.aliases[name] = body.name
            self.lower_component(body.name)
        else:
            self.states[name] = self.lower_summation(body)
        return name

    def resolve_aliases(self):
        for name in self.aliases:
            chain = [name]
            target = self.aliases[name]
            while target in self.aliases:
                if target in chain:
                    _err(f"circular component definition '{name}'", self.defs[name])
                chain.append(target)
                target = self.aliases[target]
            transitions = self.states[target]
            for key in chain:
                self.states[key] = transitions

    def lower_summation(self, s: ast.Summation) -> tuple:
        branches = []
        for p in s.branches:
            rate = self.resolve_amount(p.rate, f"the rate of action '{p.action}'")
            if rate <= 0:
                _err(f"rate of action '{p.action}' must be positive, got {rate!r}", p)
            branches.append(LocalTransition(p.action, rate, self.lower_continuation(p.target)))
        return tuple(branches)

    def lower_continuation(self, c) -> str:
        if isinstance(c, ast.Stop):
            self.states.setdefault(STOP_KEY, ())
            return STOP_KEY
        if isinstance(c, ast.NameRef):
            if c.name != STOP_KEY and c.name not in self.defs:
                _err(f"undefined component {c.name}", c)
            return self.lower_component(c.name)
        # anonymous summation: key it by its printed form so structurally
        # identical occurrences share one derivative state
        key = "(" + printer.format_summation(c) + ")"
        if key not in self.states:
            self.states[key] = ()  # placeholder guards recursion
            self.states[key] = self.lower_summation(c)
        return key

    # -- grouped system ----------------------------------------------------------

    def resolve_multiplicity(self, m: Optional[ast.Amount], member: ast.GroupMember) -> int:
        if m is None:
            return 1
        x = self.resolve_amount(m, f"the multiplicity of '{member.component}'")
        r = round(x)
        if abs(x - r) > MULTIPLICITY_TOL:
            _err(f"multiplicity of '{member.component}' must be an integer, got {x!r}", member)
        if r < 0:
            _err(f"multiplicity of '{member.component}' must be non-negative, got {x!r}", member)
        return int(r)

    def resolve_system(self, node):
        if isinstance(node, ast.Group):
            counts: dict[str, int] = {}
            for member in node.members:
                if member.component not in self.defs:
                    _err(f"undefined component {member.component}", member)
                key = self.lower_component(member.component)
                counts[key] = counts.get(key, 0) + self.resolve_multiplicity(member.multiplicity, member)
            return ResolvedGroup(node.label, tuple(counts.items()))
        return ResolvedCoop(
            self.resolve_system(node.left), self.resolve_system(node.right), node.actions
        )

    # -- analyses ------------------------------------------------------------------

    def validate_grid(self, block):
        if block.stop_time <= 0:
            _err(f"stopTime must be positive, got {block.stop_time!r}", block)
        if block.step_size <= 0:
            _err(f"stepSize must be positive, got {block.step_size!r}", block)
        if block.step_size > block.stop_time:
            _err("stepSize must not exceed stopTime", block)

    def validate_commands(self, commands, reachable, in_comparison=False):
        for cmd in commands:
            if isinstance(cmd.body, ast.SwitchCmd):
                if in_comparison:
                    _err("plotSwitchpoints is not supported in comparison commands", cmd)
                if cmd.body.order < 1:
                    _err("switch-point order must be at least 1", cmd)
            else:
                labels = set()
                for e in cmd.body.exprs:
                    self.validate_moment_expr(e, reachable)
                    label = printer.format_moment_expr(e)
                    if label in labels:
                        _err(f"duplicate expression {label} in plot command", cmd)
                    labels.add(label)

    def validate_moment_expr(self, e, reachable):
        if isinstance(e, ast.MParam):
            if e.name not in self.params:
                _err(f"undefined parameter '{e.name}'", e)
        elif isinstance(e, ast.MBin):
            self.validate_moment_expr(e.left, reachable)
            self.validate_moment_expr(e.right, reachable)
        elif isinstance(e, ast.MExpect):
            for mono in e.monomials:
                for pair, _exp in mono:
                    self.validate_gc_pair(pair, reachable)
        elif isinstance(e, ast.MVarOf):
            for pair in e.pairs:
                self.validate_gc_pair(pair, reachable)
        elif isinstance(e, ast.MCovOf):
            self.validate_gc_pair(e.first, reachable)
            self.validate_gc_pair(e.second, reachable)
        elif isinstance(e, ast.MCentral):
            self.validate_gc_pair(e.pair, reachable)

    def validate_gc_pair(self, pair: ast.GCPair, reachable):
        if pair.group not in reachable:
            _err(f"undefined group '{pair.group}'", pair)
        if pair.component not in reachable[pair.group]:
            _err(
                f"component '{pair.component}' is not reachable in group '{pair.group}'",
                pair,
            )

    def validate_analysis(self, block, reachable):
        if isinstance(block, ast.ComparisonBlock):
            self.validate_analysis(block.odes, reachable)
            self.validate_analysis(block.simulation, reachable)
            if block.odes.stop_time != block.simulation.stop_time:
                _err("stop time mismatch between compared analyses", block)
            if block.odes.step_size != block.simulation.step_size:
                _err("step size mismatch between compared analyses", block)
            self.validate_commands(block.commands, reachable, in_comparison=True)
            return
        self.validate_grid(block)
        if isinstance(block, ast.OdesBlock):
            if block.density < 1:
                _err(f"density must be at least 1, got {block.density}", block)
        else:
            if block.replications < 1:
                _err(f"replications must be at least 1, got {block.replications}", block)
        self.validate_commands(block.commands, reachable)

    # -- driver ---------------------------------------------------------------------

    def run(self) -> ValidatedModel:
        for d in self.mf.component_defs:
            if d.name == STOP_KEY:
                _err(f"'{STOP_KEY}' is reserved and cannot be defined as a component", d)
        system = self.resolve_system(self.mf.system)
        self.resolve_aliases()

        group_order = []
        group_members = {}

        def collect(node):
            if isinstance(node, ResolvedGroup):
                group_order.append(node.label)
                group_members[node.label] = node.members
            else:
                collect(node.left)
                collect(node.right)

        collect(system)

        reachable = {}
        for label in group_order:
            seen = []
            frontier = [key for key, _ in group_members[label]]
            while frontier:
                key = frontier.pop(0)
                if key in seen:
                    continue
                seen.append(key)
                for tr in self.states[key]:
                    if tr.target not in seen:
                        frontier.append(tr.target)
            reachable[label] = frozenset(seen)

        for block in self.mf.analyses:
            self.validate_analysis(block, reachable)

        return ValidatedModel(
            params=dict(self.params),
            local_states=dict(self.states),
            system=system,
            group_order=tuple(group_order),
            group_members=dict(group_members),
            reachable=reachable,
            analyses=self.mf.analyses,
            source=self.mf,
        )


def validate(mf: ast.ModelFile) -> ValidatedModel:
    """Check and resolve a parsed model; raises GpaValidationError on the first violation."""
    return _Validator(mf).run()
