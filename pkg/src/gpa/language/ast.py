"""AST node types for model files.

Positions (line, col) are carried for diagnostics but excluded from equality,
so a pretty-printed and reparsed tree compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Pos:
    line: int
    col: int


def _pos_field():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Amount:
    """A rate or multiplicity: either a parameter reference or a numeric literal."""

    param: Optional[str] = None
    value: Optional[float] = None
    pos: Optional[Pos] = _pos_field()


# --- sequential components -----------------------------------------------------

@dataclass(frozen=True)
class Stop:
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class NameRef:
    name: str
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Prefix:
    action: str
    rate: Amount
    target: "Continuation"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Summation:
    branches: tuple  # tuple[Prefix, ...]
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class SeqCoop:
    """Cooperation written inside a component definition; grammatical but rejected at validation."""

    left: "ComponentBody"
    right: "ComponentBody"
    actions: tuple
    pos: Optional[Pos] = _pos_field()


Continuation = Union[Stop, NameRef, Summation]
ComponentBody = Union[Summation, NameRef, SeqCoop]


# --- grouped model ---------------------------------------------------------------

@dataclass(frozen=True)
class GroupMember:
    component: str
    multiplicity: Optional[Amount]  # None means a single copy
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Group:
    label: str
    members: tuple  # tuple[GroupMember, ...]
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class Coop:
    left: "GroupedModel"
    right: "GroupedModel"
    actions: tuple  # sorted unique action names; empty = pure parallel
    pos: Optional[Pos] = _pos_field()


GroupedModel = Union[Coop, Group]


# --- moment expressions ----------------------------------------------------------

@dataclass(frozen=True)
class GCPair:
    group: str
    component: str
    pos: Optional[Pos] = _pos_field()

    def __str__(self):
        return f"{self.group}:{self.component}"


@dataclass(frozen=True)
class MNum:
    value: float
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class MParam:
    name: str
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class MBin:
    op: str  # + - * / ^
    left: "MomentExpr"
    right: "MomentExpr"
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class MExpect:
    """E[...] over a sum of monomials; each monomial is ((GCPair, exponent), ...)."""

    monomials: tuple
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class MVarOf:
    pairs: tuple  # tuple[GCPair, ...]; variance of the sum of the counts
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class MCovOf:
    first: GCPair
    second: GCPair
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class MCentral:
    pair: GCPair
    order: int
    standardised: bool = False
    pos: Optional[Pos] = _pos_field()


MomentExpr = Union[MNum, MParam, MBin, MExpect, MVarOf, MCovOf, MCentral]


# --- analyses ---------------------------------------------------------------------

@dataclass(frozen=True)
class PlotCmd:
    exprs: tuple  # tuple[MomentExpr, ...]


@dataclass(frozen=True)
class SwitchCmd:
    order: int


@dataclass(frozen=True)
class Command:
    body: Union[PlotCmd, SwitchCmd]
    redirect: Optional[str] = None
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class OdesBlock:
    stop_time: float
    step_size: float
    density: int
    commands: tuple
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class SimulationBlock:
    stop_time: float
    step_size: float
    replications: int
    commands: tuple
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class ComparisonBlock:
    odes: OdesBlock
    simulation: SimulationBlock
    commands: tuple
    pos: Optional[Pos] = _pos_field()


AnalysisBlock = Union[OdesBlock, SimulationBlock, ComparisonBlock]


@dataclass(frozen=True)
class Parameter:
    name: str
    value: float
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class ComponentDef:
    name: str
    body: ComponentBody
    pos: Optional[Pos] = _pos_field()


@dataclass(frozen=True)
class ModelFile:
    parameters: tuple  # tuple[Parameter, ...]
    component_defs: tuple  # tuple[ComponentDef, ...] in source order, names unique
    system: GroupedModel
    analyses: tuple  # tuple[AnalysisBlock, ...]

    def parameter_map(self):
        return {p.name: p.value for p in self.parameters}

    def component_map(self):
        return {d.name: d.body for d in self.component_defs}
