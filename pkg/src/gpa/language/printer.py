"""Pretty-printer for ModelFile ASTs.

Output reparses to a structurally identical tree: floats use shortest
round-trip formatting and moment expressions are fully parenthesised.
"""

from __future__ import annotations

from . import ast


def _num(x: float) -> str:
    return repr(float(x))


def format_amount(a: ast.Amount) -> str:
    return a.param if a.param is not None else _num(a.value)


def format_continuation(c) -> str:
    if isinstance(c, ast.Stop):
        return "stop"
    if isinstance(c, ast.NameRef):
        return c.name
    return "(" + format_summation(c) + ")"


def format_prefix(p: ast.Prefix) -> str:
    return f"({p.action},{format_amount(p.rate)}).{format_continuation(p.target)}"


def format_summation(s: ast.Summation) -> str:
    return " + ".join(format_prefix(b) for b in s.branches)


def format_component_body(body) -> str:
    if isinstance(body, ast.NameRef):
        return body.name
    if isinstance(body, ast.Summation):
        return format_summation(body)
    # cooperation inside a definition; operands parenthesised unless bare names
    def operand(x):
        s = format_component_body(x)
        return s if isinstance(x, ast.NameRef) else f"({s})"

    return f"{operand(body.left)}<{','.join(body.actions)}>{operand(body.right)}"


def format_member(m: ast.GroupMember) -> str:
    if m.multiplicity is None:
        return m.component
    return f"{m.component}[{format_amount(m.multiplicity)}]"


def format_model(model) -> str:
    if isinstance(model, ast.Group):
        return f"{model.label}{{{' | '.join(format_member(m) for m in model.members)}}}"
    return f"({format_model(model.left)} <{','.join(model.actions)}> {format_model(model.right)})"


def format_gc_pair(p: ast.GCPair) -> str:
    return f"{p.group}:{p.component}"


def format_monomial(mono) -> str:
    parts = []
    for pair, exp in mono:
        parts.append(format_gc_pair(pair) + (f"^{exp}" if exp != 1 else ""))
    return " ".join(parts)


def format_moment_expr(e) -> str:
    if isinstance(e, ast.MNum):
        return _num(e.value)
    if isinstance(e, ast.MParam):
        return e.name
    if isinstance(e, ast.MBin):
        return f"({format_moment_expr(e.left)}{e.op}{format_moment_expr(e.right)})"
    if isinstance(e, ast.MExpect):
        return "E[" + " + ".join(format_monomial(m) for m in e.monomials) + "]"
    if isinstance(e, ast.MVarOf):
        return "Var[" + "+".join(format_gc_pair(p) for p in e.pairs) + "]"
    if isinstance(e, ast.MCovOf):
        return f"Cov[{format_gc_pair(e.first)},{format_gc_pair(e.second)}]"
    if isinstance(e, ast.MCentral):
        kw = "StandardisedCentral" if e.standardised else "Central"
        return f"{kw}[{format_gc_pair(e.pair)},{e.order}]"
    raise TypeError(type(e).__name__)


def format_command(c: ast.Command) -> str:
    if isinstance(c.body, ast.PlotCmd):
        s = "plot(" + ", ".join(format_moment_expr(e) for e in c.body.exprs) + ")"
    else:
        s = f"plotSwitchpoints({c.body.order})"
    if c.redirect is not None:
        s += f' -> "{c.redirect}"'
    return s + ";"


def format_analysis(block, indent="") -> str:
    if isinstance(block, ast.OdesBlock):
        head = (
            f"odes(stopTime = {_num(block.stop_time)}, stepSize = {_num(block.step_size)}, "
            f"density = {block.density})"
        )
        body = block.commands
    elif isinstance(block, ast.SimulationBlock):
        head = (
            f"simulation(stopTime = {_num(block.stop_time)}, stepSize = {_num(block.step_size)}, "
            f"replications = {block.replications})"
        )
        body = block.commands
    else:
        inner_odes = format_analysis(block.odes, indent + "    ").lstrip()
        inner_sim = format_analysis(block.simulation, indent + "    ").lstrip()
        head = f"comparison(\n{indent}    {inner_odes},\n{indent}    {inner_sim})"
        body = block.commands
    lines = [indent + head + "{"]
    for cmd in body:
        lines.append(indent + "    " + format_command(cmd))
    lines.append(indent + "}")
    return "\n".join(lines)


def format_model_file(mf: ast.ModelFile) -> str:
    """Render a complete model file."""
    lines = []
    for p in mf.parameters:
        lines.append(f"{p.name} = {_num(p.value)};")
    if mf.parameters:
        lines.append("")
    for d in mf.component_defs:
        lines.append(f"{d.name} = {format_component_body(d.body)};")
    if mf.component_defs:
        lines.append("")
    lines.append(format_model(mf.system))
    for block in mf.analyses:
        lines.append("")
        lines.append(format_analysis(block))
    return "\n".join(lines) + "\n"
