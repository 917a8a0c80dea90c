"""Recursive-descent parser producing a ModelFile AST.

The accepted language follows the published grammar with three ergonomic
liberties: numeric literals are allowed wherever a rate or multiplicity
parameter is expected, model-level cooperation does not require enclosing
parentheses, and ``//`` comments are skipped. Every prefix must name an
explicit continuation (a component, ``stop`` or a parenthesised summation).
"""

from __future__ import annotations

from ..errors import GpaSyntaxError
from . import ast
from .lexer import Token, TokenType, tokenize

_ANALYSIS_KEYWORDS = {"odes", "simulation", "comparison", "comparsion"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ---------------------------------------------------

    def peek(self, offset=0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type is not TokenType.EOF:
            self.pos += 1
        return tok

    def check(self, ttype: TokenType, text=None) -> bool:
        tok = self.peek()
        return tok.type is ttype and (text is None or tok.text == text)

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        if isinstance(expected, str):
            expected = (expected,)
        what = tok.text if tok.type is not TokenType.EOF else "end of input"
        raise GpaSyntaxError(
            f"unexpected {what!r}, expected {' or '.join(expected)}",
            tok.line,
            tok.col,
            expected=expected,
        )

    def expect(self, ttype: TokenType, expected=None) -> Token:
        if not self.check(ttype):
            self.fail(expected or (f"'{ttype.value}'",))
        return self.advance()

    def expect_ident(self, text=None, expected=None) -> Token:
        tok = self.peek()
        if tok.type is not TokenType.IDENT or (text is not None and tok.text != text):
            self.fail(expected or (f"'{text}'" if text else "identifier",))
        return self.advance()

    def pos_of(self, tok: Token) -> ast.Pos:
        return ast.Pos(tok.line, tok.col)

    # -- top level ----------------------------------------------------------

    def parse_file(self) -> ast.ModelFile:
        parameters = []
        seen_params = {}
        while (
            self.check(TokenType.IDENT)
            and self.peek(1).type is TokenType.EQUALS
            and self.peek(2).type in (TokenType.NUMBER, TokenType.MINUS)
        ):
            p = self.parse_parameter()
            if p.name in seen_params:
                raise GpaSyntaxError(f"duplicate definition of parameter '{p.name}'", p.pos.line, p.pos.col)
            seen_params[p.name] = p
            parameters.append(p)

        defs = []
        seen_defs = {}
        while self.check(TokenType.IDENT) and self.peek(1).type is TokenType.EQUALS:
            d = self.parse_component_def()
            if d.name in seen_defs:
                raise GpaSyntaxError(f"duplicate definition of component '{d.name}'", d.pos.line, d.pos.col)
            seen_defs[d.name] = d
            defs.append(d)

        system = self.parse_model()
        self._check_group_labels(system)

        analyses = []
        while not self.check(TokenType.EOF):
            analyses.append(self.parse_analysis())
        return ast.ModelFile(
            parameters=tuple(parameters),
            component_defs=tuple(defs),
            system=system,
            analyses=tuple(analyses),
        )

    def _check_group_labels(self, system):
        seen = {}

        def walk(node):
            if isinstance(node, ast.Group):
                if node.label in seen:
                    raise GpaSyntaxError(
                        f"duplicate definition of group '{node.label}'", node.pos.line, node.pos.col
                    )
                seen[node.label] = node
            else:
                walk(node.left)
                walk(node.right)

        walk(system)

    def parse_parameter(self) -> ast.Parameter:
        name = self.advance()
        self.expect(TokenType.EQUALS)
        value = self.parse_signed_number()
        self.expect(TokenType.SEMI)
        return ast.Parameter(name.text, value, pos=self.pos_of(name))

    def parse_signed_number(self) -> float:
        sign = 1.0
        if self.check(TokenType.MINUS):
            self.advance()
            sign = -1.0
        tok = self.expect(TokenType.NUMBER, ("number",))
        return sign * tok.value

    def parse_amount(self) -> ast.Amount:
        tok = self.peek()
        if tok.type is TokenType.IDENT:
            self.advance()
            return ast.Amount(param=tok.text, pos=self.pos_of(tok))
        if tok.type is TokenType.NUMBER:
            self.advance()
            return ast.Amount(value=tok.value, pos=self.pos_of(tok))
        self.fail(("parameter name", "number"))

    # -- sequential components ----------------------------------------------

    def parse_component_def(self) -> ast.ComponentDef:
        name = self.advance()
        self.expect(TokenType.EQUALS)
        body = self.parse_component_expr()
        self.expect(TokenType.SEMI)
        return ast.ComponentDef(name.text, body, pos=self.pos_of(name))

    def parse_component_expr(self) -> ast.ComponentBody:
        left = self.parse_coop_term()
        while self.check(TokenType.LANGLE):
            tok = self.advance()
            actions = self.parse_action_list()
            right = self.parse_coop_term()
            left = ast.SeqCoop(left, right, actions, pos=self.pos_of(tok))
        return left

    def parse_coop_term(self) -> ast.ComponentBody:
        tok = self.peek()
        if tok.type is TokenType.LPAREN:
            if self.peek(1).type is TokenType.IDENT and self.peek(2).type is TokenType.COMMA:
                return self.parse_summation()
            self.advance()
            inner = self.parse_component_expr()
            self.expect(TokenType.RPAREN)
            return inner
        if tok.type is TokenType.IDENT:
            self.advance()
            return ast.NameRef(tok.text, pos=self.pos_of(tok))
        self.fail(("'('", "component name"))

    def parse_summation(self) -> ast.Summation:
        first = self.peek()
        branches = [self.parse_prefix()]
        while self.check(TokenType.PLUS):
            self.advance()
            branches.append(self.parse_prefix())
        return ast.Summation(tuple(branches), pos=self.pos_of(first))

    def parse_prefix(self) -> ast.Prefix:
        lp = self.expect(TokenType.LPAREN, ("'('",))
        action = self.expect(TokenType.IDENT, ("action name",))
        self.expect(TokenType.COMMA)
        rate = self.parse_amount()
        self.expect(TokenType.RPAREN)
        self.expect(TokenType.DOT, ("'.'",))
        target = self.parse_continuation()
        return ast.Prefix(action.text, rate, target, pos=self.pos_of(lp))

    def parse_continuation(self) -> ast.Continuation:
        tok = self.peek()
        if tok.type is TokenType.IDENT:
            self.advance()
            if tok.text == "stop":
                return ast.Stop(pos=self.pos_of(tok))
            return ast.NameRef(tok.text, pos=self.pos_of(tok))
        if tok.type is TokenType.LPAREN:
            self.advance()
            inner = self.parse_summation()
            self.expect(TokenType.RPAREN)
            return inner
        self.fail(("component name", "'stop'", "'('"))

    def parse_action_list(self) -> tuple:
        actions = []
        if self.check(TokenType.IDENT):
            actions.append(self.advance().text)
            while self.check(TokenType.COMMA):
                self.advance()
                actions.append(self.expect(TokenType.IDENT, ("action name",)).text)
        self.expect(TokenType.RANGLE, ("'>'",))
        # cooperation sets are sets: duplicates collapse silently
        seen = []
        for a in actions:
            if a not in seen:
                seen.append(a)
        return tuple(seen)

    # -- grouped model --------------------------------------------------------

    def parse_model(self) -> ast.GroupedModel:
        left = self.parse_model_term()
        while self.check(TokenType.LANGLE):
            tok = self.advance()
            actions = self.parse_action_list()
            right = self.parse_model_term()
            left = ast.Coop(left, right, actions, pos=self.pos_of(tok))
        return left

    def parse_model_term(self) -> ast.GroupedModel:
        tok = self.peek()
        if tok.type is TokenType.LPAREN:
            self.advance()
            inner = self.parse_model()
            self.expect(TokenType.RPAREN)
            return inner
        if tok.type is TokenType.IDENT:
            self.advance()
            self.expect(TokenType.LBRACE, ("'{'",))
            members = [self.parse_member()]
            while self.check(TokenType.PIPE):
                self.advance()
                members.append(self.parse_member())
            self.expect(TokenType.RBRACE, ("'}'", "'|'"))
            return ast.Group(tok.text, tuple(members), pos=self.pos_of(tok))
        self.fail(("group label", "'('"))

    def parse_member(self) -> ast.GroupMember:
        name = self.expect(TokenType.IDENT, ("component name",))
        mult = None
        if self.check(TokenType.LBRACKET):
            self.advance()
            mult = self.parse_amount()
            self.expect(TokenType.RBRACKET)
        return ast.GroupMember(name.text, mult, pos=self.pos_of(name))

    # -- analyses ---------------------------------------------------------------

    def parse_analysis(self) -> ast.AnalysisBlock:
        tok = self.peek()
        if tok.type is not TokenType.IDENT or tok.text not in _ANALYSIS_KEYWORDS:
            self.fail(("'odes'", "'simulation'", "'comparison'"))
        if tok.text == "odes":
            return self.parse_odes()
        if tok.text == "simulation":
            return self.parse_simulation()
        return self.parse_comparison()

    def _parse_named_number(self, name) -> float:
        self.expect_ident(name)
        self.expect(TokenType.EQUALS)
        return self.parse_signed_number()

    def _parse_named_int(self, name) -> int:
        self.expect_ident(name)
        self.expect(TokenType.EQUALS)
        tok = self.expect(TokenType.NUMBER, ("integer",))
        if not tok.is_int:
            raise GpaSyntaxError(f"'{name}' must be an integer", tok.line, tok.col)
        return int(tok.value)

    def parse_odes(self) -> ast.OdesBlock:
        tok = self.expect_ident("odes")
        self.expect(TokenType.LPAREN)
        stop_time = self._parse_named_number("stopTime")
        self.expect(TokenType.COMMA)
        step_size = self._parse_named_number("stepSize")
        self.expect(TokenType.COMMA)
        density = self._parse_named_int("density")
        self.expect(TokenType.RPAREN)
        commands = self.parse_command_block()
        return ast.OdesBlock(stop_time, step_size, density, commands, pos=self.pos_of(tok))

    def parse_simulation(self) -> ast.SimulationBlock:
        tok = self.expect_ident("simulation")
        self.expect(TokenType.LPAREN)
        stop_time = self._parse_named_number("stopTime")
        self.expect(TokenType.COMMA)
        step_size = self._parse_named_number("stepSize")
        self.expect(TokenType.COMMA)
        replications = self._parse_named_int("replications")
        self.expect(TokenType.RPAREN)
        commands = self.parse_command_block()
        return ast.SimulationBlock(stop_time, step_size, replications, commands, pos=self.pos_of(tok))

    def parse_comparison(self) -> ast.ComparisonBlock:
        tok = self.advance()  # comparison | comparsion
        self.expect(TokenType.LPAREN)
        odes = self.parse_odes()
        self.expect(TokenType.COMMA)
        simulation = self.parse_simulation()
        self.expect(TokenType.RPAREN)
        commands = self.parse_command_block()
        return ast.ComparisonBlock(odes, simulation, commands, pos=self.pos_of(tok))

    def parse_command_block(self) -> tuple:
        self.expect(TokenType.LBRACE, ("'{'",))
        commands = []
        while not self.check(TokenType.RBRACE):
            commands.append(self.parse_command())
        self.advance()
        return tuple(commands)

    def parse_command(self) -> ast.Command:
        tok = self.peek()
        if tok.type is not TokenType.IDENT or tok.text not in ("plot", "plotSwitchpoints"):
            self.fail(("'plot'", "'plotSwitchpoints'", "'}'"))
        self.advance()
        if tok.text == "plot":
            self.expect(TokenType.LPAREN)
            exprs = [self.parse_moment_expr()]
            while self.check(TokenType.COMMA):
                self.advance()
                exprs.append(self.parse_moment_expr())
            self.expect(TokenType.RPAREN)
            body = ast.PlotCmd(tuple(exprs))
        else:
            self.expect(TokenType.LPAREN)
            num = self.expect(TokenType.NUMBER, ("integer",))
            if not num.is_int:
                raise GpaSyntaxError("switch-point order must be an integer", num.line, num.col)
            self.expect(TokenType.RPAREN)
            body = ast.SwitchCmd(int(num.value))
        redirect = None
        if self.check(TokenType.ARROW):
            self.advance()
            redirect = self.expect(TokenType.STRING, ("file name string",)).value
        self.expect(TokenType.SEMI)
        return ast.Command(body, redirect, pos=self.pos_of(tok))

    # -- moment expressions -------------------------------------------------------

    def parse_moment_expr(self) -> ast.MomentExpr:
        return self.parse_additive()

    def parse_additive(self) -> ast.MomentExpr:
        left = self.parse_multiplicative()
        while self.peek().type in (TokenType.PLUS, TokenType.MINUS):
            op = self.advance()
            right = self.parse_multiplicative()
            left = ast.MBin(op.text, left, right, pos=self.pos_of(op))
        return left

    def parse_multiplicative(self) -> ast.MomentExpr:
        left = self.parse_power()
        while self.peek().type in (TokenType.STAR, TokenType.SLASH):
            op = self.advance()
            right = self.parse_power()
            left = ast.MBin(op.text, left, right, pos=self.pos_of(op))
        return left

    def parse_power(self) -> ast.MomentExpr:
        base = self.parse_atom()
        if self.check(TokenType.CARET):
            op = self.advance()
            exponent = self.parse_power()  # right-associative
            return ast.MBin("^", base, exponent, pos=self.pos_of(op))
        return base

    def parse_atom(self) -> ast.MomentExpr:
        tok = self.peek()
        if tok.type is TokenType.NUMBER:
            self.advance()
            return ast.MNum(tok.value, pos=self.pos_of(tok))
        if tok.type is TokenType.LPAREN:
            self.advance()
            inner = self.parse_moment_expr()
            self.expect(TokenType.RPAREN)
            return inner
        if tok.type is TokenType.IDENT:
            follows_bracket = self.peek(1).type is TokenType.LBRACKET
            if follows_bracket and tok.text == "E":
                return self.parse_expectation()
            if follows_bracket and tok.text == "Var":
                return self.parse_var_of()
            if follows_bracket and tok.text == "Cov":
                return self.parse_cov_of()
            if follows_bracket and tok.text in ("Central", "StandardisedCentral"):
                return self.parse_central(standardised=tok.text == "StandardisedCentral")
            self.advance()
            return ast.MParam(tok.text, pos=self.pos_of(tok))
        self.fail(("number", "'('", "'E['", "'Var['", "'Cov['", "'Central['", "parameter name"))

    def parse_gc_pair(self) -> ast.GCPair:
        group = self.expect(TokenType.IDENT, ("group label",))
        self.expect(TokenType.COLON, ("':'",))
        comp = self.expect(TokenType.IDENT, ("component name",))
        return ast.GCPair(group.text, comp.text, pos=self.pos_of(group))

    def parse_expectation(self) -> ast.MExpect:
        tok = self.advance()  # E
        self.expect(TokenType.LBRACKET)
        monomials = [self.parse_monomial()]
        while self.check(TokenType.PLUS):
            self.advance()
            monomials.append(self.parse_monomial())
        self.expect(TokenType.RBRACKET)
        return ast.MExpect(tuple(monomials), pos=self.pos_of(tok))

    def parse_monomial(self) -> tuple:
        factors = []
        while self.check(TokenType.IDENT):
            pair = self.parse_gc_pair()
            exp = 1
            if self.check(TokenType.CARET):
                self.advance()
                num = self.expect(TokenType.NUMBER, ("integer exponent",))
                if not num.is_int or num.value < 1:
                    raise GpaSyntaxError("exponent must be a positive integer", num.line, num.col)
                exp = int(num.value)
            factors.append((pair, exp))
        if not factors:
            self.fail(("group label",))
        return tuple(factors)

    def parse_var_of(self) -> ast.MVarOf:
        tok = self.advance()  # Var
        self.expect(TokenType.LBRACKET)
        pairs = [self.parse_gc_pair()]
        while self.check(TokenType.PLUS):
            self.advance()
            pairs.append(self.parse_gc_pair())
        self.expect(TokenType.RBRACKET)
        return ast.MVarOf(tuple(pairs), pos=self.pos_of(tok))

    def parse_cov_of(self) -> ast.MCovOf:
        tok = self.advance()  # Cov
        self.expect(TokenType.LBRACKET)
        first = self.parse_gc_pair()
        self.expect(TokenType.COMMA)
        second = self.parse_gc_pair()
        self.expect(TokenType.RBRACKET)
        return ast.MCovOf(first, second, pos=self.pos_of(tok))

    def parse_central(self, standardised: bool) -> ast.MCentral:
        tok = self.advance()  # Central | StandardisedCentral
        self.expect(TokenType.LBRACKET)
        pair = self.parse_gc_pair()
        self.expect(TokenType.COMMA)
        num = self.expect(TokenType.NUMBER, ("integer",))
        if not num.is_int or num.value < 1:
            raise GpaSyntaxError("central moment order must be a positive integer", num.line, num.col)
        self.expect(TokenType.RBRACKET)
        return ast.MCentral(pair, int(num.value), standardised, pos=self.pos_of(tok))


def parse_model(source: str) -> ast.ModelFile:
    """Parse model text into a ModelFile; raises GpaSyntaxError with position on failure."""
    return _Parser(tokenize(source)).parse_file()
