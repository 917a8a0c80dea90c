"""Tokenizer for the model language.

Identifiers are never reserved at the lexer level; keywords such as ``odes``
or ``stop`` are recognized by the parser from context, so models may reuse
those words as action names or parameters where the grammar permits.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import GpaSyntaxError


class TokenType(Enum):
    IDENT = "identifier"
    NUMBER = "number"
    STRING = "string"
    ARROW = "->"
    EQUALS = "="
    SEMI = ";"
    COMMA = ","
    DOT = "."
    LPAREN = "("
    RPAREN = ")"
    LBRACE = "{"
    RBRACE = "}"
    LBRACKET = "["
    RBRACKET = "]"
    LANGLE = "<"
    RANGLE = ">"
    COLON = ":"
    PIPE = "|"
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    CARET = "^"
    EOF = "end of input"


_SINGLE = {
    "=": TokenType.EQUALS,
    ";": TokenType.SEMI,
    ",": TokenType.COMMA,
    ".": TokenType.DOT,
    "(": TokenType.LPAREN,
    ")": TokenType.RPAREN,
    "{": TokenType.LBRACE,
    "}": TokenType.RBRACE,
    "[": TokenType.LBRACKET,
    "]": TokenType.RBRACKET,
    "<": TokenType.LANGLE,
    ">": TokenType.RANGLE,
    ":": TokenType.COLON,
    "|": TokenType.PIPE,
    "+": TokenType.PLUS,
    "*": TokenType.STAR,
    "/": TokenType.SLASH,
    "^": TokenType.CARET,
}


@dataclass(frozen=True)
class Token:
    type: TokenType
    text: str
    line: int
    col: int
    value: object = None  # float for NUMBER (is_int in aux), str for STRING
    is_int: bool = False


_DIGITS = set("0123456789")
_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | _DIGITS


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    line = 1
    col = 1
    n = len(source)

    def err(msg):
        raise GpaSyntaxError(msg, line, col)

    while pos < n:
        ch = source[pos]
        if ch in " \t\r":
            pos += 1
            col += 1
            continue
        if ch == "\n":
            pos += 1
            line += 1
            col = 1
            continue
        if ch == "/" and pos + 1 < n and source[pos + 1] == "/":
            while pos < n and source[pos] != "\n":
                pos += 1
            continue
        start_line, start_col = line, col
        if ch in _IDENT_START:
            j = pos
            while j < n and source[j] in _IDENT_CONT:
                j += 1
            text = source[pos:j]
            tokens.append(Token(TokenType.IDENT, text, start_line, start_col))
            col += j - pos
            pos = j
            continue
        if ch in _DIGITS:
            j = pos
            while j < n and source[j] in _DIGITS:
                j += 1
            is_int = True
            if j < n and source[j] == "." and j + 1 < n and source[j + 1] in _DIGITS:
                is_int = False
                j += 1
                while j < n and source[j] in _DIGITS:
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k] in _DIGITS:
                    is_int = False
                    j = k
                    while j < n and source[j] in _DIGITS:
                        j += 1
            text = source[pos:j]
            tokens.append(
                Token(TokenType.NUMBER, text, start_line, start_col, value=float(text), is_int=is_int)
            )
            col += j - pos
            pos = j
            continue
        if ch == '"':
            j = pos + 1
            buf = []
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    err("unterminated string")
                buf.append(source[j])
                j += 1
            if j >= n:
                err("unterminated string")
            text = "".join(buf)
            tokens.append(Token(TokenType.STRING, text, start_line, start_col, value=text))
            col += j + 1 - pos
            pos = j + 1
            continue
        if ch == "-" and pos + 1 < n and source[pos + 1] == ">":
            tokens.append(Token(TokenType.ARROW, "->", start_line, start_col))
            pos += 2
            col += 2
            continue
        if ch == "-":
            tokens.append(Token(TokenType.MINUS, "-", start_line, start_col))
            pos += 1
            col += 1
            continue
        tt = _SINGLE.get(ch)
        if tt is None:
            err(f"unexpected character {ch!r}")
        tokens.append(Token(tt, ch, start_line, start_col))
        pos += 1
        col += 1

    tokens.append(Token(TokenType.EOF, "", line, col))
    return tokens
