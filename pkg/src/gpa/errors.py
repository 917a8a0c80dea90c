"""Error types shared across the package."""


class GpaError(Exception):
    """Base class for all errors raised on invalid input or unsupported analyses."""

    def __init__(self, message, line=None, col=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def __str__(self):
        if self.line is not None:
            return f"{self.line}:{self.col}: {self.message}"
        return self.message


class GpaSyntaxError(GpaError):
    """Lexical or grammatical error, with position and the token set that was expected."""

    def __init__(self, message, line, col, expected=()):
        super().__init__(message, line, col)
        self.expected = frozenset(expected)


class GpaValidationError(GpaError):
    """Well-formed input that violates a static constraint (names, counts, analysis parameters)."""


class GpaRuntimeError(GpaError):
    """Failure while executing an analysis (unsupported mode, numerical blow-up, I/O)."""
