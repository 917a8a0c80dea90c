from . import ast
from .parser import parse_model
from .printer import format_model_file, format_moment_expr
from .validate import STOP_KEY, LocalTransition, ResolvedCoop, ResolvedGroup, ValidatedModel, validate

__all__ = [
    "ast",
    "parse_model",
    "format_model_file",
    "format_moment_expr",
    "validate",
    "ValidatedModel",
    "ResolvedGroup",
    "ResolvedCoop",
    "LocalTransition",
    "STOP_KEY",
]
