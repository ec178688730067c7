"""The OEK kernel language: syntax tree, parser, validator and printer."""

from . import ast
from .parser import ParseError, parse, tokenize
from .printer import format_expr, format_stmt, pretty_print
from .validate import SemanticError, ValidatedProgram, ValidationError, check, validate


def load(source: str) -> ValidatedProgram:
    """Parse and validate in one go."""
    return validate(parse(source))


__all__ = [
    "ast",
    "ParseError",
    "SemanticError",
    "ValidatedProgram",
    "ValidationError",
    "check",
    "format_expr",
    "format_stmt",
    "load",
    "parse",
    "pretty_print",
    "tokenize",
    "validate",
]
