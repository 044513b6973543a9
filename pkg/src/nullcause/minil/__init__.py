"""The Minil language: syntax tree, parser, printer and interpreter."""

from . import ast
from .errors import MinilError, MinilNameError, NotFound, ParseError, RuntimeConfigError
from .parser import node_at, parse, tokenize
from .printer import expr_text, print_unit
from .program import Program, key_of

NameError = MinilNameError  # noqa: A001

__all__ = [
    "ast",
    "MinilError",
    "MinilNameError",
    "NameError",
    "NotFound",
    "ParseError",
    "RuntimeConfigError",
    "node_at",
    "parse",
    "tokenize",
    "expr_text",
    "print_unit",
    "Program",
    "key_of",
]
