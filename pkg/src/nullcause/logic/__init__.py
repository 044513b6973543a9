"""Horn-clause inference: terms, clause reader and SLD solver."""

from .engine import (
    BUILTINS,
    DeductionTrace,
    DepthExceeded,
    EngineError,
    KnowledgeBase,
    TraceEvent,
    UnknownPredicate,
    query,
    referenced_predicates,
    solve,
    succeeds,
    trace_solve,
    unify,
)
from .parser import Clause, SyntaxError_ as SyntaxError, parse_clauses, parse_query, parse_term
from .terms import Atom, Compound, Int, Str, Term, Var, format_term, make_list, to_term, tup

__all__ = [
    "Atom",
    "BUILTINS",
    "Clause",
    "Compound",
    "DeductionTrace",
    "DepthExceeded",
    "EngineError",
    "Int",
    "KnowledgeBase",
    "Str",
    "SyntaxError",
    "Term",
    "TraceEvent",
    "UnknownPredicate",
    "Var",
    "format_term",
    "make_list",
    "parse_clauses",
    "parse_query",
    "parse_term",
    "query",
    "referenced_predicates",
    "solve",
    "succeeds",
    "to_term",
    "trace_solve",
    "tup",
    "unify",
]
