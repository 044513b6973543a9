"""Fact values and the fact schema."""

from __future__ import annotations

from dataclasses import dataclass

from ..logic.parser import Clause
from ..logic.terms import Atom, Compound, Int, Str, Term, format_term, to_term
from ..minil.ast import SourceRange

# predicate -> arity, by family
SCHEMA = {
    "semantic": {
        "method_invoc": 3,
        "argument": 3,
        "receiver": 3,
        "ref": 3,
        "assign": 3,
        "return": 3,
        "param": 3,
        "param_line": 2,
        "literal": 3,
        "field_read": 3,
        "field_of": 2,
        "method_of": 2,
        "method_range": 4,
        "builtin": 1,
        "test_method": 1,
        "single_stmt_return_call": 1,
    },
    "code": {"class": 2, "expr": 6, "name": 6},
    "dynamic": {
        "val": 3,
        "observed": 2,
        "npe_error": 4,
        "stack": 4,
        "failed_test": 1,
    },
}

ARITY = {p: n for family in SCHEMA.values() for p, n in family.items()}


@dataclass(frozen=True)
class Fact:
    predicate: str
    args: tuple
    provenance: object = None  # SourceRange or test index

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(to_term(a) for a in self.args))
        if ARITY.get(self.predicate) != len(self.args):
            raise ValueError(f"{self.predicate}/{len(self.args)} is not in the fact schema")

    @property
    def term(self) -> Compound:
        return Compound(self.predicate, self.args)

    def clause(self) -> Clause:
        return Clause(self.term, [])

    def __str__(self) -> str:
        return format_term(self.term) + "."

    def sort_key(self):
        p = self.provenance
        if isinstance(p, SourceRange):
            prov = (0, p.class_id, p.start, p.length)
        elif p is None:
            prov = (2, "", 0, 0)
        else:
            prov = (1, "", int(p), 0)
        return (self.predicate, prov)


def line_term(class_id: str, line: int) -> Compound:
    return Compound("line", (Atom(class_id), Int(line)))


def range_term(rng: SourceRange) -> Compound:
    return Compound(
        "range",
        (Atom(rng.class_id), Int(rng.start), Int(rng.length), Int(rng.start_line), Int(rng.end_line)),
    )


def value_term(value) -> Term:
    """Minil literal value as a term: null, true/false, integer or string."""
    if value is None:
        return Atom("null")
    if isinstance(value, bool):
        return Atom("true" if value else "false")
    if isinstance(value, int):
        return Int(value)
    return Str(value)


def sort_facts(facts) -> list[Fact]:
    """Deduplicate and order by (predicate, provenance); ties keep generation order."""
    seen = set()
    unique = []
    for f in facts:
        key = (f.predicate, f.args)
        if key not in seen:
            seen.add(key)
            unique.append(f)
    return sorted(unique, key=Fact.sort_key)


def render_facts(facts) -> str:
    return "".join(f"{f}\n" for f in facts)
