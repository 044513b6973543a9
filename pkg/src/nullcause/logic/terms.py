"""Term representation for the clause engine.

Terms are immutable except for variable identity: a :class:`Var` is bound
only through a substitution mapping (``dict[Var, Term]``), never in place.
"""

from __future__ import annotations

import itertools
import re
from typing import Iterator, Mapping

_var_serial = itertools.count()

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


class Term:
    __slots__ = ()


class Atom(Term):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __eq__(self, other):
        return type(other) is Atom and other.name == self.name

    def __hash__(self):
        return hash(("a", self.name))

    def __repr__(self):
        return f"Atom({self.name!r})"

    def __str__(self):
        return format_term(self)


class Var(Term):
    """A logic variable.  Equality is identity; ``name`` is cosmetic."""

    __slots__ = ("name", "serial")

    def __init__(self, name: str = "_"):
        self.name = name
        self.serial = next(_var_serial)

    def __repr__(self):
        return f"Var({self.name!r}#{self.serial})"

    def __str__(self):
        return format_term(self)


class Int(Term):
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value

    def __eq__(self, other):
        return type(other) is Int and other.value == self.value

    def __hash__(self):
        return hash(("i", self.value))

    def __repr__(self):
        return f"Int({self.value})"

    def __str__(self):
        return format_term(self)


class Str(Term):
    """Double-quoted string."""

    __slots__ = ("value",)

    def __init__(self, value: str):
        self.value = value

    def __eq__(self, other):
        return type(other) is Str and other.value == self.value

    def __hash__(self):
        return hash(("s", self.value))

    def __repr__(self):
        return f"Str({self.value!r})"

    def __str__(self):
        return format_term(self)


class Compound(Term):
    __slots__ = ("functor", "args", "_hash")

    def __init__(self, functor: str, args):
        self.functor = functor
        self.args = tuple(args)
        self._hash = None

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def indicator(self) -> tuple[str, int]:
        return (self.functor, len(self.args))

    def __eq__(self, other):
        return (
            type(other) is Compound
            and other.functor == self.functor
            and other.args == self.args
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.functor, self.args))
        return self._hash

    def __repr__(self):
        return f"Compound({self.functor!r}, {list(self.args)!r})"

    def __str__(self):
        return format_term(self)


NIL = Atom("[]")
TRUE = Atom("true")


def atom(name: str) -> Atom:
    return Atom(name)


def compound(functor: str, *args: Term) -> Compound:
    return Compound(functor, args)


def tup(*items: Term) -> Term:
    """Build a right-nested comma tuple ``(a, b, c)``."""
    if len(items) == 1:
        return items[0]
    return Compound(",", (items[0], tup(*items[1:])))


def make_list(items, tail: Term = NIL) -> Term:
    result = tail
    for item in reversed(list(items)):
        result = Compound(".", (item, result))
    return result


def list_items(term: Term) -> list[Term]:
    """Items of a proper list; raises ValueError otherwise."""
    items = []
    while isinstance(term, Compound) and term.functor == "." and term.arity == 2:
        items.append(term.args[0])
        term = term.args[1]
    if term != NIL:
        raise ValueError("not a proper list")
    return items


def to_term(value) -> Term:
    """Convert a python value to a term (str -> atom, int -> Int, tuple -> comma tuple)."""
    if isinstance(value, Term):
        return value
    if isinstance(value, bool):
        return Atom("true" if value else "false")
    if isinstance(value, int):
        return Int(value)
    if isinstance(value, str):
        return Atom(value)
    if isinstance(value, tuple):
        return tup(*(to_term(v) for v in value))
    if isinstance(value, list):
        return make_list(to_term(v) for v in value)
    if value is None:
        return Atom("null")
    raise TypeError(f"cannot convert {value!r} to a term")


def deref(term: Term, subst: Mapping[Var, Term]) -> Term:
    while type(term) is Var:
        bound = subst.get(term)
        if bound is None:
            return term
        term = bound
    return term


def resolve(term: Term, subst: Mapping[Var, Term]) -> Term:
    """Apply ``subst`` to ``term`` fully."""
    term = deref(term, subst)
    if type(term) is Compound:
        return Compound(term.functor, [resolve(a, subst) for a in term.args])
    return term


def variables(term: Term) -> Iterator[Var]:
    """Variables of ``term`` in first-occurrence order (with repeats)."""
    stack = [term]
    while stack:
        t = stack.pop()
        if type(t) is Var:
            yield t
        elif type(t) is Compound:
            stack.extend(reversed(t.args))


def unique_variables(term: Term) -> list[Var]:
    seen: dict[Var, None] = {}
    for v in variables(term):
        seen.setdefault(v, None)
    return list(seen)


def is_ground(term: Term) -> bool:
    return next(variables(term), None) is None


# -- writing ---------------------------------------------------------------

_INFIX = {":-", ";", ",", "=", "\\=", "==", "\\==", "<", "=<", ">", ">=", "+", "-"}


def quote_atom(name: str) -> str:
    if _PLAIN_ATOM.match(name) or name in ("[]", "!", ";"):
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n")
    return f"'{escaped}'"


def quote_string(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def format_term(term: Term, subst: Mapping[Var, Term] | None = None) -> str:
    if subst is not None:
        term = resolve(term, subst)
    t = type(term)
    if t is Atom:
        return quote_atom(term.name)
    if t is Int:
        return str(term.value)
    if t is Str:
        return quote_string(term.value)
    if t is Var:
        return "_G%d" % term.serial if term.name == "_" else term.name
    # compound
    if term.functor == "." and term.arity == 2:
        items = []
        while isinstance(term, Compound) and term.functor == "." and term.arity == 2:
            items.append(format_term(term.args[0]))
            term = term.args[1]
        if term == NIL:
            return "[" + ", ".join(items) + "]"
        return "[" + ", ".join(items) + "|" + format_term(term) + "]"
    if term.functor == "," and term.arity == 2:
        parts = []
        while isinstance(term, Compound) and term.functor == "," and term.arity == 2:
            parts.append(format_term(term.args[0]))
            term = term.args[1]
        parts.append(format_term(term))
        return "(" + ", ".join(parts) + ")"
    if term.functor in _INFIX and term.arity == 2:
        return "(%s %s %s)" % (
            format_term(term.args[0]),
            term.functor,
            format_term(term.args[1]),
        )
    if term.functor == "\\+" and term.arity == 1:
        return "\\+ " + _paren(term.args[0])
    args = ", ".join(format_term(a) for a in term.args)
    return f"{quote_atom(term.functor)}({args})"


def _paren(term: Term) -> str:
    text = format_term(term)
    return text if text.startswith("(") else f"({text})"
