"""Reader for clause text (facts and rules files).

Supported syntax: facts, rules (``head :- body.``), conjunction ``,``,
disjunction ``;``, negation ``\\+``, cut ``!``, comparison and unification
operators, quoted atoms, double-quoted strings, integers, lists and
parenthesised comma tuples.  ``%`` line comments and ``/* */`` blocks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .terms import NIL, Atom, Compound, Int, Str, Term, Var, make_list, unique_variables


class SyntaxError_(Exception):
    """Malformed clause text.  Exported as ``SyntaxError`` from the package."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(eq=False)
class Clause:
    head: Compound | Atom
    body: list[Term] = field(default_factory=list)
    line: int = 0
    source: str = ""

    @property
    def indicator(self) -> tuple[str, int]:
        return indicator_of(self.head)

    @property
    def is_fact(self) -> bool:
        return not self.body

    def __str__(self):
        from .terms import format_term

        if not self.body:
            return format_term(self.head) + "."
        return (
            format_term(self.head)
            + " :- "
            + ", ".join(format_term(g) for g in self.body)
            + "."
        )


def indicator_of(term: Term) -> tuple[str, int]:
    if isinstance(term, Atom):
        return (term.name, 0)
    if isinstance(term, Compound):
        return (term.functor, term.arity)
    raise TypeError(f"not callable: {term!r}")


# -- tokenizer ---------------------------------------------------------------

_SYMBOL_CHARS = "+-*/\\^<>=~:.?@#&$"

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*|/\*.*?\*/)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<qatom>'(?:[^'\\]|\\.)*')
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<punct>[()\[\],|!;])
  | (?P<sym>[+\-*/\\^<>=~:.?@\#&$]+)
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


@dataclass
class _Tok:
    kind: str  # int var name qatom str punct sym end eof
    text: str
    pos: int
    line: int
    col: int
    ws_before: bool
    value: object = None


def _tokenize(text: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    pos = 0
    line = 1
    line_start = 0
    ws = True
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SyntaxError_(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok_text = m.group()
        col = pos - line_start + 1
        if kind == "ws":
            ws = True
        else:
            value: object = None
            if kind == "int":
                value = int(tok_text)
            elif kind == "qatom":
                value = _unescape(tok_text[1:-1])
                kind = "name"
            elif kind == "str":
                value = _unescape(tok_text[1:-1])
            elif kind == "sym" and tok_text == ".":
                # end token: '.' followed by whitespace, comment or eof
                nxt = text[m.end() : m.end() + 1]
                if nxt == "" or nxt.isspace() or nxt == "%":
                    kind = "end"
            elif kind == "sym" and tok_text.endswith(".") and len(tok_text) > 1:
                nxt = text[m.end() : m.end() + 1]
                if nxt == "" or nxt.isspace() or nxt == "%":
                    # split trailing end dot from a symbol run, e.g. "=." never valid but "!." handled by punct
                    tokens.append(_Tok("sym", tok_text[:-1], pos, line, col, ws, None))
                    tokens.append(_Tok("end", ".", m.end() - 1, line, col + len(tok_text) - 1, False))
                    ws = False
                    pos, line, line_start = _advance(text, pos, m.end(), line, line_start)
                    continue
            if kind == "name" and value is None:
                value = tok_text
            tokens.append(_Tok(kind, tok_text, pos, line, col, ws, value))
            ws = False
        pos, line, line_start = _advance(text, pos, m.end(), line, line_start)
    tokens.append(_Tok("eof", "", n, line, n - line_start + 1, True))
    return tokens


def _advance(text, start, end, line, line_start):
    chunk = text[start:end]
    newlines = chunk.count("\n")
    if newlines:
        line += newlines
        line_start = start + chunk.rindex("\n") + 1
    return end, line, line_start


# -- operator table ------------------------------------------------------------

_INFIX_OPS = {
    ":-": (1200, "xfx"),
    ";": (1100, "xfy"),
    ",": (1000, "xfy"),
    "=": (700, "xfx"),
    "\\=": (700, "xfx"),
    "==": (700, "xfx"),
    "\\==": (700, "xfx"),
    "<": (700, "xfx"),
    "=<": (700, "xfx"),
    ">": (700, "xfx"),
    ">=": (700, "xfx"),
    "+": (500, "yfx"),
    "-": (500, "yfx"),
}
_PREFIX_OPS = {"\\+": (900, "fy")}


class _Reader:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.varmap: dict[str, Var] = {}

    @property
    def tok(self) -> _Tok:
        return self.tokens[self.i]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise SyntaxError_(message, tok.line, tok.col)

    def next(self) -> _Tok:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            self.error(f"expected {want!r}, found {t.text or t.kind!r}")
        return self.next()

    def _infix_name(self, t: _Tok) -> str | None:
        if t.kind in ("sym", "punct") and t.text in _INFIX_OPS:
            return t.text
        return None

    def parse(self, max_prec: int) -> Term:
        left, left_prec = self.parse_primary(max_prec)
        while True:
            t = self.tok
            op = self._infix_name(t)
            if op is None:
                break
            prec, typ = _INFIX_OPS[op]
            if prec > max_prec:
                break
            left_max = prec - 1 if typ[0] == "x" else prec
            right_max = prec - 1 if typ[2] == "x" else prec
            if left_prec > left_max:
                break
            self.next()
            right = self.parse(right_max)
            left = Compound(op, (left, right))
            left_prec = prec
        return left

    def parse_arglist(self) -> list[Term]:
        args = [self.parse(999)]
        while self.tok.kind == "punct" and self.tok.text == ",":
            self.next()
            args.append(self.parse(999))
        return args

    def parse_primary(self, max_prec: int) -> tuple[Term, int]:
        t = self.next()
        if t.kind == "int":
            return Int(t.value), 0
        if t.kind == "str":
            return Str(t.value), 0
        if t.kind == "var":
            if t.text == "_":
                return Var("_"), 0
            v = self.varmap.get(t.text)
            if v is None:
                v = self.varmap[t.text] = Var(t.text)
            return v, 0
        if t.kind == "punct" and t.text == "(":
            inner = self.parse(1200)
            self.expect("punct", ")")
            return inner, 0
        if t.kind == "punct" and t.text == "[":
            if self.tok.kind == "punct" and self.tok.text == "]":
                self.next()
                return self._maybe_call("[]", t)
            items = self.parse_arglist()
            tail: Term = NIL
            if self.tok.kind == "punct" and self.tok.text == "|":
                self.next()
                tail = self.parse(999)
            self.expect("punct", "]")
            return make_list(items, tail), 0
        if t.kind == "punct" and t.text in ("!", ";"):
            return Atom(t.text), 0
        if t.kind == "sym" and t.text == "-" and self.tok.kind == "int" and not self.tok.ws_before:
            n = self.next()
            return Int(-n.value), 0
        if t.kind in ("name", "sym"):
            name = t.value if t.kind == "name" else t.text
            if self.tok.kind == "punct" and self.tok.text == "(" and not self.tok.ws_before:
                return self._maybe_call(name, t)
            if t.kind == "sym" and name in _PREFIX_OPS:
                prec, typ = _PREFIX_OPS[name]
                if prec <= max_prec and not self._at_term_end():
                    arg_max = prec if typ == "fy" else prec - 1
                    arg = self.parse(arg_max)
                    return Compound(name, (arg,)), prec
            prec = _INFIX_OPS.get(name, (0,))[0] if t.kind == "sym" else 0
            return Atom(name), prec
        self.error(f"unexpected {t.text or t.kind!r}", t)
        raise AssertionError  # unreachable

    def _at_term_end(self) -> bool:
        t = self.tok
        return t.kind in ("end", "eof") or (t.kind == "punct" and t.text in (")", "]", ",", "|"))

    def _maybe_call(self, name: str, t: _Tok) -> tuple[Term, int]:
        if self.tok.kind == "punct" and self.tok.text == "(" and not self.tok.ws_before:
            self.next()
            args = self.parse_arglist()
            self.expect("punct", ")")
            return Compound(name, args), 0
        return Atom(name), 0

    def read_clause(self) -> Term | None:
        if self.tok.kind == "eof":
            return None
        self.varmap = {}
        term = self.parse(1200)
        self.expect("end")
        return term


def parse_term(text: str) -> Term:
    """Parse a single term (a trailing ``.`` is optional)."""
    reader = _Reader(text if text.rstrip().endswith(".") else text + " .")
    term = reader.read_clause()
    if term is None:
        raise SyntaxError_("empty term", 1, 1)
    if reader.tok.kind != "eof":
        reader.error("trailing input after term")
    return term


def parse_query(text: str) -> tuple[Term, dict[str, Var]]:
    """Parse a goal; also return the named variables in it."""
    reader = _Reader(text if text.rstrip().endswith(".") else text + " .")
    term = reader.read_clause()
    if term is None:
        raise SyntaxError_("empty query", 1, 1)
    return term, dict(reader.varmap)


def conjuncts(term: Term) -> list[Term]:
    out = []
    while isinstance(term, Compound) and term.functor == "," and term.arity == 2:
        out.append(term.args[0])
        term = term.args[1]
    out.append(term)
    return out


def _disjuncts(term: Term) -> list[Term]:
    out = []
    while isinstance(term, Compound) and term.functor == ";" and term.arity == 2:
        out.append(term.args[0])
        term = term.args[1]
    out.append(term)
    return out


def _is_disj(term: Term) -> bool:
    return isinstance(term, Compound) and term.functor == ";" and term.arity == 2


def _contains_cut(term: Term) -> bool:
    if term == Atom("!"):
        return True
    if isinstance(term, Compound) and term.functor in (",", ";") and term.arity == 2:
        return any(_contains_cut(a) for a in term.args)
    return False


def parse_clauses(text: str) -> list[Clause]:
    """Read all clauses of ``text`` in textual order.

    A disjunction forming a whole clause body becomes one clause per
    branch; a disjunction nested inside a body becomes an auxiliary
    predicate whose clauses are the branches, in order.
    """
    reader = _Reader(text)
    lines = text.splitlines()
    clauses: list[Clause] = []
    aux_counter: dict[tuple[str, int], int] = {}
    while True:
        first = reader.tok
        term = reader.read_clause()
        if term is None:
            break
        src = lines[first.line - 1].strip() if first.line - 1 < len(lines) else ""
        if isinstance(term, Compound) and term.functor == ":-" and term.arity == 2:
            head, body = term.args
        elif isinstance(term, Compound) and term.functor == ":-":
            raise SyntaxError_("directives are not supported", first.line, first.col)
        else:
            head, body = term, None
        if isinstance(head, Var) or not isinstance(head, (Atom, Compound)):
            raise SyntaxError_("clause head must be an atom or compound", first.line, first.col)
        if isinstance(head, Compound) and head.functor in (",", ";", "\\+"):
            raise SyntaxError_(f"cannot define control construct {head.functor}", first.line, first.col)
        if body is None:
            clauses.append(Clause(head, [], first.line, src))
            continue
        branches = _disjuncts(body) if _is_disj(body) else [body]
        for branch in branches:
            goals: list[Term] = []
            for goal in conjuncts(branch):
                goals.append(_lift(goal, head, clauses, aux_counter, first, src))
            clauses.append(Clause(head, goals, first.line, src))
    return clauses


def _lift(goal, head, clauses, aux_counter, first, src) -> Term:
    if isinstance(goal, Var):
        return Compound("call", (goal,))
    if not _is_disj(goal):
        return goal
    if _contains_cut(goal):
        raise SyntaxError_("cut inside a nested disjunction is not supported", first.line, first.col)
    key = indicator_of(head)
    aux_counter[key] = aux_counter.get(key, 0) + 1
    aux_vars = unique_variables(goal)
    name = f"{key[0]}/{key[1]}$or{aux_counter[key]}"
    aux_head: Term = Compound(name, aux_vars) if aux_vars else Atom(name)
    for branch in _disjuncts(goal):
        body = [_lift(g, aux_head, clauses, aux_counter, first, src) for g in conjuncts(branch)]
        clauses.append(Clause(aux_head, body, first.line, src))
    return aux_head
