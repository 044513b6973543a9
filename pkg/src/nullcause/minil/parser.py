"""Lexer, parser and name resolution for Minil."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast as A
from .errors import MinilNameError, NotFound, ParseError

KEYWORDS = {
    "class", "field", "method", "test", "var", "return", "if", "else",
    "while", "assert", "new", "this", "null", "true", "false",
}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<op>==|!=|&&|\|\||[-+*<=!(){};,.])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass
class Token:
    kind: str  # name, keyword, int, str, op, eof
    text: str
    start: int  # char offset
    end: int
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "name" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, pos, m.end(), line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", n, n, line, n - line_start + 1))
    return tokens


def _unescape(text: str, tok: Token) -> str:
    out = []
    i = 1
    while i < len(text) - 1:
        ch = text[i]
        if ch == "\\":
            nxt = text[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"bad escape \\{nxt}", tok.line, tok.column)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class _Positions:
    """Char offset -> byte offset and line lookups."""

    def __init__(self, source: str, class_id: str):
        self.class_id = class_id
        self.ascii = source.isascii()
        if not self.ascii:
            acc = [0]
            for ch in source:
                acc.append(acc[-1] + len(ch.encode("utf-8")))
            self.bytes_at = acc
        self.line_starts = [0] + [m.end() for m in re.finditer("\n", source)]

    def byte(self, char_pos: int) -> int:
        return char_pos if self.ascii else self.bytes_at[char_pos]

    def line_of(self, char_pos: int) -> int:
        import bisect

        return bisect.bisect_right(self.line_starts, char_pos)

    def span(self, start: int, end: int) -> A.SourceRange:
        b0, b1 = self.byte(start), self.byte(end)
        last = max(start, end - 1)
        return A.SourceRange(self.class_id, b0, b1 - b0, self.line_of(start), self.line_of(last))


_BINARY = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<",),
    ("+", "-"),
    ("*",),
]

PRECEDENCE = {op: level for level, ops in enumerate(_BINARY) for op in ops}


class Parser:
    def __init__(self, source: str, class_id: str):
        self.source = source
        self.class_id = class_id
        self.tokens = tokenize(source)
        self.i = 0
        self.pos = _Positions(source, class_id)

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _error(self, message: str, expected=()):
        t = self.tok
        found = t.text or "end of input"
        raise ParseError(f"{message}, found {found!r}", t.line, t.column, expected)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "keyword")

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            self._error(f"expected {text!r}", (text,))
        return t

    def expect_name(self) -> Token:
        t = self.tok
        if t.kind != "name":
            self._error("expected identifier", ("identifier",))
        self.i += 1
        return t

    def _set(self, node: A.Node, first: Token, last: Token) -> A.Node:
        node.range = self.pos.span(first.start, last.end)
        return node

    def _name_range(self, t: Token) -> A.SourceRange:
        return self.pos.span(t.start, t.end)

    @property
    def prev(self) -> Token:
        return self.tokens[self.i - 1]

    # -- declarations
    def parse_unit(self, qualified_name: str) -> A.CompilationUnit:
        unit = A.CompilationUnit(class_id=self.class_id, qualified_name=qualified_name, source=self.source)
        while self.tok.kind != "eof":
            if not self.at("class"):
                self._error("expected class declaration", ("class",))
            unit.classes.append(self.parse_class())
        unit.range = self.pos.span(0, len(self.source)) if self.source else A.SourceRange(self.class_id, 0, 0, 1, 1)
        return unit

    def parse_class(self) -> A.ClassDecl:
        first = self.expect("class")
        name = self.expect_name()
        cls = A.ClassDecl(name=name.text, name_range=self._name_range(name))
        self.expect("{")
        while not self.at("}"):
            if self.at("field"):
                f0 = self.expect("field")
                fname = self.expect_name()
                last = self.expect(";")
                fd = A.FieldDecl(name=fname.text, name_range=self._name_range(fname))
                cls.fields.append(self._set(fd, f0, last))
            elif self.at("method") or self.at("test"):
                cls.methods.append(self.parse_method())
            else:
                self._error("expected member declaration", ("field", "method", "test", "}"))
        last = self.expect("}")
        return self._set(cls, first, last)

    def parse_method(self) -> A.MethodDecl:
        first = self.tok
        is_test = self.accept("test") is not None
        self.expect("method")
        name = self.expect_name()
        m = A.MethodDecl(name=name.text, is_test=is_test, name_range=self._name_range(name))
        self.expect("(")
        if not self.at(")"):
            while True:
                p = self.expect_name()
                m.params.append(self._set(A.Param(name=p.text, name_range=self._name_range(p)), p, p))
                if not self.accept(","):
                    break
        self.expect(")")
        m.body = self.parse_block()
        return self._set(m, first, self.prev)

    # -- statements
    def parse_block(self) -> A.Block:
        first = self.expect("{")
        block = A.Block()
        while not self.at("}"):
            if self.tok.kind == "eof":
                self._error("unterminated block", ("}",))
            block.stmts.append(self.parse_stmt())
        last = self.expect("}")
        return self._set(block, first, last)

    def parse_stmt(self) -> A.Stmt:
        first = self.tok
        if self.accept("var"):
            name = self.expect_name()
            self.expect("=")
            init = self.parse_expr()
            last = self.expect(";")
            return self._set(A.VarDecl(name=name.text, init=init, name_range=self._name_range(name)), first, last)
        if self.accept("return"):
            value = None if self.at(";") else self.parse_expr()
            last = self.expect(";")
            return self._set(A.Return(value=value), first, last)
        if self.at("if"):
            return self.parse_if()
        if self.accept("while"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return self._set(A.While(cond=cond, body=body), first, self.prev)
        if self.accept("assert"):
            expr = self.parse_expr()
            last = self.expect(";")
            return self._set(A.Assert(expr=expr), first, last)
        if self.at("{"):
            self._error("expected statement", ("var", "return", "if", "while", "assert", "expression"))
        expr = self.parse_expr()
        if self.accept("="):
            if not isinstance(expr, (A.SimpleName, A.FieldAccess)):
                raise ParseError("invalid assignment target", first.line, first.column)
            value = self.parse_expr()
            last = self.expect(";")
            return self._set(A.Assign(target=expr, value=value), first, last)
        last = self.expect(";")
        return self._set(A.ExprStmt(expr=expr), first, last)

    def parse_if(self) -> A.If:
        first = self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_block()
        orelse = None
        if self.accept("else"):
            orelse = self.parse_if() if self.at("if") else self.parse_block()
        return self._set(A.If(cond=cond, then=then, orelse=orelse), first, self.prev)

    # -- expressions
    def parse_expr(self, level: int = 0) -> A.Expr:
        if level == len(_BINARY):
            return self.parse_unary()
        first = self.tok
        left = self.parse_expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _BINARY[level]:
            op = self.tok.text
            self.i += 1
            right = self.parse_expr(level + 1)
            left = self._set(A.BinaryOp(op=op, left=left, right=right), first, self.prev)
        return left

    def parse_unary(self) -> A.Expr:
        first = self.tok
        if self.accept("!"):
            operand = self.parse_unary()
            return self._set(A.UnaryOp(op="!", operand=operand), first, self.prev)
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        first = self.tok
        expr = self.parse_primary()
        while self.accept("."):
            name = self.expect_name()
            if self.at("("):
                args = self.parse_args()
                expr = A.MethodInvoc(receiver=expr, name=name.text, args=args, name_range=self._name_range(name))
            else:
                expr = A.FieldAccess(receiver=expr, field=name.text, name_range=self._name_range(name))
            self._set(expr, first, self.prev)
        return expr

    def parse_args(self) -> list[A.Expr]:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if not self.accept(","):
                    break
        self.expect(")")
        return args

    def parse_primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return self._set(A.Literal(value=int(t.text)), t, t)
        if t.kind == "str":
            self.i += 1
            return self._set(A.Literal(value=_unescape(t.text, t)), t, t)
        if t.kind == "keyword":
            if t.text in ("null", "true", "false"):
                self.i += 1
                value = {"null": None, "true": True, "false": False}[t.text]
                return self._set(A.Literal(value=value), t, t)
            if t.text == "this":
                self.i += 1
                return self._set(A.This(), t, t)
            if t.text == "new":
                self.i += 1
                cname = self.expect_name()
                args = self.parse_args()
                return self._set(A.NewObject(class_name=cname.text, args=args), t, self.prev)
        if t.kind == "name":
            self.i += 1
            if self.at("("):
                args = self.parse_args()
                if t.text in A.BUILTINS:
                    node = A.BuiltinInvoc(name=t.text, args=args)
                else:
                    node = A.MethodInvoc(receiver=None, name=t.text, args=args, name_range=self._name_range(t))
                return self._set(node, t, self.prev)
            return self._set(A.SimpleName(name=t.text), t, t)
        if self.accept("("):
            expr = self.parse_expr()
            self.expect(")")
            return expr
        self._error("expected expression", ("literal", "identifier", "this", "new", "("))


# -- post-processing -----------------------------------------------------------


def _link(unit: A.CompilationUnit) -> None:
    """Assign pre-order ids, parents and slots."""
    nodes = unit.nodes
    nodes.clear()
    for node in unit.walk():
        node.id = len(nodes)
        nodes.append(node)
        for role, idx, child in node.children():
            child.parent = node
            child.slot = (role, idx)


def _mark_non_hoistable(unit: A.CompilationUnit) -> None:
    for node in unit.walk():
        if isinstance(node, A.While):
            roots = [node.cond]
        elif isinstance(node, A.BinaryOp) and node.op in ("&&", "||"):
            roots = [node.right]
        else:
            continue
        for root in roots:
            for sub in root.walk():
                sub.non_hoistable = True


def _err_at(unit: A.CompilationUnit, rng: A.SourceRange, message: str, cls=MinilNameError):
    prefix = unit.source.encode("utf-8")[: rng.start].decode("utf-8")
    line = prefix.count("\n") + 1
    column = len(prefix) - (prefix.rfind("\n") + 1) + 1
    return cls(message, line, column)


class _Resolver:
    def __init__(self, unit: A.CompilationUnit):
        self.unit = unit

    def run(self) -> None:
        seen_classes = set()
        for cls in self.unit.classes:
            if cls.name in seen_classes:
                raise _err_at(self.unit, cls.name_range, f"duplicate class {cls.name}")
            seen_classes.add(cls.name)
            members = set()
            for f in cls.fields:
                if f.name in members:
                    raise _err_at(self.unit, f.name_range, f"duplicate field {f.name}")
                members.add(f.name)
            methods = set()
            for m in cls.methods:
                if m.name in methods:
                    raise _err_at(self.unit, m.name_range, f"duplicate method {m.name}")
                if m.name in A.BUILTINS:
                    raise _err_at(self.unit, m.name_range, f"method name {m.name} is reserved", ParseError)
                methods.add(m.name)
            for m in cls.methods:
                self.method(cls, m)

    def method(self, cls: A.ClassDecl, m: A.MethodDecl) -> None:
        self.cls = cls
        self.in_init = m.name == "init"
        scopes: list[dict[str, A.Node]] = [{}]
        for p in m.params:
            if p.name in scopes[0]:
                raise _err_at(self.unit, p.name_range, f"duplicate parameter {p.name}")
            scopes[0][p.name] = p
        self.block(m.body, scopes)

    def lookup(self, scopes, name):
        for scope in reversed(scopes):
            if name in scope:
                return scope[name]
        return None

    def block(self, block: A.Block, scopes) -> None:
        scopes.append({})
        for stmt in block.stmts:
            self.stmt(stmt, scopes)
        scopes.pop()

    def stmt(self, s: A.Stmt, scopes) -> None:
        if isinstance(s, A.VarDecl):
            self.expr(s.init, scopes)
            if self.lookup(scopes, s.name) is not None:
                raise _err_at(self.unit, s.name_range, f"{s.name} is already declared")
            scopes[-1][s.name] = s
        elif isinstance(s, A.Assign):
            self.expr(s.target, scopes)
            self.expr(s.value, scopes)
        elif isinstance(s, A.Return):
            if s.value is not None:
                if self.in_init:
                    raise _err_at(self.unit, s.range, "init cannot return a value", ParseError)
                self.expr(s.value, scopes)
        elif isinstance(s, A.If):
            self.expr(s.cond, scopes)
            self.block(s.then, scopes)
            if isinstance(s.orelse, A.Block):
                self.block(s.orelse, scopes)
            elif s.orelse is not None:
                self.stmt(s.orelse, scopes)
        elif isinstance(s, A.While):
            self.expr(s.cond, scopes)
            self.block(s.body, scopes)
        elif isinstance(s, (A.ExprStmt, A.Assert)):
            self.expr(s.expr, scopes)
        elif isinstance(s, A.Block):
            self.block(s, scopes)

    def expr(self, e: A.Expr, scopes) -> None:
        if isinstance(e, A.SimpleName):
            decl = self.lookup(scopes, e.name) or self.cls.field_named(e.name)
            if decl is None:
                raise _err_at(self.unit, e.range, f"cannot resolve name {e.name}")
            e.decl = decl
            return
        if isinstance(e, A.MethodInvoc) and e.receiver is None:
            target = self.cls.method_named(e.name)
            if target is None:
                raise _err_at(self.unit, e.range, f"cannot resolve method {e.name}")
            e.target = target
        for _, _, child in e.children():
            self.expr(child, scopes)


def parse(source: str, class_id: str, qualified_name: str | None = None) -> A.CompilationUnit:
    """Parse and resolve one compilation unit."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    unit = Parser(source, class_id).parse_unit(qualified_name or class_id)
    _link(unit)
    _Resolver(unit).run()
    _mark_non_hoistable(unit)
    return unit


def relink(unit: A.CompilationUnit) -> None:
    """Recompute ids, parents, slots and flags after an AST transform."""
    _link(unit)
    for node in unit.walk():
        node.non_hoistable = False
    _mark_non_hoistable(unit)


def node_at(unit: A.CompilationUnit, rng: A.SourceRange) -> A.Node:
    """Innermost node whose range covers ``rng``."""
    best = None
    best_key = None
    for depth_node in _with_depth(unit):
        node, depth = depth_node
        r = node.range
        if r is None or r.class_id != rng.class_id:
            continue
        if r.start <= rng.start and rng.end <= r.end:
            key = (r.length, r.start, -depth)
            if best_key is None or key < best_key:
                best, best_key = node, key
    if best is None:
        raise NotFound(f"no node covers {rng}")
    return best


def _with_depth(unit):
    stack = [(unit, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        for _, _, child in node.children():
            stack.append((child, depth + 1))
