"""Minil syntax tree."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Iterator, Optional

BUILTINS = ("len", "concat", "parse_int")


@dataclass(frozen=True, order=True)
class SourceRange:
    class_id: str
    start: int  # byte offset, 0-based
    length: int  # bytes
    start_line: int
    end_line: int

    @property
    def end(self) -> int:
        return self.start + self.length

    def contains(self, other: "SourceRange") -> bool:
        return (
            self.class_id == other.class_id
            and self.start <= other.start
            and other.end <= self.end
        )


@dataclass(eq=False)
class Node:
    id: int = field(default=-1, init=False)
    range: SourceRange = field(default=None, init=False)  # type: ignore[assignment]
    parent: Optional["Node"] = field(default=None, init=False, repr=False)
    slot: tuple[str, int] = field(default=("root", 0), init=False)
    non_hoistable: bool = field(default=False, init=False)

    _children: ClassVar[tuple[str, ...]] = ()

    @property
    def kind(self) -> str:
        return type(self).__name__

    @property
    def line(self) -> int:
        return self.range.start_line

    @property
    def class_id(self) -> str:
        return self.range.class_id

    def children(self) -> Iterator[tuple[str, int, "Node"]]:
        for name in self._children:
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, list):
                for i, child in enumerate(value):
                    yield name, i, child
            else:
                yield name, 0, value

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed([c for _, _, c in node.children()]))

    def enclosing(self, kind: type) -> Optional["Node"]:
        node = self.parent
        while node is not None and not isinstance(node, kind):
            node = node.parent
        return node


# -- declarations ---------------------------------------------------------------


@dataclass(eq=False)
class CompilationUnit(Node):
    class_id: str = ""  # type: ignore[assignment]
    qualified_name: str = ""
    classes: list["ClassDecl"] = field(default_factory=list)
    source: str = field(default="", repr=False)
    _children = ("classes",)

    def __post_init__(self):
        self._nodes: list[Node] = []
        self._line_starts: list[int] | None = None

    @property
    def nodes(self) -> list[Node]:
        """All nodes indexed by id."""
        return self._nodes

    def text_of(self, rng: SourceRange) -> str:
        raw = self.source.encode("utf-8")
        return raw[rng.start : rng.end].decode("utf-8")

    def find_class(self, name: str) -> Optional["ClassDecl"]:
        for c in self.classes:
            if c.name == name:
                return c
        return None


@dataclass(eq=False)
class ClassDecl(Node):
    name: str = ""
    fields: list["FieldDecl"] = field(default_factory=list)
    methods: list["MethodDecl"] = field(default_factory=list)
    name_range: SourceRange | None = field(default=None, repr=False)
    _children = ("fields", "methods")

    def field_named(self, name: str) -> Optional["FieldDecl"]:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def method_named(self, name: str) -> Optional["MethodDecl"]:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(eq=False)
class FieldDecl(Node):
    name: str = ""
    name_range: SourceRange | None = field(default=None, repr=False)


@dataclass(eq=False)
class Param(Node):
    name: str = ""
    name_range: SourceRange | None = field(default=None, repr=False)


@dataclass(eq=False)
class MethodDecl(Node):
    name: str = ""
    params: list[Param] = field(default_factory=list)
    body: "Block" = None  # type: ignore[assignment]
    is_test: bool = False
    name_range: SourceRange | None = field(default=None, repr=False)
    _children = ("params", "body")

    @property
    def owner(self) -> ClassDecl:
        return self.parent  # type: ignore[return-value]


# -- statements ---------------------------------------------------------------------


class Stmt(Node):
    pass


@dataclass(eq=False)
class Block(Stmt):
    stmts: list[Stmt] = field(default_factory=list)
    _children = ("stmts",)


@dataclass(eq=False)
class VarDecl(Stmt):
    name: str = ""
    init: "Expr" = None  # type: ignore[assignment]
    name_range: SourceRange | None = field(default=None, repr=False)
    _children = ("init",)


@dataclass(eq=False)
class Assign(Stmt):
    target: "Expr" = None  # type: ignore[assignment]  SimpleName or FieldAccess
    value: "Expr" = None  # type: ignore[assignment]
    _children = ("target", "value")


@dataclass(eq=False)
class Return(Stmt):
    value: Optional["Expr"] = None
    _children = ("value",)


@dataclass(eq=False)
class If(Stmt):
    cond: "Expr" = None  # type: ignore[assignment]
    then: Block = None  # type: ignore[assignment]
    orelse: Optional[Stmt] = None  # Block or If
    _children = ("cond", "then", "orelse")


@dataclass(eq=False)
class While(Stmt):
    cond: "Expr" = None  # type: ignore[assignment]
    body: Block = None  # type: ignore[assignment]
    _children = ("cond", "body")


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: "Expr" = None  # type: ignore[assignment]
    _children = ("expr",)


@dataclass(eq=False)
class Assert(Stmt):
    expr: "Expr" = None  # type: ignore[assignment]
    _children = ("expr",)


# -- expressions ---------------------------------------------------------------------


class Expr(Node):
    pass


@dataclass(eq=False)
class MethodInvoc(Expr):
    receiver: Optional[Expr] = None  # None: implicit this
    name: str = ""
    args: list[Expr] = field(default_factory=list)
    name_range: SourceRange | None = field(default=None, repr=False)
    target: Optional[MethodDecl] = field(default=None, repr=False)  # implicit-this calls
    _children = ("receiver", "args")


@dataclass(eq=False)
class BuiltinInvoc(Expr):
    name: str = ""
    args: list[Expr] = field(default_factory=list)
    _children = ("args",)


@dataclass(eq=False)
class FieldAccess(Expr):
    receiver: Expr = None  # type: ignore[assignment]
    name_range: SourceRange | None = field(default=None, repr=False)
    field: str = ""
    _children = ("receiver",)


@dataclass(eq=False)
class NewObject(Expr):
    class_name: str = ""
    args: list[Expr] = field(default_factory=list)
    _children = ("args",)


@dataclass(eq=False)
class SimpleName(Expr):
    name: str = ""
    decl: Optional[Node] = field(default=None, repr=False)  # VarDecl, Param or FieldDecl


@dataclass(eq=False)
class This(Expr):
    pass


@dataclass(eq=False)
class Literal(Expr):
    value: object = None  # None, int, str or bool


@dataclass(eq=False)
class BinaryOp(Expr):
    op: str = ""
    left: Expr = None  # type: ignore[assignment]
    right: Expr = None  # type: ignore[assignment]
    _children = ("left", "right")


@dataclass(eq=False)
class UnaryOp(Expr):
    op: str = ""
    operand: Expr = None  # type: ignore[assignment]
    _children = ("operand",)


DECLARATIONS = (VarDecl, Param, FieldDecl)

_ATTRS = {
    CompilationUnit: (),
    ClassDecl: ("name",),
    FieldDecl: ("name",),
    Param: ("name",),
    MethodDecl: ("name", "is_test"),
    VarDecl: ("name",),
    MethodInvoc: ("name",),
    BuiltinInvoc: ("name",),
    FieldAccess: ("field",),
    NewObject: ("class_name",),
    SimpleName: ("name",),
    Literal: ("value",),
    BinaryOp: ("op",),
    UnaryOp: ("op",),
}


def structure(node: Node):
    """Position-free structural summary used for round-trip comparison."""
    attrs = []
    for name in _ATTRS.get(type(node), ()):
        value = getattr(node, name)
        attrs.append((name, type(value).__name__, value))
    if isinstance(node, SimpleName) and node.decl is not None:
        attrs.append(("decl", node.decl.kind, getattr(node.decl, "name", "")))
    if isinstance(node, MethodInvoc):
        attrs.append(("implicit", node.receiver is None))
    kids = []
    for role, idx, child in node.children():
        kids.append((role, idx, structure(child)))
    return (node.kind, tuple(attrs), tuple(kids))
