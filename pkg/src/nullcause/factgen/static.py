"""Semantic and code facts from covered lines."""

from __future__ import annotations

from ..logic.terms import Atom, Int, Str, tup
from ..minil import ast as A
from ..minil.program import Program, key_of
from .fact import Fact, line_term, range_term, sort_facts, value_term
from .naming import BUILTIN_ATOMS, EntityNaming

EXPR_KINDS = {
    A.MethodInvoc: "m_invoc",
    A.BuiltinInvoc: "builtin_invoc",
    A.FieldAccess: "field_access",
    A.NewObject: "new_object",
    A.Literal: "literal",
    A.This: "this",
    A.BinaryOp: "binary_op",
    A.UnaryOp: "unary_op",
}

DECL_NAME_KINDS = {
    A.VarDecl: "var_decl",
    A.Param: "param_decl",
    A.FieldDecl: "field_decl",
    A.MethodDecl: "method_decl",
    A.ClassDecl: "class_decl",
}


def _enclosing_method(node: A.Node) -> A.MethodDecl | None:
    return node.enclosing(A.MethodDecl)


def single_stmt_return_call(method: A.MethodDecl) -> bool:
    stmts = method.body.stmts
    return (
        len(stmts) == 1
        and isinstance(stmts[0], A.Return)
        and isinstance(stmts[0].value, A.MethodInvoc)
    )


class _Extractor:
    def __init__(self, program: Program, naming: EntityNaming, covered, call_targets, field_targets):
        self.program = program
        self.naming = naming
        self.covered = set(covered)
        self.call_targets = call_targets or {}
        self.field_targets = field_targets or {}
        self.facts: list[Fact] = []

    def emit(self, predicate: str, *args, at=None) -> None:
        self.facts.append(Fact(predicate, args, at))

    def atom(self, node: A.Node) -> Atom:
        name = self.naming.atom(node)
        if name is None:
            raise KeyError(f"no atom for {node.kind} at {node.range}")
        return Atom(name)

    def line(self, node: A.Node):
        return line_term(node.range.class_id, node.range.start_line)

    def on_covered(self, node: A.Node) -> bool:
        return (node.range.class_id, node.range.start_line) in self.covered

    def parent_atom(self, node: A.Node) -> Atom:
        parent = node.parent
        if isinstance(parent, A.Expr) and parent in self.naming:
            return self.atom(parent)
        method = _enclosing_method(node)
        if method is not None:
            return self.atom(method)
        owner = node.enclosing(A.ClassDecl)
        return self.atom(owner) if owner is not None else Atom(node.range.class_id)

    def slot(self, node: A.Node):
        role, idx = node.slot
        return tup(Atom(role), Int(idx))

    def text(self, rng: A.SourceRange) -> str:
        return self.program.unit(rng.class_id).text_of(rng)

    # -- targets
    def methods_for(self, inv: A.MethodInvoc) -> list[A.MethodDecl]:
        observed = self.call_targets.get(key_of(inv))
        if observed:
            return [self.program.node(k) for k in observed]
        if inv.receiver is None:
            return [inv.target]
        return self.program.methods_named(inv.name)

    def fields_for(self, node: A.FieldAccess) -> list[A.FieldDecl]:
        observed = self.field_targets.get(key_of(node))
        if observed:
            return [self.program.node(k) for k in observed]
        return self.program.fields_named(node.field)

    # -- declarations
    def declarations(self) -> None:
        for unit in self.program.units:
            self.emit("class", Atom(unit.class_id), Atom(unit.qualified_name), at=unit.range)
            for cls in unit.classes:
                self.name_fact(cls, "class_decl", Atom(unit.class_id), tup(Atom("classes"), Int(cls.slot[1])), cls.name_range, cls.name)
                catom = self.atom(cls)
                for f in cls.fields:
                    self.emit("field_of", self.atom(f), catom, at=f.range)
                    self.name_fact(f, "field_decl", catom, self.slot(f), f.name_range, f.name)
                for m in cls.methods:
                    matom = self.atom(m)
                    self.emit("method_of", matom, catom, at=m.range)
                    self.emit(
                        "method_range", matom, Atom(unit.class_id),
                        Int(m.range.start_line), Int(m.range.end_line), at=m.range,
                    )
                    self.name_fact(m, "method_decl", catom, self.slot(m), m.name_range, m.name)
                    if m.is_test:
                        self.emit("test_method", matom, at=m.range)
                    if single_stmt_return_call(m):
                        self.emit("single_stmt_return_call", matom, at=m.range)
                    for i, p in enumerate(m.params, start=1):
                        patom = self.atom(p)
                        self.emit("param", patom, Int(i), matom, at=p.range)
                        self.emit("param_line", patom, self.line(p), at=p.range)
                        self.name_fact(p, "param_decl", matom, self.slot(p), p.name_range, p.name)
        for name, atom in BUILTIN_ATOMS.items():
            self.emit("builtin", Atom(atom))

    def name_fact(self, node, kind, parent, role, rng, text) -> None:
        self.emit("name", self.atom(node), Atom(kind), parent, role, range_term(rng), Atom(text), at=rng)

    # -- statements and expressions on covered lines
    def body(self) -> None:
        for unit in self.program.units:
            for node in unit.walk():
                if not isinstance(node, (A.Stmt, A.Expr)) or isinstance(node, A.Block):
                    continue
                if not self.on_covered(node):
                    continue
                if isinstance(node, A.Stmt):
                    self.stmt(node)
                else:
                    self.expr(node)

    def stmt(self, s: A.Stmt) -> None:
        at = s.range
        line = self.line(s)
        if isinstance(s, A.VarDecl):
            self.emit("assign", self.atom(s), self.atom(s.init), line, at=at)
            self.name_fact(s, "var_decl", self.atom(_enclosing_method(s)), self.slot(s), s.name_range, s.name)
        elif isinstance(s, A.Assign):
            rhs = self.atom(s.value)
            target = s.target
            if isinstance(target, A.SimpleName):
                self.emit("assign", self.atom(target), rhs, line, at=at)
            else:
                for f in self.fields_for(target):
                    self.emit("assign", self.atom(f), rhs, line, at=at)
        elif isinstance(s, A.Return) and s.value is not None:
            self.emit("return", self.atom(s.value), self.atom(_enclosing_method(s)), line, at=at)

    def expr(self, e: A.Expr) -> None:
        at = e.range
        line = self.line(e)
        if isinstance(e, A.SimpleName):
            atom = self.atom(e)
            if e.slot[0] != "target":  # a write, not a read
                self.emit("ref", atom, self.parent_atom(e), line, at=at)
            self.emit("name", atom, Atom("simple_name"), self.parent_atom(e), self.slot(e), range_term(e.range), Atom(e.name), at=at)
            return
        eatom = self.atom(e)
        self.emit(
            "expr", eatom, Atom(EXPR_KINDS[type(e)]), self.parent_atom(e), self.slot(e),
            range_term(e.range), Str(self.text(e.range)), at=at,
        )
        if isinstance(e, A.MethodInvoc):
            for m in self.methods_for(e):
                self.emit("method_invoc", eatom, self.atom(m), line, at=at)
                self.emit("name", self.atom(m), Atom("method_name"), eatom, tup(Atom("name"), Int(0)), range_term(e.name_range), Atom(e.name), at=e.name_range)
            if e.receiver is not None:
                self.emit("receiver", self.atom(e.receiver), eatom, line, at=at)
            self.arguments(e, eatom)
        elif isinstance(e, A.BuiltinInvoc):
            self.emit("method_invoc", eatom, Atom(BUILTIN_ATOMS[e.name]), line, at=at)
            self.arguments(e, eatom)
        elif isinstance(e, A.NewObject):
            init = self.program.classes[e.class_name].method_named("init")
            if init is not None:
                self.emit("method_invoc", eatom, self.atom(init), line, at=at)
            self.arguments(e, eatom)
        elif isinstance(e, A.FieldAccess):
            self.emit("receiver", self.atom(e.receiver), eatom, line, at=at)
            for f in self.fields_for(e):
                self.emit("name", self.atom(f), Atom("field_name"), eatom, tup(Atom("field"), Int(0)), range_term(e.name_range), Atom(e.field), at=e.name_range)
                is_write = e.slot[0] == "target"
                if not is_write:
                    self.emit("field_read", eatom, self.atom(f), line, at=at)
        elif isinstance(e, A.Literal):
            self.emit("literal", eatom, value_term(e.value), line, at=at)

    def arguments(self, e, eatom) -> None:
        for i, arg in enumerate(e.args, start=1):
            self.emit("argument", self.atom(arg), Int(i), eatom, at=arg.range)


def extract_facts(
    program: Program,
    naming: EntityNaming,
    covered_lines,
    *,
    call_targets: dict | None = None,
    field_targets: dict | None = None,
) -> list[Fact]:
    """Semantic and code facts for the covered part of ``program``.

    ``call_targets``/``field_targets`` map node keys to the method/field keys
    observed at run time; without them dispatch falls back to name lookup.
    """
    ex = _Extractor(program, naming, covered_lines, call_targets, field_targets)
    ex.declarations()
    ex.body()
    return sort_facts(ex.facts)
