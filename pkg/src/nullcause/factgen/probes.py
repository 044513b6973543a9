"""Probe injection: hoist monitorable expressions into probe variables."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from ..minil import ast as A
from ..minil.program import Program, key_of
from .naming import EntityNaming


class InjectionError(Exception):
    pass


@dataclass(frozen=True)
class Probe:
    name: str
    atom: str
    class_id: str
    line: int
    node_key: tuple[str, int]


@dataclass
class ProbeMap:
    probes: dict[str, Probe] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.probes.values())

    def __len__(self):
        return len(self.probes)


def probe_name(atom: str, line: int) -> str:
    return f"{atom}_line_{line}"


def _eval_children(e: A.Expr) -> list[A.Expr]:
    """Sub-expressions in evaluation order."""
    if isinstance(e, A.MethodInvoc):
        return ([e.receiver] if e.receiver is not None else []) + list(e.args)
    if isinstance(e, (A.BuiltinInvoc, A.NewObject)):
        return list(e.args)
    if isinstance(e, A.FieldAccess):
        return [e.receiver]
    if isinstance(e, A.BinaryOp):
        return [e.left, e.right]
    if isinstance(e, A.UnaryOp):
        return [e.operand]
    return []


def _stmt_roots(s: A.Stmt) -> list[A.Expr]:
    """Top-level expressions a statement evaluates before acting, in order."""
    if isinstance(s, A.VarDecl):
        return [s.init]
    if isinstance(s, A.Assign):
        if isinstance(s.target, A.FieldAccess):
            return [s.target.receiver, s.value]
        return [s.value]
    if isinstance(s, A.Return):
        return [s.value] if s.value is not None else []
    if isinstance(s, A.If):
        return [s.cond]
    if isinstance(s, (A.ExprStmt, A.Assert)):
        return [s.expr]
    return []  # While conditions are never hoisted


def _replace(parent: A.Node, slot: tuple[str, int], new: A.Node) -> None:
    role, idx = slot
    value = getattr(parent, role)
    if isinstance(value, list):
        value[idx] = new
    else:
        setattr(parent, role, new)


class _Injector:
    def __init__(self, naming: EntityNaming, breakpoints):
        self.naming = naming
        self.breakpoints = breakpoints
        self.map = ProbeMap()

    def monitorable(self, e: A.Expr, line: int) -> bool:
        if isinstance(e, (A.Literal, A.This)) or e.non_hoistable:
            return False
        return e.range.start_line == line and e in self.naming

    def method(self, m: A.MethodDecl) -> None:
        names = {p.name for p in m.params}
        self.block(m.body, [names])

    def block(self, block: A.Block, scopes: list[set]) -> None:
        scopes.append(set())
        out: list[A.Stmt] = []
        for s in block.stmts:
            out.extend(self.stmt(s, scopes))
        block.stmts = out
        scopes.pop()

    def visible(self, name: str, scopes) -> bool:
        return any(name in sc for sc in scopes)

    def stmt(self, s: A.Stmt, scopes) -> list[A.Stmt]:
        line = s.range.start_line
        probes: list[A.Stmt] = []
        if (s.range.class_id, line) in self.breakpoints:
            for root in _stmt_roots(s):
                self.hoist(root, line, scopes, probes)
        if isinstance(s, A.VarDecl):
            scopes[-1].add(s.name)
        elif isinstance(s, A.If):
            self.block(s.then, scopes)
            if isinstance(s.orelse, A.If):
                inner = self.stmt(s.orelse, scopes)
                if len(inner) > 1:
                    wrapper = A.Block(stmts=inner)
                    wrapper.range = s.orelse.range
                    s.orelse = wrapper
            elif s.orelse is not None:
                self.block(s.orelse, scopes)
        elif isinstance(s, A.While):
            self.block(s.body, scopes)
        return probes + [s]

    def hoist(self, e: A.Expr, line: int, scopes, probes: list) -> None:
        for child in _eval_children(e):
            self.hoist(child, line, scopes, probes)
        if not self.monitorable(e, line):
            return
        atom = self.naming.atom(e)
        name = probe_name(atom, line)
        if self.visible(name, scopes):
            self.map.errors.append(f"{e.range.class_id}:{line}: probe {name} would be redeclared; skipped")
            return
        parent, slot = e.parent, e.slot
        decl = A.VarDecl(name=name, init=e)
        decl.range = e.enclosing(A.Stmt).range if e.enclosing(A.Stmt) else e.range
        decl.name_range = e.range
        ref = A.SimpleName(name=name, decl=decl)
        ref.range = e.range
        ref.parent, ref.slot = parent, slot
        _replace(parent, slot, ref)
        e.parent, e.slot = decl, ("init", 0)
        scopes[-1].add(name)
        probes.append(decl)
        self.map.probes[name] = Probe(name, atom, e.range.class_id, line, key_of(e))


def inject_probes(program: Program, naming: EntityNaming, breakpoint_lines) -> tuple[Program, ProbeMap]:
    """Return a probed copy of ``program`` plus the probe inventory.

    Nodes of the copy keep their original ids and source ranges, so error
    messages and stack lines match the original program.
    """
    breakpoints = set(breakpoint_lines)
    injector = _Injector(naming, breakpoints)
    units = []
    for unit in program.units:
        clone = copy.deepcopy(unit)
        if any(cid == unit.class_id for cid, _ in breakpoints):
            for cls in clone.classes:
                for m in cls.methods:
                    injector.method(m)
        units.append(clone)
    return Program(units), injector.map
