"""Canonical Minil pretty-printer."""

from __future__ import annotations

from . import ast as A
from .parser import PRECEDENCE

_INDENT = "  "
_POSTFIX = 100
_UNARY = 50


def _quote(value: str) -> str:
    escaped = (
        value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    )
    return f'"{escaped}"'


def _prec(e: A.Expr) -> int:
    if isinstance(e, A.BinaryOp):
        return PRECEDENCE[e.op]
    if isinstance(e, A.UnaryOp):
        return _UNARY
    return _POSTFIX


def expr_text(e: A.Expr) -> str:
    if isinstance(e, A.Literal):
        v = e.value
        if v is None:
            return "null"
        if v is True:
            return "true"
        if v is False:
            return "false"
        if isinstance(v, int):
            return str(v)
        return _quote(v)
    if isinstance(e, A.SimpleName):
        return e.name
    if isinstance(e, A.This):
        return "this"
    if isinstance(e, A.FieldAccess):
        return f"{_operand(e.receiver, _POSTFIX)}.{e.field}"
    if isinstance(e, A.MethodInvoc):
        args = ", ".join(expr_text(a) for a in e.args)
        if e.receiver is None:
            return f"{e.name}({args})"
        return f"{_operand(e.receiver, _POSTFIX)}.{e.name}({args})"
    if isinstance(e, A.BuiltinInvoc):
        return f"{e.name}({', '.join(expr_text(a) for a in e.args)})"
    if isinstance(e, A.NewObject):
        return f"new {e.class_name}({', '.join(expr_text(a) for a in e.args)})"
    if isinstance(e, A.UnaryOp):
        return f"{e.op}{_operand(e.operand, _UNARY)}"
    if isinstance(e, A.BinaryOp):
        p = PRECEDENCE[e.op]
        left = _operand(e.left, p)
        right = _operand(e.right, p + 1)
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e.kind}")


def _operand(e: A.Expr, min_prec: int) -> str:
    text = expr_text(e)
    return f"({text})" if _prec(e) < min_prec else text


class _Printer:
    def __init__(self):
        self.lines: list[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append(_INDENT * depth + text)

    def unit(self, unit: A.CompilationUnit) -> str:
        for i, cls in enumerate(unit.classes):
            if i:
                self.lines.append("")
            self.cls(cls)
        return "\n".join(self.lines) + "\n" if self.lines else ""

    def cls(self, cls: A.ClassDecl) -> None:
        self.emit(0, f"class {cls.name} {{")
        for f in cls.fields:
            self.emit(1, f"field {f.name};")
        for m in cls.methods:
            prefix = "test method" if m.is_test else "method"
            params = ", ".join(p.name for p in m.params)
            self.emit(1, f"{prefix} {m.name}({params}) {{")
            self.body(m.body, 2)
            self.emit(1, "}")
        self.emit(0, "}")

    def body(self, block: A.Block, depth: int) -> None:
        for s in block.stmts:
            self.stmt(s, depth)

    def stmt(self, s: A.Stmt, depth: int) -> None:
        if isinstance(s, A.VarDecl):
            self.emit(depth, f"var {s.name} = {expr_text(s.init)};")
        elif isinstance(s, A.Assign):
            self.emit(depth, f"{expr_text(s.target)} = {expr_text(s.value)};")
        elif isinstance(s, A.Return):
            self.emit(depth, "return;" if s.value is None else f"return {expr_text(s.value)};")
        elif isinstance(s, A.ExprStmt):
            self.emit(depth, f"{expr_text(s.expr)};")
        elif isinstance(s, A.Assert):
            self.emit(depth, f"assert {expr_text(s.expr)};")
        elif isinstance(s, A.While):
            self.emit(depth, f"while ({expr_text(s.cond)}) {{")
            self.body(s.body, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, A.If):
            self.if_chain(s, depth, "")
        elif isinstance(s, A.Block):
            # only produced by transforms; nested blocks have no syntax of their own
            self.body(s, depth)
        else:
            raise TypeError(f"not a statement: {s.kind}")

    def if_chain(self, s: A.If, depth: int, lead: str) -> None:
        head = f"if ({expr_text(s.cond)}) {{"
        if lead:
            self.lines[-1] += f" {lead}{head}"
        else:
            self.emit(depth, head)
        self.body(s.then, depth + 1)
        self.emit(depth, "}")
        if s.orelse is None:
            return
        if isinstance(s.orelse, A.If):
            self.if_chain(s.orelse, depth, "else ")
        else:
            self.lines[-1] += " else {"
            self.body(s.orelse, depth + 1)
            self.emit(depth, "}")


def print_unit(unit: A.CompilationUnit) -> str:
    return _Printer().unit(unit)
