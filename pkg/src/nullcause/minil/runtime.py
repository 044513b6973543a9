"""Tree-walking interpreter and test runner for Minil."""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol

from . import ast as A
from .errors import RuntimeConfigError
from .program import Program, key_of

DEFAULT_STEP_LIMIT = 1_000_000
DEFAULT_CALL_DEPTH = 200

PROBE_NAME = re.compile(r"(?P<atom>.+)_line_(?P<line>[0-9]+)\Z")

VERDICTS = ("pass", "assert_fail", "npe", "other_error")


@dataclass(frozen=True)
class StackFrame:
    class_name: str
    method: str
    class_id: str
    line: int

    def render(self) -> str:
        return f"  at {self.class_name}.{self.method}({self.class_id}:{self.line})"


@dataclass(frozen=True)
class NpeSignal:
    expr_text: str
    range: A.SourceRange
    kind: str  # deref, builtin_arg or operator


@dataclass(frozen=True)
class ProbeRecord:
    probe_name: str
    is_null: bool
    class_id: str
    line: int


@dataclass
class TestOutcome:
    test_id: str
    verdict: str
    covered_lines: frozenset = frozenset()
    stack: list[StackFrame] = field(default_factory=list)
    npe: Optional[NpeSignal] = None
    probe_records: list[ProbeRecord] = field(default_factory=list)
    message: str = ""
    # node key -> keys of methods actually dispatched / fields actually accessed
    call_targets: dict = field(default_factory=dict, repr=False)
    field_targets: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "verdict": self.verdict,
            "covered_lines": sorted(self.covered_lines),
            "stack": [[f.class_name, f.method, f.class_id, f.line] for f in self.stack],
            "npe": None
            if self.npe is None
            else {
                "expr_text": self.npe.expr_text,
                "range": list(self.npe.range.__dict__.values()),
                "kind": self.npe.kind,
            },
            "probe_records": [
                [p.probe_name, p.is_null, p.class_id, p.line] for p in self.probe_records
            ],
            "message": self.message,
        }


class CopyListener(Protocol):
    """Receives value-copy events; nodes are ``(ast_node, line)`` pairs."""

    def copy(self, dst, src, value) -> None: ...


# -- runtime values and control signals ---------------------------------------------


class Obj:
    __slots__ = ("cls", "fields", "serial")

    def __init__(self, cls: A.ClassDecl, serial: int):
        self.cls = cls
        self.serial = serial
        # field name -> [value, write site]
        self.fields = {f.name: [None, None] for f in cls.fields}

    def __repr__(self):
        return f"<{self.cls.name}#{self.serial}>"


class _Return(Exception):
    def __init__(self, value, source):
        self.value = value
        self.source = source


class _Failure(Exception):
    def __init__(self, verdict: str, message: str = "", npe: NpeSignal | None = None):
        self.verdict = verdict
        self.message = message
        self.npe = npe
        self.stack: list[StackFrame] = []


@dataclass
class _Frame:
    cls: A.ClassDecl
    method: A.MethodDecl
    this: Obj | None
    env: dict = field(default_factory=dict)  # decl node -> [value, site]
    line: int = 0


def _is_int(v) -> bool:
    return type(v) is int


def _same(a, b) -> bool:
    if a is None or b is None:
        return a is b
    if isinstance(a, Obj) or isinstance(b, Obj):
        return a is b
    return type(a) is type(b) and a == b


class Interpreter:
    def __init__(
        self,
        program: Program,
        *,
        probe_mode: bool = False,
        breakpoint_lines: Iterable = (),
        step_limit: int = DEFAULT_STEP_LIMIT,
        call_depth: int = DEFAULT_CALL_DEPTH,
        listener: CopyListener | None = None,
    ):
        self.program = program
        self.probe_mode = probe_mode
        self.breakpoints = set(breakpoint_lines)
        self.step_limit = step_limit
        self.call_depth = call_depth
        self.listener = listener

    # -- entry point
    def run_test(self, test_id: str, method: A.MethodDecl) -> TestOutcome:
        self.steps = 0
        self.covered: set = set()
        self.records: list[ProbeRecord] = []
        self.frames: list[_Frame] = []
        self.serial = 0
        self.call_targets: dict = {}
        self.field_targets: dict = {}
        cls = method.owner
        verdict, stack, npe, message = "pass", [], None, ""
        try:
            this = self._instantiate(cls)
            init = cls.method_named("init")
            if init is not None and init is not method:
                self._invoke(cls, init, this, [], None)
            self._invoke(cls, method, this, [], None)
        except _Failure as f:
            verdict, npe, message, stack = f.verdict, f.npe, f.message, f.stack
        except RecursionError:
            verdict, message = "other_error", "stack overflow"
            stack = self._snapshot()
        return TestOutcome(
            test_id=test_id,
            verdict=verdict,
            covered_lines=frozenset(self.covered),
            stack=stack,
            npe=npe,
            probe_records=self.records,
            message=message,
            call_targets={k: sorted(v) for k, v in self.call_targets.items()},
            field_targets={k: sorted(v) for k, v in self.field_targets.items()},
        )

    # -- failures
    def _snapshot(self) -> list[StackFrame]:
        return [
            StackFrame(f.cls.name, f.method.name, f.method.range.class_id, f.line)
            for f in reversed(self.frames)
        ]

    def _fail(self, verdict: str, message: str = "", npe: NpeSignal | None = None):
        failure = _Failure(verdict, message, npe)
        failure.stack = self._snapshot()
        raise failure

    def _npe(self, blamed: A.Expr, kind: str):
        unit = self.program.unit(blamed.range.class_id)
        text = unit.text_of(blamed.range)
        self._fail("npe", npe=NpeSignal(text, blamed.range, kind))

    def _error(self, message: str):
        self._fail("other_error", message)

    # -- bookkeeping
    def _tick(self, node: A.Node) -> None:
        self.steps += 1
        if self.steps > self.step_limit:
            self._error("step limit")
        frame = self.frames[-1]
        frame.line = node.range.start_line
        self.covered.add((node.range.class_id, node.range.start_line))

    def _copy(self, dst, src, value) -> None:
        if self.listener is not None:
            self.listener.copy(dst, src, value)

    # -- objects and calls
    def _instantiate(self, cls: A.ClassDecl) -> Obj:
        self.serial += 1
        return Obj(cls, self.serial)

    def _invoke(self, cls, method: A.MethodDecl, this, args, arg_nodes):
        if len(self.frames) >= self.call_depth:
            self._error("stack overflow")
        if len(args) != len(method.params):
            self._error(f"{cls.name}.{method.name} expects {len(method.params)} argument(s)")
        frame = _Frame(cls, method, this, line=method.range.start_line)
        for i, (param, value) in enumerate(zip(method.params, args)):
            site = (param, param.range.start_line)
            frame.env[param] = [value, site]
            if arg_nodes is not None:
                arg = arg_nodes[i]
                self._copy(site, (arg, arg.range.start_line), value)
        self.frames.append(frame)
        try:
            self._block(method.body)
            result = (None, None)
        except _Return as r:
            result = (r.value, r.source)
        self.frames.pop()
        return result

    # -- statements
    def _block(self, block: A.Block) -> None:
        for stmt in block.stmts:
            self._stmt(stmt)

    def _stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Block):
            self._block(s)
            return
        self._tick(s)
        frame = self.frames[-1]
        line = s.range.start_line
        if isinstance(s, A.VarDecl):
            value = self._eval(s.init)
            site = (s, line)
            frame.env[s] = [value, site]
            self._copy(site, (s.init, s.init.range.start_line), value)
            if self.probe_mode:
                self._record_probe(s, value)
        elif isinstance(s, A.Assign):
            self._assign(s, frame)
        elif isinstance(s, A.Return):
            if s.value is None:
                raise _Return(None, None)
            value = self._eval(s.value)
            raise _Return(value, (s.value, s.value.range.start_line))
        elif isinstance(s, A.If):
            cond = self._condition(s.cond)
            if cond:
                self._block(s.then)
            elif isinstance(s.orelse, A.If):
                self._stmt(s.orelse)
            elif s.orelse is not None:
                self._block(s.orelse)
        elif isinstance(s, A.While):
            while True:
                self._tick(s)
                if not self._condition(s.cond):
                    break
                self._block(s.body)
        elif isinstance(s, A.ExprStmt):
            self._eval(s.expr)
        elif isinstance(s, A.Assert):
            if not self._condition(s.expr):
                frame.line = line
                self._fail("assert_fail")
        else:
            self._error(f"unknown statement {s.kind}")

    def _condition(self, e: A.Expr) -> bool:
        value = self._eval(e)
        if value is None:
            self._npe(e, "operator")
        if type(value) is not bool:
            self._error("condition is not a boolean")
        return value

    def _assign(self, s: A.Assign, frame: _Frame) -> None:
        line = s.range.start_line
        target = s.target
        if isinstance(target, A.SimpleName):
            decl = target.decl
            if isinstance(decl, A.FieldDecl):
                obj = frame.this
                value = self._eval(s.value)
                self._tick(s)
                self._write_field(obj, decl.name, target, value, s, line)
            else:
                value = self._eval(s.value)
                site = (decl, line)
                frame.env[decl] = [value, site]
                self._copy(site, (s.value, s.value.range.start_line), value)
            return
        # field write through a receiver
        receiver = self._eval(target.receiver)
        value = self._eval(s.value)
        self._tick(s)
        if receiver is None:
            self._npe(target.receiver, "deref")
        if not isinstance(receiver, Obj):
            self._error("field write on a non-object")
        self._write_field(receiver, target.field, target, value, s, line)

    def _write_field(self, obj: Obj, name: str, target, value, s: A.Assign, line: int) -> None:
        fdecl = obj.cls.field_named(name)
        if fdecl is None:
            self._error(f"{obj.cls.name} has no field {name}")
        self.field_targets.setdefault(key_of(target), set()).add(key_of(fdecl))
        site = (fdecl, line)
        obj.fields[name] = [value, site]
        self._copy(site, (s.value, s.value.range.start_line), value)

    def _record_probe(self, decl: A.VarDecl, value) -> None:
        m = PROBE_NAME.match(decl.name)
        if m is None:
            return
        line = int(m.group("line"))
        class_id = decl.range.class_id
        if (class_id, line) in self.breakpoints:
            self.records.append(ProbeRecord(decl.name, value is None, class_id, line))

    # -- expressions
    def _eval(self, e: A.Expr):
        self._tick(e)
        frame = self.frames[-1]
        line = e.range.start_line
        if isinstance(e, A.Literal):
            return e.value
        if isinstance(e, A.This):
            return frame.this
        if isinstance(e, A.SimpleName):
            decl = e.decl
            if isinstance(decl, A.FieldDecl):
                return self._read_field(frame.this, decl.name, e, line)
            slot = frame.env.get(decl)
            if slot is None:
                self._error(f"{e.name} used before initialization")
            self._copy((e, line), slot[1], slot[0])
            return slot[0]
        if isinstance(e, A.FieldAccess):
            receiver = self._eval(e.receiver)
            frame.line = line
            if receiver is None:
                self._npe(e.receiver, "deref")
            if not isinstance(receiver, Obj):
                self._error(f"field access .{e.field} on a non-object")
            return self._read_field(receiver, e.field, e, line)
        if isinstance(e, A.MethodInvoc):
            if e.receiver is None:
                receiver = frame.this
                cls = frame.cls
            else:
                receiver = self._eval(e.receiver)
            args = [self._eval(a) for a in e.args]
            frame.line = line
            if e.receiver is not None:
                if receiver is None:
                    self._npe(e.receiver, "deref")
                if not isinstance(receiver, Obj):
                    self._error(f"method call .{e.name}() on a non-object")
                cls = receiver.cls
            method = cls.method_named(e.name)
            if method is None:
                self._error(f"{cls.name} has no method {e.name}")
            self.call_targets.setdefault(key_of(e), set()).add(key_of(method))
            value, source = self._invoke(cls, method, receiver, args, e.args)
            frame.line = line
            self._copy((e, line), source, value)
            return value
        if isinstance(e, A.NewObject):
            cls = self.program.classes[e.class_name]
            args = [self._eval(a) for a in e.args]
            frame.line = line
            obj = self._instantiate(cls)
            init = cls.method_named("init")
            if init is not None:
                self.call_targets.setdefault(key_of(e), set()).add(key_of(init))
                self._invoke(cls, init, obj, args, e.args)
                frame.line = line
            return obj
        if isinstance(e, A.BuiltinInvoc):
            args = [self._eval(a) for a in e.args]
            frame.line = line
            return self._builtin(e, args)
        if isinstance(e, A.UnaryOp):
            value = self._eval(e.operand)
            frame.line = line
            if value is None:
                self._npe(e.operand, "operator")
            if type(value) is not bool:
                self._error("operand of ! is not a boolean")
            return not value
        if isinstance(e, A.BinaryOp):
            return self._binary(e, frame, line)
        self._error(f"unknown expression {e.kind}")

    def _read_field(self, obj: Obj, name: str, node: A.Expr, line: int):
        fdecl = obj.cls.field_named(name)
        if fdecl is None:
            self._error(f"{obj.cls.name} has no field {name}")
        self.field_targets.setdefault(key_of(node), set()).add(key_of(fdecl))
        value, site = obj.fields[name]
        self._copy((node, line), site, value)
        return value

    def _builtin(self, e: A.BuiltinInvoc, args):
        expected = {"len": 1, "concat": 2, "parse_int": 1}[e.name]
        if len(args) != expected:
            self._error(f"{e.name} expects {expected} argument(s)")
        for node, value in zip(e.args, args):
            if value is None:
                self._npe(node, "builtin_arg")
        if e.name == "len":
            if type(args[0]) is not str:
                self._error("len expects a string")
            return len(args[0])
        if e.name == "concat":
            a, b = args
            if type(a) is not str or type(b) is not str:
                self._error("concat expects strings")
            return a + b
        text = args[0]
        if type(text) is not str:
            self._error("parse_int expects a string")
        try:
            return int(text.strip())
        except ValueError:
            self._error(f"cannot parse {text!r} as an integer")

    def _binary(self, e: A.BinaryOp, frame: _Frame, line: int):
        op = e.op
        left = self._eval(e.left)
        if op in ("&&", "||"):
            frame.line = line
            if left is None:
                self._npe(e.left, "operator")
            if type(left) is not bool:
                self._error(f"operand of {op} is not a boolean")
            if (op == "&&" and not left) or (op == "||" and left):
                return left
            right = self._eval(e.right)
            frame.line = line
            if right is None:
                self._npe(e.right, "operator")
            if type(right) is not bool:
                self._error(f"operand of {op} is not a boolean")
            return right
        right = self._eval(e.right)
        frame.line = line
        if op == "==":
            return _same(left, right)
        if op == "!=":
            return not _same(left, right)
        if left is None:
            self._npe(e.left, "operator")
        if right is None:
            self._npe(e.right, "operator")
        if not (_is_int(left) and _is_int(right)):
            self._error(f"operands of {op} must be integers")
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "<":
            return left < right
        self._error(f"unknown operator {op}")


def _check_breakpoints(program: Program, breakpoint_lines) -> None:
    for class_id, line in breakpoint_lines:
        unit = program.by_id.get(class_id)
        if unit is None:
            raise RuntimeConfigError(f"breakpoint in unknown unit {class_id!r}")
        nlines = unit.source.count("\n") + (0 if unit.source.endswith("\n") else 1)
        if not 1 <= line <= max(nlines, 1):
            raise RuntimeConfigError(f"breakpoint line {class_id}:{line} outside the unit")


def run_tests(
    program: Program,
    filter: Iterable[str] | None = None,
    probe_mode: bool = False,
    breakpoint_lines: Iterable = (),
    *,
    step_limit: int = DEFAULT_STEP_LIMIT,
    listener: CopyListener | None = None,
) -> list[TestOutcome]:
    """Run the selected test methods in declaration order."""
    breakpoint_lines = set(breakpoint_lines)
    _check_breakpoints(program, breakpoint_lines)
    tests = program.tests()
    if filter is not None:
        wanted = list(filter)
        known = {tid for tid, _ in tests}
        missing = [t for t in wanted if t not in known]
        if missing:
            raise RuntimeConfigError(f"unknown test(s): {', '.join(missing)}")
        tests = [(tid, m) for tid, m in tests if tid in set(wanted)]
    interp = Interpreter(
        program,
        probe_mode=probe_mode,
        breakpoint_lines=breakpoint_lines,
        step_limit=step_limit,
        listener=listener,
    )
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20_000))
    try:
        return [interp.run_test(tid, m) for tid, m in tests]
    finally:
        sys.setrecursionlimit(old_limit)


def format_failure(outcome: TestOutcome) -> str:
    if outcome.verdict == "npe":
        head = f'NullPointerException: "{outcome.npe.expr_text}" is null'
    elif outcome.verdict == "assert_fail":
        head = "AssertionError"
    else:
        head = f"RuntimeError: {outcome.message}"
    return "\n".join([head] + [f.render() for f in outcome.stack])
