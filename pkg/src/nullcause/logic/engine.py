"""Depth-first SLD resolution with cut, negation as failure and findall.

Clauses are tried top to bottom and goals left to right.  Bindings live
in one mutable substitution plus a trail; backtracking undoes the trail
back to the mark recorded in the choice point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .parser import Clause, indicator_of, parse_clauses, parse_query
from .terms import (
    NIL,
    Atom,
    Compound,
    Int,
    Str,
    Term,
    Var,
    deref,
    is_ground,
    list_items,
    make_list,
    resolve,
    unique_variables,
)

DEFAULT_DEPTH_LIMIT = 100_000


class EngineError(Exception):
    pass


class UnknownPredicate(EngineError):
    def __init__(self, indicator: tuple[str, int]):
        super().__init__(f"unknown predicate {indicator[0]}/{indicator[1]}")
        self.indicator = indicator


class DepthExceeded(EngineError):
    def __init__(self, limit: int):
        super().__init__(f"proof depth exceeded {limit} frames")
        self.limit = limit


class TypeError_(EngineError):
    pass


Substitution = dict


# -- unification ---------------------------------------------------------------


def _bind(var: Var, value: Term, subst: dict, trail: list | None):
    subst[var] = value
    if trail is not None:
        trail.append(var)


def unify_into(a: Term, b: Term, subst: dict, trail: list | None = None) -> bool:
    """Unify in place, recording new bindings on ``trail``.  No occurs-check."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = deref(x, subst)
        y = deref(y, subst)
        if x is y:
            continue
        tx = type(x)
        ty = type(y)
        if tx is Var:
            _bind(x, y, subst, trail)
        elif ty is Var:
            _bind(y, x, subst, trail)
        elif tx is Compound:
            if ty is not Compound or x.functor != y.functor or len(x.args) != len(y.args):
                return False
            stack.extend(zip(x.args, y.args))
        elif x != y:
            return False
    return True


def unify(t1: Term, t2: Term, subst: Substitution | None = None) -> Substitution | None:
    """Most general unifier of ``t1`` and ``t2`` extending ``subst``, or None."""
    result = dict(subst or {})
    if unify_into(t1, t2, result):
        return result
    return None


# -- knowledge base ------------------------------------------------------------


def _first_arg_key(term: Term):
    if type(term) is not Compound:
        return None
    return _arg_key(term.args[0], None)


def _arg_key(t: Term, subst):
    """Index key of a first argument; comma tuples are keyed by their first element."""
    if subst is not None:
        t = deref(t, subst)
    tt = type(t)
    if tt is Var:
        return None
    if tt is Compound and t.functor == "," and len(t.args) == 2:
        inner = t.args[0]
        if subst is not None:
            inner = deref(inner, subst)
        return ("t", _atomic_key(inner))
    return _atomic_key(t)


def _atomic_key(t: Term):
    tt = type(t)
    if tt is Atom:
        return ("a", t.name)
    if tt is Int:
        return ("i", t.value)
    if tt is Str:
        return ("s", t.value)
    if tt is Compound:
        return ("f", t.functor, len(t.args))
    return None


def _compatible(clause_key, goal_key) -> bool:
    if clause_key is None or goal_key is None:
        return True
    if clause_key[0] == "t" and goal_key[0] == "t":
        return clause_key[1] is None or goal_key[1] is None or clause_key[1] == goal_key[1]
    return clause_key == goal_key


class _Pred:
    __slots__ = ("clauses", "_cache")

    def __init__(self):
        self.clauses: list[_Compiled] = []
        self._cache: dict = {}

    def add(self, c: "_Compiled"):
        self.clauses.append(c)
        self._cache = {}

    def candidates(self, goal: Term, subst: dict) -> list["_Compiled"]:
        if len(self.clauses) < 8 or type(goal) is not Compound:
            return self.clauses
        key = _arg_key(goal.args[0], subst)
        if key is None:
            return self.clauses
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = [c for c in self.clauses if _compatible(c.key, key)]
        return hit


@dataclass(eq=False)
class _Compiled:
    clause: Clause
    number: int  # 1-based position within its predicate
    head: Term
    body: tuple
    nvars: tuple
    key: object

    def rename(self) -> tuple[Term, tuple]:
        if not self.nvars:
            return self.head, self.body
        mapping = {v: Var(v.name) for v in self.nvars}
        return _copy(self.head, mapping), tuple(_copy(g, mapping) for g in self.body)


def _copy(t: Term, mapping: dict) -> Term:
    tt = type(t)
    if tt is Var:
        return mapping.get(t, t)
    if tt is Compound:
        return Compound(t.functor, [_copy(a, mapping) for a in t.args])
    return t



class KnowledgeBase:
    """Ordered clauses per predicate; predicates ordered by first declaration."""

    def __init__(self, clauses: Iterable[Clause] = ()):
        self._preds: dict[tuple[str, int], _Pred] = {}
        self.order: list[tuple[str, int]] = []
        self.clauses: list[Clause] = []
        # findall answers by canonical (template, goal); cleared on every add
        self.findall_cache: dict = {}
        for c in clauses:
            self.add(c)

    @classmethod
    def from_text(cls, text: str) -> "KnowledgeBase":
        return cls(parse_clauses(text))

    def declare(self, name: str, arity: int):
        key = (name, arity)
        if key not in self._preds:
            self._preds[key] = _Pred()
            self.order.append(key)

    def add(self, clause: Clause):
        key = clause.indicator
        self.declare(*key)
        pred = self._preds[key]
        head = clause.head
        all_vars: dict[Var, None] = {}
        for t in (head, *clause.body):
            for v in unique_variables(t):
                all_vars.setdefault(v, None)
        compiled = _Compiled(
            clause=clause,
            number=len(pred.clauses) + 1,
            head=head,
            body=tuple(clause.body),
            nvars=tuple(all_vars),
            key=_first_arg_key(head),
        )
        pred.add(compiled)
        self.clauses.append(clause)
        self.findall_cache.clear()

    def extend(self, clauses: Iterable[Clause]):
        for c in clauses:
            self.add(c)

    def defines(self, indicator: tuple[str, int]) -> bool:
        return indicator in self._preds

    def predicate_clauses(self, indicator: tuple[str, int]) -> list[Clause]:
        pred = self._preds.get(indicator)
        return [c.clause for c in pred.clauses] if pred else []

    def _pred(self, indicator):
        return self._preds.get(indicator)

    def __len__(self):
        return len(self.clauses)


# -- trace events ----------------------------------------------------------------


@dataclass
class TraceEvent:
    port: str  # call exit fail redo cut
    call_id: int
    depth: int
    goal: str
    clause_line: int | None = None
    clause_number: int | None = None
    predicate: str | None = None
    pruned: tuple[int, ...] = ()

    def render(self) -> str:
        where = ""
        if self.clause_number is not None:
            where = f"  [clause {self.predicate}#{self.clause_number} @line {self.clause_line}]"
        if self.port == "cut":
            return f"{'  ' * self.depth}cut  ({self.call_id}) pruned {list(self.pruned)}"
        return f"{'  ' * self.depth}{self.port:<4} ({self.call_id}) {self.goal}{where}"


@dataclass
class DeductionTrace:
    events: list[TraceEvent] = field(default_factory=list)

    def render(self) -> str:
        return "\n".join(e.render() for e in self.events)


# -- solver ------------------------------------------------------------------------

_CONTROL = {
    ("true", 0), ("fail", 0), ("false", 0), ("!", 0), (",", 2), (";", 2), ("\\+", 1),
    ("=", 2), ("\\=", 2), ("==", 2), ("\\==", 2), ("<", 2), ("=<", 2), (">", 2), (">=", 2),
    ("findall", 3), ("member", 2), ("call", 1),
}

BUILTINS = frozenset(_CONTROL)


class _Frame:
    __slots__ = ("goal", "cutb", "depth", "next")

    def __init__(self, goal, cutb, depth, nxt):
        self.goal = goal
        self.cutb = cutb
        self.depth = depth
        self.next = nxt


class _Exit:
    __slots__ = ("call_id", "goal", "compiled", "depth")

    def __init__(self, call_id, goal, compiled, depth):
        self.call_id = call_id
        self.goal = goal
        self.compiled = compiled
        self.depth = depth


class _Choice:
    __slots__ = ("kind", "trail_mark", "frame", "data", "pos", "call_id")

    def __init__(self, kind, trail_mark, frame, data, pos=0, call_id=0):
        self.kind = kind
        self.trail_mark = trail_mark
        self.frame = frame
        self.data = data
        self.pos = pos
        self.call_id = call_id


_FAIL = object()


class Solver:
    """One solve session over an immutable knowledge base."""

    def __init__(
        self,
        kb: KnowledgeBase,
        depth_limit: int = DEFAULT_DEPTH_LIMIT,
        tracer: Callable[[TraceEvent], None] | None = None,
        max_trace_depth: int | None = None,
    ):
        self.kb = kb
        self.depth_limit = depth_limit
        self.tracer = tracer
        # events deeper than this are not reported (None: report everything)
        self.max_trace_depth = max_trace_depth
        self.subst: dict = {}
        self.trail: list = []
        self._ids = itertools.count(1)

    def _undo(self, mark: int):
        trail = self.trail
        subst = self.subst
        while len(trail) > mark:
            del subst[trail.pop()]

    def _emit(self, port, call_id, depth, goal, compiled=None, pruned=()):
        if self.max_trace_depth is not None and depth > self.max_trace_depth:
            return
        ev = TraceEvent(
            port=port,
            call_id=call_id,
            depth=depth,
            goal=_fmt(goal, self.subst),
            clause_line=compiled.clause.line if compiled else None,
            clause_number=compiled.number if compiled else None,
            predicate="%s/%d" % compiled.clause.indicator if compiled else None,
            pruned=tuple(pruned),
        )
        self.tracer(ev)

    def run(self, goal: Term, depth: int = 0) -> Iterator[None]:
        """Yield once per solution; bindings are in ``self.subst`` at yield time."""
        choices: list[_Choice] = []
        frame: _Frame | None = _Frame(goal, 0, depth, None)
        tracing = self.tracer is not None
        subst = self.subst
        while True:
            if frame is None:
                yield None
                frame = self._backtrack(choices)
                if frame is _FAIL:
                    return
                continue
            goal = frame.goal
            if type(goal) is _Exit:
                if tracing:
                    self._emit("exit", goal.call_id, goal.depth, goal.goal, goal.compiled)
                frame = frame.next
                continue
            goal = deref(goal, subst)
            tg = type(goal)
            if tg is Atom:
                ind = (goal.name, 0)
            elif tg is Compound:
                ind = (goal.functor, len(goal.args))
            elif tg is Var:
                raise EngineError("instantiation error: unbound goal")
            else:
                raise TypeError_(f"goal is not callable: {_fmt(goal, subst)}")
            if ind in _CONTROL:
                frame = self._builtin(ind, goal, frame, choices)
                if frame is _FAIL:
                    frame = self._backtrack(choices)
                    if frame is _FAIL:
                        return
                continue
            pred = self.kb._pred(ind)
            if pred is None:
                raise UnknownPredicate(ind)
            d = frame.depth + 1
            if d > self.depth_limit:
                raise DepthExceeded(self.depth_limit)
            call_id = next(self._ids) if tracing else 0
            if tracing:
                self._emit("call", call_id, frame.depth, goal)
            cands = pred.candidates(goal, subst)
            data = (goal, cands, len(choices))
            frame = self._try_clauses(data, 0, frame, choices, call_id)
            if frame is _FAIL:
                frame = self._backtrack(choices)
                if frame is _FAIL:
                    return

    def _try_clauses(self, data, pos, frame, choices, call_id):
        goal, cands, cutb = data
        subst = self.subst
        trail = self.trail
        n = len(cands)
        while pos < n:
            compiled = cands[pos]
            pos += 1
            mark = len(trail)
            head, body = compiled.rename()
            if unify_into(head, goal, subst, trail):
                if pos < n:
                    choices.append(_Choice("clauses", mark, frame, data, pos, call_id))
                nxt = frame.next
                depth = frame.depth + 1
                if self.tracer is not None:
                    nxt = _Frame(_Exit(call_id, goal, compiled, frame.depth), cutb, depth, nxt)
                for g in reversed(body):
                    nxt = _Frame(g, cutb, depth, nxt)
                return nxt
            self._undo(mark)
        if self.tracer is not None:
            self._emit("fail", call_id, frame.depth, goal)
        return _FAIL

    def _backtrack(self, choices):
        while choices:
            ch = choices.pop()
            self._undo(ch.trail_mark)
            if ch.kind == "clauses":
                if self.tracer is not None:
                    self._emit("redo", ch.call_id, ch.frame.depth, ch.data[0])
                nxt = self._try_clauses(ch.data, ch.pos, ch.frame, choices, ch.call_id)
                if nxt is not _FAIL:
                    return nxt
            elif ch.kind == "alt":
                return ch.data
            elif ch.kind == "member":
                nxt = self._member_step(ch.frame, ch.data, choices)
                if nxt is not _FAIL:
                    return nxt
        return _FAIL

    def _member_step(self, frame, data, choices):
        elem, lst = data
        subst = self.subst
        while True:
            lst = deref(lst, subst)
            if type(lst) is not Compound or lst.functor != "." or len(lst.args) != 2:
                return _FAIL
            head, rest = lst.args
            mark = len(self.trail)
            if unify_into(elem, head, subst, self.trail):
                choices.append(_Choice("member", mark, frame, (elem, rest)))
                return frame.next
            self._undo(mark)
            lst = rest

    def _builtin(self, ind, goal, frame, choices):
        name = ind[0]
        subst = self.subst
        if name == "true":
            return frame.next
        if name in ("fail", "false"):
            return _FAIL
        if name == "!":
            if len(choices) > frame.cutb:
                if self.tracer is not None:
                    pruned = [c.call_id for c in choices[frame.cutb :] if c.kind == "clauses"]
                    self._emit("cut", 0, frame.depth, Atom("!"), pruned=pruned)
                del choices[frame.cutb :]
            return frame.next
        args = goal.args if type(goal) is Compound else ()
        if name == ",":
            return _Frame(args[0], frame.cutb, frame.depth, _Frame(args[1], frame.cutb, frame.depth, frame.next))
        if name == ";":
            alt = _Frame(args[1], frame.cutb, frame.depth, frame.next)
            choices.append(_Choice("alt", len(self.trail), frame, alt))
            return _Frame(args[0], frame.cutb, frame.depth, frame.next)
        if name == "call":
            return _Frame(args[0], len(choices), frame.depth + 1, frame.next)
        if name == "\\+":
            mark = len(self.trail)
            sub = self.run(args[0], frame.depth + 1)
            found = next(sub, _FAIL) is not _FAIL
            sub.close()
            self._undo(mark)
            return _FAIL if found else frame.next
        if name == "=":
            mark = len(self.trail)
            if unify_into(args[0], args[1], subst, self.trail):
                return frame.next
            self._undo(mark)
            return _FAIL
        if name == "\\=":
            mark = len(self.trail)
            ok = unify_into(args[0], args[1], subst, self.trail)
            self._undo(mark)
            return _FAIL if ok else frame.next
        if name == "==":
            return frame.next if resolve(args[0], subst) == resolve(args[1], subst) else _FAIL
        if name == "\\==":
            return _FAIL if resolve(args[0], subst) == resolve(args[1], subst) else frame.next
        if name in ("<", "=<", ">", ">="):
            a = deref(args[0], subst)
            b = deref(args[1], subst)
            if type(a) is not Int or type(b) is not Int:
                raise TypeError_(f"integer comparison on non-integers: {_fmt(goal, subst)}")
            x, y = a.value, b.value
            ok = {"<": x < y, "=<": x <= y, ">": x > y, ">=": x >= y}[name]
            return frame.next if ok else _FAIL
        if name == "findall":
            template, g, out = args
            # clauses are pure, so ground answers can be reused unless traced
            cacheable = self.tracer is None or (
                self.max_trace_depth is not None and frame.depth + 1 > self.max_trace_depth
            )
            key = _canon((template, g), subst) if cacheable else None
            results = self.kb.findall_cache.get(key) if cacheable else None
            if results is None:
                mark = len(self.trail)
                results = []
                sub = self.run(g, frame.depth + 1)
                for _ in sub:
                    results.append(_snapshot(template, subst))
                self._undo(mark)
                if cacheable and all(is_ground(r) for r in results):
                    self.kb.findall_cache[key] = results
            mark = len(self.trail)
            if unify_into(out, make_list(results), subst, self.trail):
                return frame.next
            self._undo(mark)
            return _FAIL
        if name == "member":
            return self._member_step(frame, (args[0], args[1]), choices)
        raise AssertionError(name)


def _snapshot(t: Term, subst: dict) -> Term:
    """Resolved copy with fresh variables for the unbound ones."""
    mapping: dict = {}

    def walk(x):
        x = deref(x, subst)
        tx = type(x)
        if tx is Var:
            v = mapping.get(x)
            if v is None:
                v = mapping[x] = Var(x.name)
            return v
        if tx is Compound:
            return Compound(x.functor, [walk(a) for a in x.args])
        return x

    return walk(t)


def _canon(t, subst: dict):
    """Hashable form of a resolved term, variables numbered by first occurrence."""
    numbers: dict = {}

    def walk(x):
        x = deref(x, subst)
        tx = type(x)
        if tx is Var:
            return ("$var", numbers.setdefault(x, len(numbers)))
        if tx is Compound:
            return (x.functor, tuple(walk(a) for a in x.args))
        if tx is tuple:
            return tuple(walk(a) for a in x)
        return (tx.__name__, str(x))

    return walk(t)


def _fmt(t: Term, subst: dict) -> str:
    from .terms import format_term

    return format_term(resolve(t, subst))


# -- public API ---------------------------------------------------------------------


def solve(
    kb: KnowledgeBase,
    goal: Term,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> Iterator[Substitution]:
    """Lazily yield one substitution per solution, in SLD order.

    Each yielded dict maps the goal's variables to their resolved values.
    """
    solver = Solver(kb, depth_limit)
    goal_vars = unique_variables(goal)
    for _ in solver.run(goal):
        yield {v: resolve(v, solver.subst) for v in goal_vars}


def trace_solve(
    kb: KnowledgeBase,
    goal: Term,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
    max_solutions: int | None = None,
    max_trace_depth: int | None = None,
) -> tuple[list[Substitution], DeductionTrace]:
    """Like :func:`solve` but also records call/exit/fail/redo/cut events."""
    trace = DeductionTrace()
    solver = Solver(kb, depth_limit, tracer=trace.events.append, max_trace_depth=max_trace_depth)
    goal_vars = unique_variables(goal)
    solutions = []
    gen = solver.run(goal)
    exhausted = True
    try:
        for _ in gen:
            solutions.append({v: resolve(v, solver.subst) for v in goal_vars})
            if max_solutions is not None and len(solutions) >= max_solutions:
                exhausted = False
                break
    finally:
        gen.close()
    if exhausted:
        # no further solutions for the query as a whole
        trace.events.append(TraceEvent("fail", 0, 0, _fmt(goal, {})))
    return solutions, trace


def query(kb: KnowledgeBase, text: str, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> list[dict[str, Term]]:
    """Solve a textual query; an undefined predicate answers no solutions."""
    goal, names = parse_query(text)
    solver = Solver(kb, depth_limit)
    out = []
    try:
        for _ in solver.run(goal):
            out.append({n: resolve(v, solver.subst) for n, v in names.items()})
    except UnknownPredicate:
        return []
    return out


def succeeds(kb: KnowledgeBase, goal: Term, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> bool:
    solver = Solver(kb, depth_limit)
    gen = solver.run(goal)
    try:
        return next(gen, _FAIL) is not _FAIL
    finally:
        gen.close()


def referenced_predicates(clause: Clause) -> set[tuple[str, int]]:
    """Predicates called from a clause body, looking inside control constructs."""
    out: set[tuple[str, int]] = set()

    def visit(g: Term):
        if isinstance(g, Var):
            return
        if not isinstance(g, (Atom, Compound)):
            return
        ind = indicator_of(g)
        if ind in ((",", 2), (";", 2)):
            visit(g.args[0])
            visit(g.args[1])
        elif ind in (("\\+", 1), ("call", 1)):
            visit(g.args[0])
        elif ind == ("findall", 3):
            visit(g.args[1])
        elif ind not in _CONTROL:
            out.add(ind)

    for g in clause.body:
        visit(g)
    return out


__all__ = [
    "BUILTINS",
    "DeductionTrace",
    "DepthExceeded",
    "EngineError",
    "KnowledgeBase",
    "Solver",
    "Substitution",
    "TraceEvent",
    "UnknownPredicate",
    "list_items",
    "query",
    "referenced_predicates",
    "solve",
    "succeeds",
    "trace_solve",
    "unify",
    "unify_into",
]
