"""The NPE rule base: loading, linting, KB assembly and the main queries."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from ..factgen.fact import ARITY, Fact
from ..logic.engine import BUILTINS, DEFAULT_DEPTH_LIMIT, KnowledgeBase, Solver, referenced_predicates
from ..logic.parser import Clause, parse_clauses
from ..logic.terms import Atom, Compound, Int, Term, Var, resolve, to_term, tup

FRAGMENTS = ("cause-rules", "flow-rules", "rank-rules")
PREFER_PREDICATES = ("is_null_return", "val_assigned_in_method", "only_target_method")
FILTER_PREDICATES = ("from_test", "arg_passing_method")
RANK_PREDICATES = PREFER_PREDICATES + FILTER_PREDICATES

# cause_of/3 clause number -> (scheme, null type); clause 5 covers both types
CLAUSE_SCHEMES = {
    1: ("direct", "null_arg"),
    2: ("origin", "null_arg"),
    3: ("direct", "null_ref"),
    4: ("origin", "null_ref"),
    5: ("transfer", None),
}

_FRAGMENT = re.compile(r"^%\s*==\s*fragment:\s*([\w-]+)", re.M)
_VERSION = re.compile(r"^%\s*version:\s*(\S+)", re.M)


class LintError(Exception):
    def __init__(self, undefined):
        self.undefined = sorted(undefined)
        names = ", ".join(f"{n}/{a}" for n, a in self.undefined)
        super().__init__(f"undefined predicate(s): {names}")


@dataclass(frozen=True)
class RuleBase:
    version: str
    fragments: dict = field(hash=False, compare=False)  # name -> tuple of Clause
    text: str = field(repr=False, default="")

    @property
    def clauses(self) -> list[Clause]:
        return [c for name in self.fragments for c in self.fragments[name]]

    def __len__(self) -> int:
        return sum(len(v) for v in self.fragments.values())


def bundled_rules_text() -> str:
    return resources.files(__package__).joinpath("npe.rules").read_text(encoding="utf-8")


def lint(clauses: list[Clause]) -> None:
    """Every called predicate must be a rule, a schema predicate or a built-in."""
    defined = {c.indicator for c in clauses} | set(ARITY.items()) | set(BUILTINS)
    undefined = set()
    for c in clauses:
        undefined |= referenced_predicates(c) - defined
    if undefined:
        raise LintError(undefined)


def load_rules(text: str | None = None, version: str | None = None) -> RuleBase:
    """Parse, lint and split the rule text (the bundled rules by default)."""
    if text is None:
        text = bundled_rules_text()
    clauses = parse_clauses(text)
    lint(clauses)
    if version is None:
        m = _VERSION.search(text)
        version = m.group(1) if m else "unversioned"
    # fragment of a clause = the last marker above its first line
    markers = [(text.count("\n", 0, m.start()) + 1, m.group(1)) for m in _FRAGMENT.finditer(text)]
    fragments: dict[str, list[Clause]] = {}
    for c in clauses:
        name = "rules"
        for line, frag in markers:
            if line <= c.line:
                name = frag
        fragments.setdefault(name, []).append(c)
    return RuleBase(version, {k: tuple(v) for k, v in fragments.items()}, text)


def assemble_kb(facts, rules: RuleBase) -> KnowledgeBase:
    """Facts first, then rules, each in their given order."""
    kb = KnowledgeBase()
    for name, arity in ARITY.items():
        kb.declare(name, arity)
    for f in facts:
        kb.add(f.clause() if isinstance(f, Fact) else f)
    kb.extend(rules.clauses)
    return kb


# -- queries ------------------------------------------------------------------


def loc_of(term: Term) -> tuple[str, int]:
    """``line(C, L)`` -> ``(C, L)``."""
    assert isinstance(term, Compound) and term.functor == "line"
    c, l = term.args
    return (c.name, l.value)


def line_of(loc: tuple[str, int]) -> Compound:
    return Compound("line", (Atom(loc[0]), Int(loc[1])))


def node_of(term: Term) -> tuple[str, tuple[str, int]]:
    e, l = term.args
    return (e.name, loc_of(l))


@dataclass
class RawCandidate:
    expr: str
    line: tuple[str, int]
    cause: str
    loc: tuple[str, int]
    scheme: str
    null_type: str
    clause: int  # satisfied cause_of/3 clause, 1-based
    evidence: list = field(default_factory=list)  # [(atom, (class, line)), ...]

    @property
    def key(self) -> tuple:
        return (self.cause, self.loc)

    def term(self) -> Term:
        return tup(Atom(self.expr), line_of(self.line), Atom(self.cause), line_of(self.loc))


def _solutions(kb, goal, depth_limit):
    solver = Solver(kb, depth_limit)
    for _ in solver.run(goal):
        yield lambda t: resolve(t, solver.subst)


def npe_sites(kb: KnowledgeBase, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> list[tuple[str, tuple]]:
    """Distinct solutions of ``npe(E, L)`` in solve order."""
    e, l = Var("E"), Var("L")
    out = []
    for val in _solutions(kb, Compound("npe", (e, l)), depth_limit):
        site = (val(e).name, loc_of(val(l)))
        if site not in out:
            out.append(site)
    return out


class _FlowGraph:
    """Memoized ``null_pred/2`` lookups for evidence paths."""

    def __init__(self, kb, depth_limit):
        self.kb = kb
        self.depth_limit = depth_limit
        self.cache: dict = {}

    def preds(self, node):
        if node not in self.cache:
            p = Var("P")
            goal = Compound("null_pred", (tup(Atom(node[0]), line_of(node[1])), p))
            self.cache[node] = [node_of(val(p)) for val in _solutions(self.kb, goal, self.depth_limit)]
        return self.cache[node]

    def path(self, start, target) -> list:
        """Shortest evidenced null path from ``start`` back to ``target``."""
        if start == target:
            return [start]
        prev = {start: None}
        frontier = [start]
        while frontier:
            nxt = []
            for node in frontier:
                for p in self.preds(node):
                    if p in prev:
                        continue
                    prev[p] = node
                    if p == target:
                        out = [p]
                        while prev[out[-1]] is not None:
                            out.append(prev[out[-1]])
                        return list(reversed(out))
                    nxt.append(p)
            frontier = nxt
        return [start, target]


def query_causes(kb: KnowledgeBase, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> list[RawCandidate]:
    """All ``cause_of/3`` answers per null expression, in solve order.

    The satisfied clause of each answer is read from an exit event of the
    top-level call, which fixes scheme and null-expression type.
    """
    out: list[RawCandidate] = []
    graph = _FlowGraph(kb, depth_limit)
    for expr, line in npe_sites(kb, depth_limit):
        arg_type = _holds(kb, Compound("null_arg_passed", (Atom(expr), line_of(line))), depth_limit)
        c, lc = Var("C"), Var("Lc")
        goal = Compound("cause_of", (Compound("npe", (Atom(expr), line_of(line))), c, lc))
        events = []
        solver = Solver(kb, depth_limit, tracer=events.append, max_trace_depth=0)
        for _ in solver.run(goal):
            exit_ev = next(ev for ev in reversed(events) if ev.port == "exit" and ev.depth == 0)
            number = exit_ev.clause_number
            scheme, ntype = CLAUSE_SCHEMES[number]
            if ntype is None:
                ntype = "null_arg" if arg_type else "null_ref"
            cause = resolve(c, solver.subst).name
            loc = loc_of(resolve(lc, solver.subst))
            evidence = graph.path((expr, line), (cause, loc))
            out.append(RawCandidate(expr, line, cause, loc, scheme, ntype, number, evidence))
    return out


def _holds(kb, goal, depth_limit) -> bool:
    return next(iter(_solutions(kb, goal, depth_limit)), None) is not None


def check_rank_conds(
    kb: KnowledgeBase,
    candidate: RawCandidate,
    disabled=(),
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
) -> str:
    """``filtered`` if a filter condition holds, else ``preferred``/``neutral``.

    ``disabled`` names rank predicates to switch off (for ablation).
    """
    return rank_status(satisfied_rank_conds(kb, candidate, depth_limit), disabled)


def satisfied_rank_conds(kb: KnowledgeBase, candidate: RawCandidate, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> frozenset:
    """Names of the rank predicates that hold for ``candidate``."""
    term = candidate.term()
    held = set()
    for name in RANK_PREDICATES:
        if _holds(kb, Compound("rank_cond", (Atom(name), term)), depth_limit):
            held.add(name)
    return frozenset(held)


def rank_status(held, disabled=()) -> str:
    active = set(held) - set(disabled)
    if active & set(FILTER_PREDICATES):
        return "filtered"
    if active & set(PREFER_PREDICATES):
        return "preferred"
    return "neutral"


def check_rank_conds_direct(kb: KnowledgeBase, candidate: RawCandidate, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> str:
    """Same decision through ``filter_cond/1`` and ``prefer_cond/1`` directly."""
    term = candidate.term()
    if _holds(kb, Compound("filter_cond", (term,)), depth_limit):
        return "filtered"
    if _holds(kb, Compound("prefer_cond", (term,)), depth_limit):
        return "preferred"
    return "neutral"


__all__ = [
    "CLAUSE_SCHEMES",
    "FILTER_PREDICATES",
    "FRAGMENTS",
    "LintError",
    "PREFER_PREDICATES",
    "RANK_PREDICATES",
    "RawCandidate",
    "RuleBase",
    "assemble_kb",
    "bundled_rules_text",
    "check_rank_conds",
    "check_rank_conds_direct",
    "lint",
    "load_rules",
    "loc_of",
    "npe_sites",
    "query_causes",
    "rank_status",
    "satisfied_rank_conds",
]
