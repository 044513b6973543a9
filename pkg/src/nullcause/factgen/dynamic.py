"""Dynamic facts from a probed test run."""

from __future__ import annotations

from ..logic.terms import Atom, Int
from ..minil import ast as A
from ..minil.parser import node_at
from ..minil.program import Program
from ..minil.runtime import PROBE_NAME, TestOutcome
from .fact import Fact, line_term, sort_facts
from .naming import EntityNaming


class UnresolvedSignal(Exception):
    pass


def _method_atom(program: Program, naming: EntityNaming, class_name: str, method: str) -> str:
    cls = program.classes[class_name]
    return naming.atom(cls.method_named(method))


def resolve_signal(program: Program, naming: EntityNaming, outcome: TestOutcome) -> tuple[str, int]:
    """Map an NPE signal to the (atom, line) of the null expression."""
    rng = outcome.npe.range
    unit = program.unit(rng.class_id)
    node = node_at(unit, rng)
    atom = naming.atom(node) if isinstance(node, A.Expr) else None
    if atom is None or unit.text_of(node.range) != outcome.npe.expr_text:
        raise UnresolvedSignal(f"{outcome.test_id}: cannot resolve {outcome.npe.expr_text!r} at line {rng.start_line}")
    return atom, rng.start_line


def dynamic_facts(
    outcomes: list[TestOutcome],
    naming: EntityNaming,
    program: Program,
    unresolved: list | None = None,
) -> list[Fact]:
    """val/observed/npe_error/stack/failed_test facts for NPE-failing tests.

    ``program`` is the un-probed program.  Signals that cannot be resolved
    are appended to ``unresolved`` and their test is left out.
    """
    facts: list[Fact] = []
    index = {tid: i for i, (tid, _) in enumerate(program.tests())}
    for outcome in outcomes:
        if outcome.verdict != "npe":
            continue
        prov = index.get(outcome.test_id, 0)
        try:
            atom, line = resolve_signal(program, naming, outcome)
        except UnresolvedSignal as exc:
            if unresolved is not None:
                unresolved.append(str(exc))
            continue
        t = Atom(naming.test_atom(outcome.test_id))
        cid = outcome.npe.range.class_id
        facts.append(Fact("failed_test", (t,), prov))
        facts.append(Fact("npe_error", (t, Atom(atom), line_term(cid, line), Atom(outcome.npe.kind)), prov))
        for i, frame in enumerate(outcome.stack):
            m = _method_atom(program, naming, frame.class_name, frame.method)
            facts.append(Fact("stack", (t, Int(i), Atom(m), line_term(frame.class_id, frame.line)), prov))
        for rec in outcome.probe_records:
            m = PROBE_NAME.match(rec.probe_name)
            if m is None:
                continue
            node = (Atom(m.group("atom")), line_term(rec.class_id, rec.line))
            facts.append(Fact("observed", node, prov))
            if rec.is_null:
                facts.append(Fact("val", (node[0], Atom("null"), node[1]), prov))
    return sort_facts(facts)
