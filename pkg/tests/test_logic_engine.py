import time

import pytest

from conftest import FAMILY_KB
from nullcause.logic import (
    Atom,
    Compound,
    DepthExceeded,
    KnowledgeBase,
    SyntaxError,
    UnknownPredicate,
    Var,
    parse_clauses,
    parse_term,
    query,
    solve,
    trace_solve,
    unify,
)
from nullcause.logic.terms import resolve
from nullcause.rules import bundled_rules_text


def kb_of(text: str) -> KnowledgeBase:
    kb = KnowledgeBase()
    kb.extend(parse_clauses(text))
    return kb


def answers(kb, text):
    return [tuple(str(v) for v in row.values()) for row in query(kb, text)]


# -- parse_clauses -----------------------------------------------------------


def test_family_kb_has_seven_clauses():
    clauses = parse_clauses(FAMILY_KB)
    assert len(clauses) == 7
    assert [c.indicator for c in clauses][-2:] == [("father", 2), ("grandfather", 2)]
    assert [c.line for c in clauses] == [1, 2, 3, 4, 5, 6, 7]


def test_disjunction_desugars_in_order():
    clauses = parse_clauses("a :- b ; c.\nb.\nc.")
    heads = [c for c in clauses if c.indicator == ("a", 0)]
    kb = kb_of("a :- b ; c.\nb.\nc.")
    # two alternatives, b tried before c
    _, trace = trace_solve(kb, Atom("a"))
    called = [e.goal for e in trace.events if e.port == "call" and e.goal in ("b", "c")]
    assert called == ["b", "c"]
    assert len(list(solve(kb, Atom("a")))) == 2
    assert heads


def test_cause_rules_keep_five_clauses_in_source_order():
    start = bundled_rules_text().index("cause_of(")
    end = bundled_rules_text().index("% == fragment: flow-rules")
    clauses = [c for c in parse_clauses(bundled_rules_text()[start:end]) if c.indicator == ("cause_of", 3)]
    assert len(clauses) == 5
    first_goals = [str(c.body[0]) if c.body else "" for c in clauses]
    assert first_goals[0].startswith("null_arg_passed")
    assert first_goals[2].startswith("null_ref")


def test_syntax_error_has_position():
    with pytest.raises(SyntaxError) as info:
        parse_clauses("p(a) :- q(.\n")
    assert info.value.line == 1


# -- unify ----------------------------------------------------------------------


def test_unify_worked_example():
    x, y = Var("X"), Var("Y")
    s = unify(Compound("father", (x, y)), parse_term("father(jack, jill)"))
    assert resolve(x, s) == Atom("jack") and resolve(y, s) == Atom("jill")


@pytest.mark.parametrize("a,b", [("f(X)", "g(X)"), ("f(X, X)", "f(a, b)")])
def test_unify_failures(a, b):
    assert unify(parse_term(a), parse_term(b)) is None


# -- solve -----------------------------------------------------------------------------


def test_father_query_order():
    kb = kb_of(FAMILY_KB)
    assert answers(kb, "father(X, Y)") == [("jack", "jill"), ("john", "jane")]


def test_unknown_predicate_is_false_at_query_api():
    kb = kb_of(FAMILY_KB)
    assert query(kb, "mother(jill, jane)") == []
    with pytest.raises(UnknownPredicate):
        list(solve(kb, parse_term("mother(jill, jane)")))


def test_cut_commits():
    kb = kb_of("p :- !, fail.\np.")
    assert query(kb, "p") == []


def test_cut_prunes_predicate_alternatives_only():
    kb = kb_of("q(1).\nq(2).\nr(X) :- q(X), !.\nr(3).\ns(Y) :- r(Y).\ns(9).")
    assert answers(kb, "s(Y)") == [("1",), ("9",)]


def test_builtins():
    kb = kb_of("n(1).\nn(2).\nn(3).\nall(L) :- findall(X, n(X), L).\nnone(L) :- findall(X, fail, L).")
    assert answers(kb, "all(L)") == [("[1, 2, 3]",)]
    assert answers(kb, "none(L)") == [("[]",)]
    assert answers(kb, "member(X, [a, b])") == [("a",), ("b",)]
    assert answers(kb, "n(X), X =< 2, \\+ X == 1") == [("2",)]
    assert answers(kb, "n(X), 2 < X") == [("3",)]
    assert answers(kb, "X = f(Y), Y = a, X \\== f(b)") == [("f(a)", "a")]
    assert query(kb, "true") == [{}]


def test_depth_limit():
    kb = kb_of("loop(X) :- loop(X).")
    with pytest.raises(DepthExceeded):
        list(solve(kb, parse_term("loop(a)"), depth_limit=500))


# -- trace_solve -------------------------------------------------------------------------


def test_trace_cites_fact_and_rule_lines():
    kb = kb_of(FAMILY_KB)
    sols, trace = trace_solve(kb, parse_term("father(X, Y)"))
    assert len(sols) == 2
    exits = [e for e in trace.events if e.port == "exit" and e.depth == 0]
    assert [e.clause_line for e in exits] == [5, 6]
    assert trace.events[-1].port == "fail"


def test_trace_of_failing_goal_ends_in_fail():
    kb = kb_of(FAMILY_KB)
    sols, trace = trace_solve(kb, parse_term("father(jill, X)"))
    assert sols == []
    assert trace.events[-1].port == "fail"


def test_trace_shows_pruned_choice_point():
    kb = kb_of("p :- !, fail.\np.")
    _, trace = trace_solve(kb, Atom("p"))
    cuts = [e for e in trace.events if e.port == "cut"]
    assert cuts and cuts[0].pruned


def test_family_query_is_fast():
    kb = kb_of(FAMILY_KB)
    t0 = time.perf_counter()
    answers(kb, "father(X, Y)")
    assert time.perf_counter() - t0 < 0.01


def test_findall_cache_is_invalidated_by_new_clauses():
    kb = kb_of("p(a).\nq(L) :- findall(X, p(X), L).")
    assert answers(kb, "q(L)") == [("[a]",)]
    kb.extend(parse_clauses("p(b)."))
    assert answers(kb, "q(L)") == [("[a, b]",)]


def test_findall_with_unbound_answers_is_not_shared():
    kb = kb_of("p(f(_)).\nq(L) :- findall(X, p(X), L).")
    first = query(kb, "q(L)")[0]["L"]
    second = query(kb, "q(L)")[0]["L"]
    assert first is not second and kb.findall_cache == {}
