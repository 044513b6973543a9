"""Property tests: the SLD engine against a bottom-up reference evaluator."""

from itertools import product

from hypothesis import given, settings
from hypothesis import strategies as st

from nullcause.localizer import dedup_and_rank
from nullcause.logic import KnowledgeBase, parse_clauses, parse_term, query, unify
from nullcause.logic.terms import Atom, Compound, Int, Var, format_term, is_ground, resolve
from nullcause.rules import RawCandidate

CONSTS = ("a", "b", "c")
VARS = ("X", "Y", "Z")
PREDS = (("p0", 2), ("p1", 1), ("p2", 2), ("p3", 1))  # a rule for p_i only calls p_j, j < i


@st.composite
def literal(draw, max_pred):
    name, arity = draw(st.sampled_from(PREDS[:max_pred]))
    args = draw(st.lists(st.sampled_from(CONSTS + VARS), min_size=arity, max_size=arity))
    return (name, tuple(args))


@st.composite
def program(draw):
    facts = draw(st.lists(
        st.tuples(st.sampled_from(PREDS[:2]), st.lists(st.sampled_from(CONSTS), min_size=2, max_size=2)),
        min_size=1, max_size=4,
    ))
    clauses = [(name, tuple(args[:arity]), ()) for (name, arity), args in facts]
    for _ in range(draw(st.integers(0, 6 - len(clauses)))):
        i = draw(st.integers(1, len(PREDS) - 1))
        name, arity = PREDS[i]
        body = tuple(draw(st.lists(literal(i), min_size=1, max_size=2)))
        body_vars = [a for _, args in body for a in args if a in VARS]
        pool = body_vars + list(CONSTS)
        head = tuple(draw(st.sampled_from(pool)) for _ in range(arity))
        clauses.append((name, head, body))
    return clauses


def text_of(clauses) -> str:
    def lit(name, args):
        return f"{name}({', '.join(args)})"

    out = []
    for name, head, body in clauses:
        if body:
            out.append(f"{lit(name, head)} :- {', '.join(lit(n, a) for n, a in body)}.")
        else:
            out.append(f"{lit(name, head)}.")
    return "\n".join(out)


def reference(clauses) -> set:
    """Naive bottom-up fixpoint over the constant domain."""
    known: set = set()
    while True:
        new = set(known)
        for name, head, body in clauses:
            names = sorted({a for a in head + tuple(x for _, args in body for x in args) if a in VARS})
            for values in product(CONSTS, repeat=len(names)):
                env = dict(zip(names, values))
                sub = lambda args: tuple(env.get(a, a) for a in args)
                if all((n, sub(a)) in known for n, a in body):
                    new.add((name, sub(head)))
        if new == known:
            return known
        known = new


@settings(max_examples=150, deadline=None)
@given(program())
def test_engine_matches_reference(clauses):
    kb = KnowledgeBase()
    for name, arity in PREDS:
        kb.declare(name, arity)
    kb.extend(parse_clauses(text_of(clauses)))
    ref = reference(clauses)
    for name, arity in PREDS:
        q = f"{name}({', '.join(VARS[:arity])})"
        got = {(name, tuple(str(row[v]) for v in VARS[:arity])) for row in query(kb, q)}
        assert got == {f for f in ref if f[0] == name}


def terms(depth=2):
    leaf = st.one_of(
        st.sampled_from(CONSTS).map(Atom),
        st.sampled_from(VARS).map(Var),
        st.integers(-5, 5).map(Int),
    )
    return st.recursive(
        leaf,
        lambda inner: st.builds(lambda f, args: Compound(f, tuple(args)), st.sampled_from(("f", "g")),
                                st.lists(inner, min_size=1, max_size=3)),
        max_leaves=8,
    )


@settings(max_examples=300, deadline=None)
@given(terms(), terms())
def test_unifier_is_sound(t1, t2):
    s = unify(t1, t2)
    if s is not None:
        assert resolve(t1, s) == resolve(t2, s)


@settings(max_examples=200, deadline=None)
@given(terms())
def test_unify_with_self(t):
    assert unify(t, t) is not None


@settings(max_examples=300, deadline=None)
@given(terms())
def test_term_round_trip(t):
    # variables are compared by identity, so non-ground terms go through text
    text = format_term(t)
    back = parse_term(text)
    assert format_term(back) == text
    if is_ground(t):
        assert back == t


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.sampled_from(("preferred", "neutral", "filtered"))), max_size=12))
def test_dedup_partition_is_stable(items):
    cands = [RawCandidate("e", ("a", 1), str(k), ("a", k), "direct", "null_ref", 1) for k, _ in items]
    statuses = [s for _, s in items]
    out = [c.cause for c in dedup_and_rank(cands, statuses)]
    first = {}
    for (k, s) in items:
        if s != "filtered":
            first.setdefault(str(k), s)
    expected = [k for k, s in first.items() if s == "preferred"] + [k for k, s in first.items() if s == "neutral"]
    assert out == expected
