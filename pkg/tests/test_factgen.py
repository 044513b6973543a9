from conftest import program_of
from nullcause.factgen import (
    ARITY,
    assign_atoms,
    dynamic_facts,
    extract_facts,
    inject_probes,
    render_facts,
    sort_facts,
)
from nullcause.logic import parse_clauses
from nullcause.minil import ast as A
from nullcause.minil import parse, print_unit
from nullcause.minil.runtime import run_tests

ATOM_SHAPE = r"(expr[0-9]+|[vpfmc]_[A-Za-z0-9_]+_[0-9]+|t_[A-Za-z0-9_]+_[0-9]+)\Z"


def covered_of(program):
    return set().union(*(o.covered_lines for o in run_tests(program)))


def facts_text(program):
    covered = covered_of(program)
    naming = assign_atoms(program, covered)
    return naming, {str(f) for f in extract_facts(program, naming, covered)}


def test_bug01_item_shares_one_atom(bug01_program):
    naming = assign_atoms(bug01_program, covered_of(bug01_program))
    unit = bug01_program.unit("repo")
    items = [n for n in unit.walk() if (isinstance(n, A.VarDecl) and n.name == "item") or (isinstance(n, A.SimpleName) and n.name == "item")]
    assert len(items) == 2
    assert {naming.atom(n) for n in items} == {"v_item_1"}


def test_distinct_locals_get_distinct_atoms():
    p = program_of("class A {\n  method f() { var x = 1; return x; }\n  method g() { var x = 2; return x; }\n  test method t() { assert f() + g() == 3; }\n}\n")
    naming = assign_atoms(p, covered_of(p))
    decls = [n for n in p.unit("a").walk() if isinstance(n, A.VarDecl)]
    assert [naming.atom(d) for d in decls] == ["v_x_1", "v_x_2"]


def test_naming_is_deterministic_and_well_shaped(bug01_program):
    import re

    covered = covered_of(bug01_program)
    a = assign_atoms(bug01_program, covered).as_dict()["atoms"]
    b = assign_atoms(bug01_program, covered).as_dict()["atoms"]
    assert a == b
    assert all(re.match(ATOM_SHAPE, atom) for atom in a.values())
    assert len(set(a.values())) == len(a)


def test_bug01_call_line_facts(bug01_program):
    _, facts = facts_text(bug01_program)
    assert "assign(v_item_1, expr5, line(repo, 8))." in facts
    assert "method_invoc(expr5, m_find_1, line(repo, 8))." in facts
    assert "argument(p_key_2, 1, expr5)." in facts


def test_bug01_return_null_facts(bug01_program):
    _, facts = facts_text(bug01_program)
    assert "return(expr4, m_find_1, line(repo, 5))." in facts
    assert "literal(expr4, null, line(repo, 5))." in facts


def test_uncovered_method_has_no_body_facts():
    p = program_of("class A {\n  method unused() {\n    var z = len(\"q\");\n    return z;\n  }\n  test method t() {\n    assert true;\n  }\n}\n")
    _, facts = facts_text(p)
    assert not [f for f in facts if "line(a, 3)" in f or "line(a, 4)" in f]
    assert "method_range(m_unused_1, a, 2, 5)." in facts


def test_facts_parse_back_and_respect_schema(bug01_analysis):
    text = bug01_analysis.facts_text()
    clauses = parse_clauses(text)
    assert len(clauses) == len(text.strip().splitlines())
    assert all(c.indicator in ARITY.items() for c in clauses)


def test_probe_order_mirrors_nested_call():
    p = program_of(
        "class S {\n"
        "  method stream(s) {\n"
        "    return s;\n"
        "  }\n"
        "  method wrap(stream) {\n"
        "    return stream(stream.stream(stream));\n"
        "  }\n"
        "  test method t() {\n"
        "    assert wrap(new S()) != null;\n"
        "  }\n"
        "}\n"
    )
    naming = assign_atoms(p, covered_of(p))
    probed, pm = inject_probes(p, naming, {("a", 6)})
    order = [name for name in pm.probes]
    assert order[0].startswith("p_stream_") and order[0].endswith("_line_6")
    inner, outer = order[1], order[2]
    assert inner.startswith("expr") and outer.startswith("expr")
    text = print_unit(probed.unit("a"))
    assert text.index(inner) < text.index(outer)
    assert f"var {outer} = stream({inner});" in text
    parse(text, "a")


def test_loop_condition_is_not_probed():
    p = program_of(
        "class A {\n"
        "  field ready;\n"
        "  method ready() { return false; }\n"
        "  test method t() {\n"
        "    var x = new A();\n"
        "    while (x.ready()) { x = null; }\n"
        "  }\n"
        "}\n"
    )
    naming = assign_atoms(p, covered_of(p))
    probed, pm = inject_probes(p, naming, {("a", 6)})
    assert pm.probes == {}
    loop = next(n for n in probed.unit("a").walk() if isinstance(n, A.While))
    assert A.structure(loop) == A.structure(next(n for n in p.unit("a").walk() if isinstance(n, A.While)))


def test_bug01_line9_probes(bug01_analysis):
    line9 = [name for name, pr in bug01_analysis.probe_map.probes.items() if pr.line == 9]
    assert line9 == ["v_item_1_line_9", "expr6_line_9"]


def test_bug01_dynamic_facts(bug01_analysis):
    facts = {str(f) for f in bug01_analysis.dynamic_facts}
    assert "val(v_item_1, null, line(repo, 9))." in facts
    assert "npe_error(t_testSize_1, v_item_1, line(repo, 9), builtin_arg)." in facts
    assert "failed_test(t_testSize_1)." in facts


def _probed_run(src, lines):
    p = program_of(src)
    naming = assign_atoms(p, covered_of(p))
    probed, _ = inject_probes(p, naming, lines)
    outcomes = run_tests(probed, probe_mode=True, breakpoint_lines=lines)
    return dynamic_facts(outcomes, naming, p)


def test_non_null_observation_gives_no_val():
    facts = _probed_run(
        "class A {\n  test method t() {\n    var s = \"x\";\n    var n = len(s);\n    var z = null;\n    assert len(z) == n;\n  }\n}\n",
        {("a", 4), ("a", 6)},
    )
    vals = [str(f) for f in facts if f.predicate == "val"]
    assert vals == ["val(v_z_1, null, line(a, 6))."]


def test_repeated_null_observation_is_one_val():
    facts = _probed_run(
        "class A {\n"
        "  field f;\n"
        "  test method t() {\n"
        "    var i = 0;\n"
        "    while (i < 2) {\n"
        "      var g = this.f;\n"
        "      i = i + 1;\n"
        "    }\n"
        "    assert len(this.f) == 0;\n"
        "  }\n"
        "}\n",
        {("a", 6), ("a", 9)},
    )
    vals = [str(f) for f in facts if f.predicate == "val"]
    assert len(vals) == len(set(vals))
    assert sum("line(a, 6)" in v for v in vals) == 1


def test_sort_facts_deduplicates_and_orders_by_predicate(bug01_analysis):
    facts = bug01_analysis.static_facts
    assert render_facts(sort_facts(facts + facts)) == render_facts(facts)
    preds = [f.predicate for f in facts]
    assert preds == sorted(preds)
