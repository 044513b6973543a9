import pytest

from conftest import program_of
from nullcause.minil import RuntimeConfigError
from nullcause.minil.runtime import PROBE_NAME, format_failure, run_tests


def single(source, **kw):
    (outcome,) = run_tests(program_of(source), **kw)
    return outcome


def test_bug01_npe(bug01_program):
    (o,) = run_tests(bug01_program)
    assert o.verdict == "npe"
    assert (o.npe.expr_text, o.npe.kind) == ("item", "builtin_arg")
    assert (o.stack[0].class_name, o.stack[0].method) == ("Repo", "size")


def test_bug01_failure_text(bug01_program):
    (o,) = run_tests(bug01_program)
    assert format_failure(o) == (
        'NullPointerException: "item" is null\n'
        "  at Repo.size(repo:9)\n"
        "  at RepoTest.testSize(repo:15)"
    )


def test_passing_test_has_empty_stack():
    o = single("class T { test method t() { assert true; } }")
    assert o.verdict == "pass" and o.stack == [] and o.npe is None


def test_deref_blames_receiver():
    o = single("class T {\n  field f;\n  test method t() {\n    var a = null;\n    var b = a.f;\n  }\n}\n")
    assert (o.verdict, o.npe.kind, o.npe.expr_text) == ("npe", "deref", "a")
    assert format_failure(o).splitlines()[0] == 'NullPointerException: "a" is null'


def test_blame_is_innermost_null_receiver():
    src = "class B { field c; }\nclass T {\n  test method t() {\n    var x = new B();\n    var y = x.c.c;\n  }\n}\n"
    o = single(src)
    assert o.npe.expr_text == "x.c"


def test_assert_failure_format():
    o = single("class T {\n  test method t() {\n    assert 1 == 2;\n  }\n}\n")
    assert o.verdict == "assert_fail"
    assert format_failure(o).splitlines() == ["AssertionError", "  at T.t(a:3)"]


def test_operator_and_builtin_kinds():
    o = single("class T {\n  test method t() {\n    var a = null;\n    assert a + 1 == 2;\n  }\n}\n")
    assert (o.npe.kind, o.npe.expr_text) == ("operator", "a")
    o = single('class T {\n  test method t() {\n    var a = null;\n    assert concat("x", a) == "x";\n  }\n}\n')
    assert (o.npe.kind, o.npe.expr_text) == ("builtin_arg", "a")
    o = single("class T {\n  test method t() {\n    var a = null;\n    assert a == null;\n  }\n}\n")
    assert o.verdict == "pass"


def test_step_limit():
    o = single("class T {\n  test method t() {\n    while (true) { }\n  }\n}\n", step_limit=1000)
    assert o.verdict == "other_error" and "step limit" in o.message


def test_coverage_matches_hand_walk():
    src = (
        "class T {\n"              # 1
        "  method f(x) {\n"         # 2
        "    if (x) {\n"            # 3
        "      return 1;\n"         # 4
        "    }\n"                   # 5
        "    return 2;\n"           # 6
        "  }\n"                     # 7
        "  test method t() {\n"     # 8
        "    var a = f(false);\n"   # 9
        "    assert a == 2;\n"      # 10
        "  }\n"
        "}\n"
    )
    o = single(src)
    assert o.verdict == "pass"
    assert {line for _, line in o.covered_lines} == {3, 6, 9, 10}


def test_outcomes_in_declaration_order_and_filter():
    src = "class T {\n  test method b() { assert true; }\n  test method a() { assert false; }\n}\n"
    assert [o.test_id for o in run_tests(program_of(src))] == ["T.b", "T.a"]
    assert [o.test_id for o in run_tests(program_of(src), ["T.a"])] == ["T.a"]
    with pytest.raises(RuntimeConfigError):
        run_tests(program_of(src), ["T.zzz"])


def test_probe_records_on_breakpoint_lines():
    src = (
        "class T {\n"
        "  test method t() {\n"
        "    var v_x_1_line_3 = null;\n"
        "    var other = 1;\n"
        "    var i = 0;\n"
        "    while (i < 2) { var p_y_2_line_6 = null; i = i + 1; }\n"
        "  }\n"
        "}\n"
    )
    (o,) = run_tests(program_of(src), probe_mode=True, breakpoint_lines={("a", 3), ("a", 6)})
    names = [(r.probe_name, r.is_null, r.line) for r in o.probe_records]
    assert names == [("v_x_1_line_3", True, 3), ("p_y_2_line_6", True, 6), ("p_y_2_line_6", True, 6)]
    import re

    assert all(re.match(PROBE_NAME, n) for n, _, _ in names)


def test_bad_breakpoint():
    with pytest.raises(RuntimeConfigError):
        run_tests(program_of("class T { test method t() { assert true; } }"), breakpoint_lines={("a", 99)})


def test_outcome_serialization_is_deterministic(bug01_program):
    a = [o.to_dict() for o in run_tests(bug01_program)]
    b = [o.to_dict() for o in run_tests(bug01_program)]
    assert a == b
