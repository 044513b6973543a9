"""Acceptance criteria 1-9.

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
Tolerances are pinned in the constants below.
"""

import json
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import CORPUS, FAMILY_KB  # noqa: E402
from nullcause.evalbench import (  # noqa: E402
    COMBOS,
    MatchResult,
    aue,
    evaluate,
    load_bug,
    load_corpus,
    oracle_candidates,
    run_bug,
    summarize,
)
from nullcause.localizer import Config, analyze, render_report  # noqa: E402
from nullcause.logic import KnowledgeBase, parse_clauses, query  # noqa: E402
from nullcause.minil.runtime import run_tests  # noqa: E402

ENGINE_MS = 10.0
PROBE_CORPUS_S = 30.0
MIN_IN_SCOPE = 27
TOP3_RATIO = 0.85
TOP5_RATIO = 0.95
ANALYZE_S = 2.0
LOCALIZE_MS = 200.0

RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[n]


@pytest.fixture(scope="module")
def bugs():
    return load_corpus(CORPUS)


@pytest.fixture(scope="module")
def runs(bugs):
    out = {}
    for b in bugs:
        t0 = time.perf_counter()
        result, an = run_bug(b)
        out[b.id] = (result, an, time.perf_counter() - t0)
    return out


def test_1_engine_conformance():
    kb = KnowledgeBase(parse_clauses(FAMILY_KB))
    t0 = time.perf_counter()
    fathers = [(str(r["X"]), str(r["Y"])) for r in query(kb, "father(X, Y)")]
    mother = query(kb, "mother(jill, jane)")
    ms = (time.perf_counter() - t0) * 1000
    ok = fathers == [("jack", "jill"), ("john", "jane")] and mother == [] and ms < ENGINE_MS
    record(1, ok, f"father(X, Y) = {fathers}, mother(jill, jane) = {mother}, {ms:.2f} ms")


def _signature(o):
    npe = o.npe.expr_text if o.npe else None
    return (o.verdict, npe, [(f.class_name, f.method) for f in o.stack])


def test_2_probe_equivalence(bugs):
    t0 = time.perf_counter()
    checked, mismatches = 0, []
    for b in bugs:
        an = analyze(b.program, Config(timings=False))
        breakpoints = {(f.class_id, f.line) for o in an.npe_outcomes for f in o.stack}
        plain = run_tests(b.program)
        probed = run_tests(an.probed, probe_mode=True, breakpoint_lines=breakpoints)
        for o, p in zip(plain, probed):
            checked += 1
            if o.test_id != p.test_id or _signature(o) != _signature(p):
                mismatches.append(f"{b.id}:{o.test_id}")
    secs = time.perf_counter() - t0
    ok = not mismatches and checked > 0 and secs < PROBE_CORPUS_S
    record(2, ok, f"{checked} test runs, mismatches {mismatches}, {secs:.2f} s")


def test_3_oracle_equivalence(bugs, runs):
    bad = [b.id for b in bugs if b.in_scope and oracle_candidates(b) != runs[b.id][1].candidate_set()]
    n = sum(b.in_scope for b in bugs)
    record(3, not bad, f"{n - len(bad)}/{n} in-scope bugs equal to the oracle; differing {bad}")


def test_4_corpus_localization(bugs, runs):
    in_scope = [runs[b.id][0] for b in bugs if b.in_scope]
    out_scope = [runs[b.id][0] for b in bugs if not b.in_scope]
    matched = [r for r in in_scope if r.category == "matched"]
    top3 = sum(r.examined <= 3 for r in matched) / max(len(matched), 1)
    top5 = sum(r.examined <= 5 for r in matched) / max(len(matched), 1)
    ok = (
        len(in_scope) >= MIN_IN_SCOPE
        and len(matched) == len(in_scope)
        and top3 >= TOP3_RATIO
        and top5 >= TOP5_RATIO
        and all(r.category == "not_matched" for r in out_scope)
    )
    record(
        4,
        ok,
        f"matched {len(matched)}/{len(in_scope)} in scope, top-3 {top3:.2%}, top-5 {top5:.2%}, "
        f"out of scope not matched {sum(r.category == 'not_matched' for r in out_scope)}/{len(out_scope)}",
    )


def test_5_scheme_coverage(runs):
    summary = summarize([r for r, _, _ in runs.values()])
    usage = {(row["scheme"], row["null_type"]): row["locations"] for row in summary["scheme_usage"]}
    missing = [c for c in COMBOS if usage[c] < 1]
    record(5, not missing, "usage " + ", ".join(f"{s}/{t}={usage[(s, t)]}" for s, t in COMBOS))


def test_6_determinism(bugs):
    differing = []
    for b in bugs:
        first, second = (render_report(analyze(b.path, Config(timings=False)).report()) for _ in range(2))
        if first != second:
            differing.append(b.id)
    record(6, not differing, f"{len(bugs) - len(differing)}/{len(bugs)} byte-identical JSON reports")


def test_7_performance(bugs):
    worst_total, worst_localize, missing = (0.0, ""), (0.0, ""), []
    for b in bugs:
        t0 = time.perf_counter()
        an = analyze(b.path, Config())
        data = json.loads(render_report(an.report()))
        total = time.perf_counter() - t0
        timings = data["timings"]
        if not timings or "localize" not in timings:
            missing.append(b.id)
            continue
        worst_total = max(worst_total, (total, b.id))
        worst_localize = max(worst_localize, (timings["localize"], b.id))
    ok = not missing and worst_total[0] < ANALYZE_S and worst_localize[0] < LOCALIZE_MS
    record(
        7,
        ok,
        f"max analyze {worst_total[0] * 1000:.0f} ms ({worst_total[1]}), "
        f"max localize {worst_localize[0]:.0f} ms ({worst_localize[1]}), missing timings {missing}",
    )


def test_8_metric_fixtures():
    from types import SimpleNamespace

    from nullcause.evalbench import BugCase

    def report(*locs):
        return SimpleNamespace(candidates=[
            SimpleNamespace(rank=i, loc=l, scheme="direct", null_type="null_ref") for i, l in enumerate(locs, 1)
        ])

    two = BugCase("b", None, None, ["T.t"], [("a", 1), ("a", 3)], [], True)
    r = evaluate(report(("a", 1), ("a", 2), ("a", 3)), two)
    bug01 = load_bug(CORPUS / "bug01")
    checks = {
        "bug01 line 5 at rank 1: examined 1": evaluate(report(("repo", 5), ("repo", 9)), bug01).examined == 1,
        "ranks {1,3}: examined 3": r.examined == 3 and r.category == "matched",
        "ranks {1,3}: AUE 1": aue([r]).value == 1,
        "ranks {1,2}: AUE 0": aue([evaluate(report(("a", 1), ("a", 3)), two)]).value == 0,
        "partial: examined N": evaluate(report(("a", 1)), two, 10).examined == 10,
        "AUE of 1,2,3 examined = 1": aue([MatchResult("b", "matched", [], k, 1) for k in (1, 2, 3)]).value == 1,
        "no matched bugs: empty": aue([]).empty,
    }
    failed = [k for k, v in checks.items() if not v]
    record(8, not failed, f"{len(checks) - len(failed)}/{len(checks)} fixtures; failing {failed}")


def test_9_influence(bugs, runs):
    label_mismatch, unchanged = [], []
    for b in bugs:
        result, an, _ = runs[b.id]
        for pred, expected in b.expected_influence.items():
            if result.influence.get(pred) != expected:
                label_mismatch.append(f"{b.id}:{pred}={result.influence.get(pred)}!={expected}")
            base = [(c.key, c.rank) for c in an.report().candidates]
            off = [(c.key, c.rank) for c in an.report(disabled=(pred,)).candidates]
            if base == off:
                unchanged.append(f"{b.id}:{pred}")
    designed = sum(len(b.expected_influence) for b in bugs)
    table = summarize([r for r, _, _ in runs.values()])["influence"]
    labels = {p: tuple(v.values()) for p, v in table.items()}
    ok = designed > 0 and not label_mismatch and not unchanged and len(table) == 5
    record(
        9,
        ok,
        f"{designed} designed labels, mismatches {label_mismatch}, unchanged {unchanged}; "
        f"(none, positive, negative) {labels}",
    )


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
