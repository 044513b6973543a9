"""Bug corpus, brute-force null-flow oracle and evaluation metrics."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .factgen import assign_atoms
from .minil import ast as A
from .minil.errors import MinilError, NotFound
from .minil.parser import node_at
from .minil.program import Program
from .minil.runtime import run_tests
from .rules import FILTER_PREDICATES, PREFER_PREDICATES, RANK_PREDICATES

TOP = 10
COMBOS = tuple((s, t) for t in ("null_ref", "null_arg") for s in ("direct", "origin", "transfer"))
INFLUENCE = ("none", "positive", "negative")


class ValidationError(Exception):
    pass


@dataclass
class BugCase:
    id: str
    path: Path
    program: Program
    failing_tests: list[str]
    fault_locations: list[tuple[str, int]]
    causes: list[A.SourceRange]
    in_scope: bool
    notes: str = ""
    exercises: list = field(default_factory=list)  # [(scheme, type)] the bug is built to hit
    expected_influence: dict = field(default_factory=dict)


@dataclass
class MatchResult:
    bug_id: str
    category: str  # matched, partially_matched, not_matched
    hits: list[int]  # hits[n-1]: fault locations found within Top-n, n = 1..TOP
    examined: int
    n_locations: int
    location_ranks: dict = field(default_factory=dict)  # (class, line) -> rank or None
    location_schemes: dict = field(default_factory=dict)  # (class, line) -> (scheme, type)
    influence: dict = field(default_factory=dict)  # rank predicate -> label
    in_scope: bool = True


# -- corpus ---------------------------------------------------------------------------


def load_bug(directory) -> BugCase:
    directory = Path(directory)
    bug_id = directory.name
    gt_path = directory / "ground_truth.json"
    if not (directory / "src").is_dir():
        raise ValidationError(f"{bug_id}: missing src/ directory")
    if not gt_path.is_file():
        raise ValidationError(f"{bug_id}: missing ground_truth.json")
    try:
        gt = json.loads(gt_path.read_text(encoding="utf-8"))
        program = Program.from_dir(directory / "src", project=bug_id)
    except (json.JSONDecodeError, MinilError) as exc:
        raise ValidationError(f"{bug_id}: {exc}") from exc
    for key in ("fault_locations", "causes", "in_scope"):
        if key not in gt:
            raise ValidationError(f"{bug_id}: ground truth lacks {key!r}")
    tests = {tid for tid, _ in program.tests()}
    failing = list(gt.get("failing_tests") or [])
    if not failing:
        raise ValidationError(f"{bug_id}: no failing tests declared")
    unknown = [t for t in failing if t not in tests]
    if unknown:
        raise ValidationError(f"{bug_id}: unknown failing test(s) {unknown}")
    outcomes = {o.test_id: o for o in run_tests(program)}
    for t in failing:
        if outcomes[t].verdict != "npe":
            raise ValidationError(f"{bug_id}: declared failing test {t} does not fail with NPE ({outcomes[t].verdict})")
    undeclared = [t for t, o in outcomes.items() if o.verdict == "npe" and t not in failing]
    if undeclared:
        raise ValidationError(f"{bug_id}: undeclared NPE-failing test(s) {undeclared}")
    locations = []
    for loc in gt["fault_locations"]:
        unit = program.by_id.get(loc["class"])
        if unit is None or not 1 <= loc["line"] <= unit.source.count("\n") + 1:
            raise ValidationError(f"{bug_id}: fault location {loc} outside the program")
        locations.append((loc["class"], loc["line"]))
    if not locations:
        raise ValidationError(f"{bug_id}: no fault locations")
    causes = []
    for c in gt["causes"]:
        unit = program.by_id.get(c["class"])
        if unit is None:
            raise ValidationError(f"{bug_id}: cause in unknown unit {c['class']!r}")
        raw = unit.source.encode("utf-8")
        if c["length"] < 1 or c["start"] + c["length"] > len(raw):
            raise ValidationError(f"{bug_id}: cause range {c} outside the unit")
        prefix = raw[: c["start"]].decode("utf-8", errors="replace")
        body = raw[c["start"] : c["start"] + c["length"]].decode("utf-8", errors="replace")
        line = prefix.count("\n") + 1
        rng = A.SourceRange(c["class"], c["start"], c["length"], line, line + body.count("\n"))
        try:
            node_at(unit, rng)
        except NotFound as exc:
            raise ValidationError(f"{bug_id}: cause range {c} does not resolve") from exc
        causes.append(rng)
    return BugCase(
        id=bug_id,
        path=directory,
        program=program,
        failing_tests=failing,
        fault_locations=locations,
        causes=causes,
        in_scope=bool(gt["in_scope"]),
        notes=gt.get("notes", ""),
        exercises=[tuple(x) for x in gt.get("exercises", [])],
        expected_influence=dict(gt.get("expected_influence", {})),
    )


def load_corpus(directory, check_contract: bool = True) -> list[BugCase]:
    """Load and validate every bug directory below ``directory``."""
    directory = Path(directory)
    bugs = [load_bug(d) for d in sorted(directory.iterdir()) if d.is_dir() and not d.name.startswith((".", "_"))]
    if check_contract:
        check_corpus_contract(bugs)
    return bugs


def check_corpus_contract(bugs: list[BugCase]) -> None:
    if len(bugs) < 30:
        raise ValidationError(f"corpus has {len(bugs)} bugs, needs at least 30")
    if sum(not b.in_scope for b in bugs) < 3:
        raise ValidationError("corpus needs at least 3 out-of-scope bugs")
    if not any(len(b.failing_tests) == 1 for b in bugs) or not any(len(b.failing_tests) > 1 for b in bugs):
        raise ValidationError("corpus needs bugs with single and with multiple failing tests")
    if not any(len(b.fault_locations) == 1 for b in bugs) or not any(len(b.fault_locations) > 1 for b in bugs):
        raise ValidationError("corpus needs bugs with single and with multiple fault locations")
    covered = {tuple(x) for b in bugs if b.in_scope for x in b.exercises}
    missing = [c for c in COMBOS if c not in covered]
    if missing:
        raise ValidationError(f"corpus lacks scheme/type combination(s) {missing}")


# -- oracle ---------------------------------------------------------------------------


class _CopyLog:
    def __init__(self):
        self.edges: list = []

    def copy(self, dst, src, value) -> None:
        if src is not None:
            self.edges.append((dst, src, value is None))


def oracle_candidates(bug) -> set:
    """Nodes reachable backwards from each null expression along null-valued copies.

    Runs the original program with a copy-event recorder; shares no logic
    with the rule base.  Nodes are ``(atom, (class_id, line))`` pairs.
    """
    program = bug.program if isinstance(bug, BugCase) else bug
    failing = bug.failing_tests if isinstance(bug, BugCase) else None
    plain = run_tests(program, failing)
    npe = [o for o in plain if o.verdict == "npe"]
    if not npe:
        return set()
    covered = set().union(*(o.covered_lines for o in npe))
    naming = assign_atoms(program, covered)

    def name(flow_node):
        node, line = flow_node
        return (naming.atom(node), (node.range.class_id, line))

    result = set()
    for outcome in npe:
        log = _CopyLog()
        run_tests(program, [outcome.test_id], listener=log)
        preds: dict = {}
        for dst, src, is_null in log.edges:
            if is_null:
                preds.setdefault(name(dst), set()).add(name(src))
        blamed = node_at(program.unit(outcome.npe.range.class_id), outcome.npe.range)
        start = (naming.atom(blamed), (outcome.npe.range.class_id, outcome.npe.range.start_line))
        seen = {start}
        stack = [start]
        while stack:
            for p in preds.get(stack.pop(), ()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        result |= seen
    return result


# -- metrics ----------------------------------------------------------------------------


def _candidate_locs(report, n: int) -> list:
    return [(c.rank, c.loc, (c.scheme, c.null_type)) for c in report.candidates if c.rank <= n]


def evaluate(report, bug: BugCase, N: int = TOP) -> MatchResult:
    """Match report candidates against the bug's fault locations within Top-N."""
    ranks: dict = {}
    schemes: dict = {}
    for rank, loc, combo in sorted(_candidate_locs(report, N)):
        if loc in bug.fault_locations and loc not in ranks:
            ranks[loc] = rank
            schemes[loc] = combo
    found = [ranks[l] for l in bug.fault_locations if l in ranks]
    hits = [sum(1 for r in found if r <= n) for n in range(1, TOP + 1)]
    total = len(bug.fault_locations)
    if len(found) == total:
        category, examined = "matched", max(found)
    elif found:
        category, examined = "partially_matched", N
    else:
        category, examined = "not_matched", N
    return MatchResult(
        bug_id=bug.id,
        category=category,
        hits=hits,
        examined=examined,
        n_locations=total,
        location_ranks={l: ranks.get(l) for l in bug.fault_locations},
        location_schemes=schemes,
        in_scope=bug.in_scope,
    )


@dataclass(frozen=True)
class Aue:
    value: Fraction
    empty: bool

    def __float__(self):
        return float(self.value)


def aue(results) -> Aue:
    """Mean unnecessary examinations over matched bugs."""
    matched = [r for r in results if r.category == "matched"]
    if not matched:
        return Aue(Fraction(0), True)
    total = sum(Fraction(r.examined - r.n_locations) for r in matched)
    return Aue(total / len(matched), False)


def _score(report, bug: BugCase, n: int = TOP) -> int:
    """Sum of fault-location ranks, a miss counting as n + 1."""
    r = evaluate(report, bug, n)
    return sum(v if v is not None else n + 1 for v in r.location_ranks.values())


def influence(analysis, bug: BugCase, n: int = TOP) -> dict:
    """Effect of each rank predicate on this bug's fault-location ranks."""
    base = _score(analysis.report(disabled=(), top=n), bug, n)
    out = {}
    for pred in RANK_PREDICATES:
        if not any(pred in held for held in analysis.conds):
            continue
        without = _score(analysis.report(disabled=(pred,), top=n), bug, n)
        out[pred] = "positive" if base < without else "negative" if base > without else "none"
    return out


def run_bug(bug: BugCase, config=None, N: int = TOP):
    """Localize one bug and evaluate it; returns (MatchResult, Analysis)."""
    from .localizer import Config, analyze

    config = config or Config(top=N)
    analysis = analyze(bug.program, config)
    analysis.project = bug.id
    report = analysis.report(top=N)
    result = evaluate(report, bug, N)
    result.influence = influence(analysis, bug, N)
    return result, analysis


def summarize(results) -> dict:
    results = list(results)
    n = len(results)
    counts = Counter(r.category for r in results)
    rows = {}
    for cat in ("matched", "partially_matched", "not_matched"):
        rows[cat] = {"count": counts.get(cat, 0), "ratio": round(counts.get(cat, 0) / n, 4) if n else 0.0}
    top_n = []
    for k in range(1, TOP + 1):
        bugs = sum(1 for r in results if r.category == "matched" and r.examined <= k)
        locs = sum(r.hits[k - 1] for r in results)
        top_n.append({"n": k, "bugs": bugs, "locations": locs})
    a = aue(results)
    usage = Counter()
    for r in results:
        for loc, combo in r.location_schemes.items():
            usage[combo] += 1
    scheme_usage = [{"scheme": s, "null_type": t, "locations": usage.get((s, t), 0)} for s, t in COMBOS]
    infl = {p: {label: 0 for label in INFLUENCE} for p in RANK_PREDICATES}
    for r in results:
        for p, label in r.influence.items():
            infl[p][label] += 1
    return {
        "bugs": n,
        "categories": rows,
        "top_n": top_n,
        "aue": {"value": str(a.value), "float": round(float(a.value), 4), "empty": a.empty},
        "identified_locations": sum(usage.values()),
        "scheme_usage": scheme_usage,
        "influence": infl,
        "per_bug": [
            {
                "id": r.bug_id,
                "in_scope": r.in_scope,
                "category": r.category,
                "examined": r.examined,
                "fault_locations": r.n_locations,
                "location_ranks": [
                    {"class": l[0], "line": l[1], "rank": v} for l, v in r.location_ranks.items()
                ],
                "influence": r.influence,
            }
            for r in results
        ],
    }


def render_summary(summary: dict) -> str:
    lines = [f"bugs: {summary['bugs']}"]
    for cat, row in summary["categories"].items():
        lines.append(f"  {cat:<18} {row['count']:>3}  {row['ratio'] * 100:6.2f}%")
    lines.append("top-N (matched bugs / located faults): " + "  ".join(
        f"{t['n']}:{t['bugs']}/{t['locations']}" for t in summary["top_n"]
    ))
    lines.append(f"AUE: {summary['aue']['value']}" + (" (no matched bugs)" if summary["aue"]["empty"] else ""))
    lines.append("scheme usage:")
    for row in summary["scheme_usage"]:
        lines.append(f"  {row['scheme']:<9} {row['null_type']:<9} {row['locations']:>3}")
    lines.append("rank rule influence (none/positive/negative):")
    for p, row in summary["influence"].items():
        lines.append(f"  {p:<24} {row['none']:>3} {row['positive']:>3} {row['negative']:>3}")
    return "\n".join(lines) + "\n"


__all__ = [
    "Aue",
    "BugCase",
    "COMBOS",
    "FILTER_PREDICATES",
    "MatchResult",
    "PREFER_PREDICATES",
    "TOP",
    "ValidationError",
    "aue",
    "check_corpus_contract",
    "evaluate",
    "influence",
    "load_bug",
    "load_corpus",
    "oracle_candidates",
    "render_summary",
    "run_bug",
    "summarize",
]
