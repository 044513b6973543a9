"""Fault localizer: the end-to-end pipeline and its report."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .factgen import (
    EntityNaming,
    ProbeMap,
    assign_atoms,
    dynamic_facts,
    extract_facts,
    inject_probes,
    render_facts,
    resolve_signal,
)
from .factgen.dynamic import UnresolvedSignal
from .logic.engine import DEFAULT_DEPTH_LIMIT, KnowledgeBase, trace_solve
from .logic.terms import Atom, Compound
from .minil import ast as A
from .minil.errors import MinilError
from .minil.printer import print_unit
from .minil.program import Program
from .minil.runtime import DEFAULT_STEP_LIMIT, TestOutcome, format_failure, run_tests
from .rules import (
    RawCandidate,
    RuleBase,
    assemble_kb,
    line_of,
    load_rules,
    query_causes,
    rank_status,
    satisfied_rank_conds,
)

STAGES = ("coverage", "static", "probe", "dynamic", "localize")


class StageError(Exception):
    """An input error attributed to a pipeline stage."""

    def __init__(self, stage: str, error: Exception):
        self.stage = stage
        self.error = error
        super().__init__(f"[{stage}] {error}")


@dataclass
class Config:
    step_limit: int = DEFAULT_STEP_LIMIT
    depth_limit: int = DEFAULT_DEPTH_LIMIT
    top: int = 10
    tests: list | None = None
    disabled: tuple = ()  # rank predicates switched off
    timings: bool = True

    @classmethod
    def from_mapping(cls, data: dict) -> "Config":
        known = {"step_limit", "depth_limit", "top", "tests", "disabled", "timings"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        values = dict(data)
        if "disabled" in values:
            values["disabled"] = tuple(values["disabled"])
        return cls(**values)

    @classmethod
    def load(cls, path) -> "Config":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python 3.10
            import tomli as tomllib

        with open(path, "rb") as fh:
            return cls.from_mapping(tomllib.load(fh))


@dataclass
class CauseCandidate:
    expr: str
    line: tuple[str, int]
    cause: str
    loc: tuple[str, int]
    scheme: str
    null_type: str
    clause: int
    evidence: list
    rank_status: str
    rank_conds: tuple = ()
    supporters: list = field(default_factory=list)  # test ids
    supporting: list = field(default_factory=list)  # (expr, line) pairs
    merged: list = field(default_factory=list)  # (scheme, null_type, clause) of collapsed duplicates
    code: str = ""
    range: A.SourceRange | None = None
    rank: int = 0

    @property
    def key(self) -> tuple:
        return (self.cause, self.loc)


@dataclass
class Report:
    project: str
    tests: list  # failing tests: dicts with test_id, atom, failure
    candidates: list[CauseCandidate]
    rule_version: str
    timings: dict
    notice: str | None = None
    filtered: list[CauseCandidate] = field(default_factory=list)
    unresolved: list[str] = field(default_factory=list)
    injection_errors: list[str] = field(default_factory=list)

    def to_dict(self, with_timings: bool = True) -> dict:
        return {
            "project": self.project,
            "tests": self.tests,
            "candidates": [_candidate_dict(c) for c in self.candidates],
            "rule_version": self.rule_version,
            "timings": {k: round(v, 3) for k, v in self.timings.items()} if with_timings else None,
            "notice": self.notice,
            "unresolved": self.unresolved,
            "injection_errors": self.injection_errors,
        }


def _loc_dict(loc) -> dict:
    return {"class": loc[0], "line": loc[1]}


def _candidate_dict(c: CauseCandidate) -> dict:
    rng = c.range
    return {
        "rank": c.rank,
        "cause": c.cause,
        "loc": _loc_dict(c.loc),
        "code": c.code,
        "range": None
        if rng is None
        else {
            "class": rng.class_id,
            "start": rng.start,
            "length": rng.length,
            "start_line": rng.start_line,
            "end_line": rng.end_line,
        },
        "expr": c.expr,
        "line": _loc_dict(c.line),
        "scheme": c.scheme,
        "null_type": c.null_type,
        "cause_clause": c.clause,
        "rank_status": c.rank_status,
        "rank_conds": list(c.rank_conds),
        "evidence": [{"expr": e, **_loc_dict(l)} for e, l in c.evidence],
        "supporters": list(c.supporters),
        "supporting": [{"expr": e, **_loc_dict(l)} for e, l in c.supporting],
        "merged": [{"scheme": s, "null_type": t, "cause_clause": k} for s, t, k in c.merged],
    }


# -- ranking ----------------------------------------------------------------------


def dedup_and_rank(candidates, statuses) -> list:
    """Drop filtered, collapse by (cause, loc), preferred before neutral.

    ``candidates`` are in emission order and ``statuses`` is parallel to it.
    The first occurrence of a key keeps its metadata and status; later
    duplicates only add evidence and supporters.
    """
    kept: dict = {}
    for cand, status in zip(candidates, statuses):
        if status == "filtered":
            continue
        if cand.key in kept:
            _merge(kept[cand.key][0], cand)
        else:
            kept[cand.key] = (cand, status)
    entries = list(kept.values())
    ordered = [e for e in entries if e[1] == "preferred"] + [e for e in entries if e[1] != "preferred"]
    ranked = []
    for rank, (cand, status) in enumerate(ordered, start=1):
        if isinstance(cand, CauseCandidate):
            cand.rank_status = status
            cand.rank = rank
        ranked.append(cand)
    return ranked


def _merge(first, dup) -> None:
    if not isinstance(first, CauseCandidate):
        return
    first.merged.append((dup.scheme, dup.null_type, dup.clause))
    for t in dup.supporters:
        if t not in first.supporters:
            first.supporters.append(t)
    for s in dup.supporting:
        if s not in first.supporting:
            first.supporting.append(s)
    for hop in dup.evidence:
        if hop not in first.evidence:
            first.evidence.append(hop)


# -- locating candidates in source ---------------------------------------------------


def locate(program: Program, naming: EntityNaming, atom: str, loc) -> A.Node | None:
    """The code node a (cause, loc) pair stands for."""
    class_id, line = loc
    unit = program.by_id.get(class_id)
    if unit is None:
        return None
    key = naming.node_key(atom)
    decl = program.node(key) if key is not None else None
    best = None
    for node in unit.walk():
        if node.range.start_line != line:
            continue
        if isinstance(node, A.FieldDecl) or isinstance(node, (A.ClassDecl, A.MethodDecl)):
            continue
        if isinstance(decl, A.FieldDecl) and isinstance(node, A.Assign):
            t = node.target
            hit = (isinstance(t, A.SimpleName) and t.decl is decl) or (
                isinstance(t, A.FieldAccess) and t.field == decl.name
            )
            if hit:
                return node
        if node is decl or (isinstance(node, A.Expr) and naming.atom(node) == atom):
            return node
        if isinstance(node, A.Assign) and isinstance(node.target, A.SimpleName) and node.target.decl is decl:
            best = best or node
    return best


# -- pipeline --------------------------------------------------------------------------


@dataclass
class Analysis:
    """Everything the pipeline computed for one project."""

    project: str
    program: Program
    config: Config
    rules: RuleBase
    coverage_outcomes: list[TestOutcome] = field(default_factory=list)
    npe_outcomes: list[TestOutcome] = field(default_factory=list)
    naming: EntityNaming | None = None
    static_facts: list = field(default_factory=list)
    probed: Program | None = None
    probe_map: ProbeMap | None = None
    probed_outcomes: list[TestOutcome] = field(default_factory=list)
    dynamic_facts: list = field(default_factory=list)
    kb: KnowledgeBase | None = None
    raw: list[RawCandidate] = field(default_factory=list)
    conds: list[frozenset] = field(default_factory=list)
    unresolved: list[str] = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def facts(self) -> list:
        return list(self.static_facts) + list(self.dynamic_facts)

    def facts_text(self) -> str:
        return render_facts(self.facts)

    def candidate_set(self) -> set:
        """Pre-filter (cause, loc) pairs."""
        return {c.key for c in self.raw}

    def report(self, disabled=None, top: int | None = None) -> Report:
        disabled = self.config.disabled if disabled is None else disabled
        top = self.config.top if top is None else top
        t0 = time.perf_counter()
        statuses = [rank_status(h, disabled) for h in self.conds]
        cands = [self._candidate(r, h, s) for r, h, s in zip(self.raw, self.conds, statuses)]
        ranked = dedup_and_rank(cands, statuses)
        filtered = [c for c, s in zip(cands, statuses) if s == "filtered"]
        timings = dict(self.timings)
        timings["localize"] = timings.get("localize", 0.0) + (time.perf_counter() - t0) * 1000
        tests = []
        for o in self.npe_outcomes:
            tests.append({"test_id": o.test_id, "atom": self.naming.test_atom(o.test_id), "failure": format_failure(o)})
        return Report(
            project=self.project,
            tests=tests,
            candidates=ranked[:top] if top else ranked,
            rule_version=self.rules.version,
            timings=timings if self.config.timings else {},
            notice=None if self.npe_outcomes else "NoNpe",
            filtered=filtered,
            unresolved=list(self.unresolved),
            injection_errors=list(self.probe_map.errors) if self.probe_map else [],
        )

    def _candidate(self, raw: RawCandidate, held, status) -> CauseCandidate:
        site = (raw.expr, raw.line)
        supporters = [tid for tid, s in self._sites().items() if site in s]
        node = locate(self.program, self.naming, raw.cause, raw.loc)
        code, rng = "", None
        if node is not None:
            rng = node.range
            code = self.program.unit(rng.class_id).text_of(rng)
        return CauseCandidate(
            expr=raw.expr,
            line=raw.line,
            cause=raw.cause,
            loc=raw.loc,
            scheme=raw.scheme,
            null_type=raw.null_type,
            clause=raw.clause,
            evidence=list(raw.evidence),
            rank_status=status,
            rank_conds=tuple(sorted(held)),
            supporters=supporters,
            supporting=[site],
            code=code,
            range=rng,
        )

    def _sites(self) -> dict:
        if not hasattr(self, "_site_cache"):
            sites = {}
            for o in self.npe_outcomes:
                try:
                    atom, line = resolve_signal(self.program, self.naming, o)
                    sites[o.test_id] = {(atom, (o.npe.range.class_id, line))}
                except UnresolvedSignal:
                    sites[o.test_id] = set()
            self._site_cache = sites
        return self._site_cache

    def trace(self, candidate: CauseCandidate) -> str:
        """Deduction events proving ``candidate`` through its satisfied clause."""
        goal = Compound(
            "cause_of",
            (Compound("npe", (Atom(candidate.expr), line_of(candidate.line))), Atom(candidate.cause), line_of(candidate.loc)),
        )
        _, trace = trace_solve(self.kb, goal, self.config.depth_limit, max_solutions=1, max_trace_depth=1)
        return trace.render()


def load_program(project_dir) -> Program:
    project_dir = Path(project_dir)
    src = project_dir / "src" if (project_dir / "src").is_dir() else project_dir
    return Program.from_dir(src, project=project_dir.name)


def analyze(project, config: Config | None = None, rules: RuleBase | None = None) -> Analysis:
    """Run the pipeline up to the rank conditions of every candidate."""
    config = config or Config()
    rules = rules or load_rules()
    timings: dict = {}

    def timed(stage, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        except (MinilError, ValueError, KeyError) as exc:
            raise StageError(stage, exc) from exc
        finally:
            timings[stage] = timings.get(stage, 0.0) + (time.perf_counter() - t0) * 1000

    if isinstance(project, Program):
        program, name = project, "program"
    else:
        name = Path(project).name
        program = timed("parse", lambda: load_program(project))
    an = Analysis(name, program, config, rules, timings=timings)
    if not program.tests():
        raise StageError("coverage", ValueError("project has no test methods"))

    def coverage():
        an.coverage_outcomes = run_tests(program, config.tests, step_limit=config.step_limit)
        an.npe_outcomes = [o for o in an.coverage_outcomes if o.verdict == "npe"]

    timed("coverage", coverage)
    covered = set().union(*(o.covered_lines for o in an.npe_outcomes)) if an.npe_outcomes else set()
    breakpoints = {(f.class_id, f.line) for o in an.npe_outcomes for f in o.stack}

    def static():
        an.naming = assign_atoms(program, covered)
        calls, fields = {}, {}
        for o in an.npe_outcomes:
            for k, v in o.call_targets.items():
                calls.setdefault(k, set()).update(v)
            for k, v in o.field_targets.items():
                fields.setdefault(k, set()).update(v)
        an.static_facts = extract_facts(program, an.naming, covered, call_targets=calls, field_targets=fields)

    timed("static", static)
    if not an.npe_outcomes:
        an.kb = assemble_kb(an.static_facts, rules)
        return an

    def probe():
        an.probed, an.probe_map = inject_probes(program, an.naming, breakpoints)
        selected = [o.test_id for o in an.npe_outcomes]
        an.probed_outcomes = run_tests(
            an.probed, selected, probe_mode=True, breakpoint_lines=breakpoints, step_limit=config.step_limit
        )

    timed("probe", probe)

    def dynamic():
        an.dynamic_facts = dynamic_facts(an.probed_outcomes, an.naming, program, an.unresolved)

    timed("dynamic", dynamic)

    def localize_stage():
        an.kb = assemble_kb(an.facts, rules)
        an.raw = query_causes(an.kb, config.depth_limit)
        an.conds = [satisfied_rank_conds(an.kb, r, config.depth_limit) for r in an.raw]

    timed("localize", localize_stage)
    return an


def localize(project, config: Config | None = None, rules: RuleBase | None = None) -> Report:
    return analyze(project, config, rules).report()


def probed_sources(analysis: Analysis) -> dict[str, str]:
    """Printed probed units by class_id (for --emit-probed)."""
    if analysis.probed is None:
        return {u.class_id: print_unit(u) for u in analysis.program.units}
    return {u.class_id: print_unit(u) for u in analysis.probed.units}


# -- rendering -----------------------------------------------------------------------------


def render_report(report: Report, fmt: str = "json", analysis: Analysis | None = None) -> bytes:
    if fmt == "json":
        data = report.to_dict(with_timings=bool(report.timings))
        return (json.dumps(data, indent=2, sort_keys=False) + "\n").encode("utf-8")
    if fmt == "text":
        return _render_text(report).encode("utf-8")
    if fmt == "trace":
        return _render_trace(report, analysis).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def _render_text(report: Report) -> str:
    lines = [f"project: {report.project}    rules: {report.rule_version}"]
    if not report.candidates:
        lines.append("no NPE detected" if report.notice == "NoNpe" else "no candidates")
        return "\n".join(lines) + "\n"
    for t in report.tests:
        lines.append(f"failing test {t['test_id']}: {t['failure'].splitlines()[0]}")
    lines.append("")
    header = f"{'rank':>4}  {'location':<16} {'scheme':<9} {'type':<9} {'status':<9} code"
    lines.append(header)
    for c in report.candidates:
        loc = f"{c.loc[0]}:{c.loc[1]}"
        code = " ".join(c.code.split())
        lines.append(f"{c.rank:>4}  {loc:<16} {c.scheme:<9} {c.null_type:<9} {c.rank_status:<9} {code}")
    return "\n".join(lines) + "\n"


def _render_trace(report: Report, analysis: Analysis | None) -> str:
    lines = [f"project: {report.project}    rules: {report.rule_version}"]
    if not report.candidates:
        lines.append("no NPE detected" if report.notice == "NoNpe" else "no candidates")
    for c in report.candidates:
        lines.append("")
        lines.append(
            f"#{c.rank} cause_of(npe({c.expr}, line({c.line[0]}, {c.line[1]})), {c.cause}, "
            f"line({c.loc[0]}, {c.loc[1]}))  clause {c.clause}: {c.scheme}/{c.null_type}  [{c.rank_status}]"
        )
        for s, t, k in c.merged:
            lines.append(f"    also by clause {k}: {s}/{t}")
        if c.rank_conds:
            lines.append(f"    rank conditions: {', '.join(c.rank_conds)}")
        hops = " <- ".join(f"{e}@{l[0]}:{l[1]}" for e, l in c.evidence)
        lines.append(f"    evidence: {hops}")
        if analysis is not None and analysis.kb is not None:
            for ev in analysis.trace(c).splitlines():
                lines.append("    " + ev)
    for c in report.filtered:
        lines.append("")
        lines.append(
            f"filtered: ({c.expr}, {c.line[0]}:{c.line[1]}, {c.cause}, {c.loc[0]}:{c.loc[1]}) "
            f"clause {c.clause} by {', '.join(x for x in c.rank_conds)}"
        )
    return "\n".join(lines) + "\n"
