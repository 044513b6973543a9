"""Command line interface: ``nullcause analyze`` and ``nullcause bench``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .localizer import Config, StageError, analyze, probed_sources, render_report
from .logic.engine import EngineError

EXIT_OK, EXIT_NO_NPE, EXIT_INPUT = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nullcause", description="Root-cause localization for null dereferences.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="localize the NPE of one project")
    a.add_argument("--project", required=True, help="project directory (with src/ or *.mnl files)")
    a.add_argument("--tests", help="comma-separated test ids (Class.method)")
    a.add_argument("--top", type=int, help="number of candidates to report (default 10)")
    a.add_argument("--format", choices=("json", "text", "trace"), default="json")
    a.add_argument("--out", help="write the report here instead of stdout")
    a.add_argument("--emit-facts", metavar="FILE", help="write the collected facts as clause text")
    a.add_argument("--emit-probed", metavar="DIR", help="write the probed sources")
    a.add_argument("--config", help="config file (default: <project>/nullcause.toml if present)")
    a.add_argument("--no-timings", action="store_true", help="leave stage timings out of the report")

    b = sub.add_parser("bench", help="evaluate the localizer on a bug corpus")
    b.add_argument("--corpus", required=True)
    b.add_argument("--top", type=int, default=10)
    b.add_argument("--out", help="write the JSON summary here")
    return p


def _config(args) -> Config:
    path = args.config
    if path is None:
        default = Path(args.project) / "nullcause.toml"
        path = default if default.is_file() else None
    config = Config.load(path) if path else Config()
    if args.top is not None:
        config.top = args.top
    if args.tests:
        config.tests = [t.strip() for t in args.tests.split(",") if t.strip()]
    if args.no_timings:
        config.timings = False
    return config


def _write(path, data: bytes) -> None:
    if path:
        Path(path).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def cmd_analyze(args) -> int:
    try:
        if not Path(args.project).is_dir():
            raise StageError("parse", FileNotFoundError(f"no such project directory: {args.project}"))
        config = _config(args)
        analysis = analyze(args.project, config)
        report = analysis.report()
    except (StageError, EngineError, ValueError, OSError) as exc:
        print(f"nullcause: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.emit_facts:
        Path(args.emit_facts).write_text(analysis.facts_text(), encoding="utf-8")
    if args.emit_probed:
        out = Path(args.emit_probed)
        out.mkdir(parents=True, exist_ok=True)
        for class_id, text in probed_sources(analysis).items():
            (out / f"{class_id}.mnl").write_text(text, encoding="utf-8")
    _write(args.out, render_report(report, args.format, analysis))
    return EXIT_NO_NPE if report.notice == "NoNpe" else EXIT_OK


def cmd_bench(args) -> int:
    from .evalbench import ValidationError, load_corpus, render_summary, run_bug, summarize

    try:
        bugs = load_corpus(args.corpus)
    except (ValidationError, OSError) as exc:
        print(f"nullcause: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    results = [run_bug(b, N=args.top)[0] for b in bugs]
    summary = summarize(results)
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(render_summary(summary))
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "analyze":
        return cmd_analyze(args)
    return cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
