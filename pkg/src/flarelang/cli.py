"""``flare`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import report
from .compose import compose
from .errors import CompositionError, FlareError, FlareRuntimeError, InvariantError, StepLimitExceeded
from .lang import ast_to_json, parse, unparse
from .runtime import DEFAULT_MAX_STEPS, EventScript, check_agreement, run

EXIT_OK, EXIT_SOURCE, EXIT_INVARIANT, EXIT_DISAGREE, EXIT_USAGE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flare", description="FLARE v2 analysis for FlareLang programs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("parse", help="parse a file and print its canonical form or AST")
    sp.add_argument("file")
    sp.add_argument("--ast-json", action="store_true", help="emit the AST as JSON")

    sa = sub.add_parser("analyze", help="elements, properties and bindings")
    sa.add_argument("file")
    sa.add_argument("--scale", choices=tuple(report.VIEW_SCALES), default="all")
    sa.add_argument("--format", choices=("json", "dot", "md"), default="json")
    sa.add_argument("--compose", metavar="ID,ID,...", help="compose these elements and print the result")

    st = sub.add_parser("trace", help="run the program and print its trace as JSON Lines")
    st.add_argument("file")
    st.add_argument("--events", metavar="SCRIPT.json")
    st.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    st.add_argument("--out", metavar="trace.jsonl")

    sc = sub.add_parser("check", help="compare runtime transfers with static bindings")
    sc.add_argument("file")
    sc.add_argument("--events", metavar="SCRIPT.json")
    sc.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)

    ss = sub.add_parser("stems", help="print classroom question stems")
    ss.add_argument("file")
    return p


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: error: cannot read file: {exc.strerror if isinstance(exc, OSError) else exc}")


def _events(path: str | None) -> EventScript:
    if path is None:
        return EventScript()
    try:
        return EventScript.from_json(json.loads(_read(path)))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: error: invalid JSON: {exc.msg}")
    except ValueError as exc:
        raise UsageError(f"{path}: error: {exc}")


def _cmd_parse(args, out) -> int:
    program = parse(_read(args.file), args.file)
    if args.ast_json:
        out.write(json.dumps(ast_to_json(program), sort_keys=True, indent=2) + "\n")
    else:
        out.write(unparse(program))
    return EXIT_OK


def _cmd_analyze(args, out) -> int:
    analysis = report.analyze_source(_read(args.file), args.file)
    if args.compose is not None:
        ids = [s.strip() for s in args.compose.split(",") if s.strip()]
        try:
            result = compose(analysis.tree, ids, "composite", analysis.bindings)
        except CompositionError as exc:
            raise UsageError(f"{args.file}: error: {exc.message}")
        out.write(json.dumps(result.to_json(), sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    doc = report.build_document(analysis, args.scale)
    render = {"json": report.to_json, "dot": report.to_dot, "md": report.to_markdown}[args.format]
    out.write(render(doc))
    for w in analysis.warnings:
        print(w.diagnostic(), file=sys.stderr)
    return EXIT_OK


def _trace(args):
    if args.max_steps < 1:
        raise UsageError("flare: error: --max-steps must be positive")
    analysis = report.analyze_source(_read(args.file), args.file)
    script = _events(args.events)
    try:
        trace = run(analysis.tree, script, args.max_steps)
    except StepLimitExceeded as exc:
        print(f"{args.file}:1:1: warning: {exc.message}; trace is partial", file=sys.stderr)
        trace = exc.trace
    return analysis, trace


def _cmd_trace(args, out) -> int:
    _, trace = _trace(args)
    text = trace.to_jsonl()
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise UsageError(f"{args.out}: error: cannot write file: {exc.strerror}")
    else:
        out.write(text)
    return EXIT_OK


def _cmd_check(args, out) -> int:
    analysis, trace = _trace(args)
    agreement = check_agreement(trace, analysis.bindings)
    out.write(agreement.summary())
    return EXIT_OK if agreement.ok else EXIT_DISAGREE


def _cmd_stems(args, out) -> int:
    out.write(report.stems_text(report.analyze_source(_read(args.file), args.file)))
    return EXIT_OK


COMMANDS = {
    "parse": _cmd_parse,
    "analyze": _cmd_analyze,
    "trace": _cmd_trace,
    "check": _cmd_check,
    "stems": _cmd_stems,
}


def main(argv: list[str] | None = None) -> int:
    out = sys.stdout
    try:
        args = _build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"flare: internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except FlareRuntimeError as exc:
        print(exc.diagnostic(), file=sys.stderr)
        return EXIT_SOURCE
    except FlareError as exc:
        print(exc.diagnostic(), file=sys.stderr)
        return EXIT_SOURCE


if __name__ == "__main__":
    sys.exit(main())
