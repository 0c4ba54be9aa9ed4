"""Command-line front end: check rule sets, run scenarios, verify traces.

Exit codes: 0 success/match, 1 verification mismatch, 2 input error
(parse or validation), 3 runtime error (non-quiescent cascade, evaluation
failure). ``run`` keeps standard output clean: without --trace it carries
nothing but trace lines; all diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .context import ContextCategory, ContextStore, FeatureId, load_state, save_state
from .dsl import RuleSet, parse_rules, validate
from .engine import DEFAULT_MAX_CASCADE_DEPTH
from .errors import AdaptError, MalformedStateFile, ParseError
from .scenario import compare_traces, parse_scenario, run_scenario
from .scene import SceneModel, parse_scene
from .workflow import Workflow, parse_workflow

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INPUT_ERROR = 2
EXIT_RUNTIME_ERROR = 3

USE_COUNT = FeatureId(ContextCategory.USER, "app_use_count")


class _InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        print(f"{path}: error: {e.strerror or e}", file=sys.stderr)
        raise _InputError() from e


def _parse(path: str, parser):
    try:
        return parser(_read(path))
    except ParseError as e:
        print(f"{path}:{e.line}: error: {e.message}", file=sys.stderr)
        raise _InputError() from e


def _load_inputs(args) -> tuple[RuleSet, SceneModel | None, Workflow | None]:
    rules = _parse(args.rules, parse_rules)
    scene = _parse(args.scene, parse_scene) if getattr(args, "scene", None) else None
    workflow = _parse(args.workflow, parse_workflow) if getattr(args, "workflow", None) else None
    return rules, scene, workflow


def _report_diagnostics(args, diags) -> bool:
    """Print diagnostics to stderr; returns True if any is an error."""
    has_error = False
    for d in diags:
        path = args.workflow if d.source == "workflow" else args.rules
        print(f"{path}:{d.line}: {d.severity}: {d.message}", file=sys.stderr)
        has_error = has_error or d.severity == "error"
    return has_error


def cmd_check(args) -> int:
    try:
        rules, scene, workflow = _load_inputs(args)
    except _InputError:
        return EXIT_INPUT_ERROR
    if _report_diagnostics(args, validate(rules, scene, workflow)):
        return EXIT_INPUT_ERROR
    return EXIT_OK


def _prepare_state(args, store: ContextStore):
    """Load --state-file into the store and bump the use counter.

    Returns the key set to persist after the run, or None without
    --state-file. A missing file counts as an empty state.
    """
    if not args.state_file:
        return None
    path = Path(args.state_file)
    loaded = ContextStore()
    if path.exists():
        try:
            loaded = load_state(path.read_text(encoding="utf-8"))
        except (OSError, MalformedStateFile) as e:
            print(f"{args.state_file}: error: {e}", file=sys.stderr)
            raise _InputError() from e
    for key in loaded.keys():
        store.set_feature(key, loaded.get_feature(key))
    count = loaded.get_feature(USE_COUNT) if loaded.has_feature(USE_COUNT) else 0
    store.set_feature(USE_COUNT, count + 1)
    return set(loaded.keys()) | {USE_COUNT}


def _save_state(args, store: ContextStore, persist_keys) -> None:
    if persist_keys is None:
        return
    Path(args.state_file).write_text(save_state(store, sorted(persist_keys, key=str)), encoding="utf-8")


def _write_trace(args, trace_text: str) -> None:
    out = getattr(args, "trace", None)
    if out:
        Path(out).write_text(trace_text, encoding="utf-8")
    else:
        sys.stdout.write(trace_text)


def _run(args) -> tuple[int, str]:
    """Shared run pipeline; returns (exit code, trace text)."""
    try:
        rules, scene, workflow = _load_inputs(args)
        scenario = _parse(args.scenario, parse_scenario)
    except _InputError:
        return EXIT_INPUT_ERROR, ""
    if _report_diagnostics(args, validate(rules, scene, workflow)):
        return EXIT_INPUT_ERROR, ""
    store = ContextStore()
    try:
        persist_keys = _prepare_state(args, store)
    except _InputError:
        return EXIT_INPUT_ERROR, ""
    try:
        trace = run_scenario(
            rules,
            scene,
            scenario,
            workflow=workflow,
            store=store,
            max_cascade_depth=getattr(args, "max_cascade", DEFAULT_MAX_CASCADE_DEPTH),
        )
        code, text = EXIT_OK, trace.render()
    except AdaptError as e:
        partial = getattr(e, "trace", None)
        print(f"runtime error: {e}", file=sys.stderr)
        code, text = EXIT_RUNTIME_ERROR, partial.render() if partial is not None else ""
    _save_state(args, store, persist_keys)
    return code, text


def cmd_run(args) -> int:
    code, text = _run(args)
    if code == EXIT_INPUT_ERROR:
        return code
    _write_trace(args, text)
    return code


def cmd_verify(args) -> int:
    try:
        golden = _read(args.golden)
    except _InputError:
        return EXIT_INPUT_ERROR
    code, text = _run(args)
    if code != EXIT_OK:
        return code
    verdict = compare_traces(text, golden)
    if verdict.match:
        return EXIT_OK
    print(f"trace mismatch at line {verdict.line}", file=sys.stderr)
    print(f"  expected: {verdict.expected if verdict.expected is not None else '<end of trace>'}", file=sys.stderr)
    print(f"  actual:   {verdict.actual if verdict.actual is not None else '<end of trace>'}", file=sys.stderr)
    return EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptkit", description="Context adaptation engine: check, run, and verify scenarios."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="parse and validate rule/scene/workflow files")
    check.add_argument("--rules", required=True)
    check.add_argument("--scene")
    check.add_argument("--workflow")
    check.set_defaults(func=cmd_check)

    run = sub.add_parser("run", help="replay a scenario and emit its trace")
    run.add_argument("--rules", required=True)
    run.add_argument("--scene", required=True)
    run.add_argument("--scenario", required=True)
    run.add_argument("--workflow")
    run.add_argument("--trace", help="write the trace here instead of stdout")
    run.add_argument("--state-file", help="persist features (and the use counter) across runs")
    run.add_argument("--max-cascade", type=int, default=DEFAULT_MAX_CASCADE_DEPTH)
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="replay a scenario and compare against a golden trace")
    verify.add_argument("--rules", required=True)
    verify.add_argument("--scene", required=True)
    verify.add_argument("--scenario", required=True)
    verify.add_argument("--workflow")
    verify.add_argument("--golden", required=True)
    verify.add_argument("--state-file")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def console_main() -> None:
    sys.exit(main())
