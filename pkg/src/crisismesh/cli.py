"""Command-line entry points: run, query, sniff, serve.

Exit codes: 0 success, 1 expectation mismatch (wrong final phase, missing
recommendation target, protocol violations, failed run), 2 unreadable or
malformed inputs.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import PipelineConfig, load_config_file
from .errors import CrisisMeshError, ParseError
from .query import evaluate, parse_query
from .runtime import sniffer_export, validate_conversation
from .scenario import RunEngine, load_scenario, parse_report, serialize_report
from .store import TripleStore, load_document

CONFIG_ENV_VAR = "CRISISMESH_CONFIG"


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _resolve_config(args) -> PipelineConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return load_config_file(path)
    return PipelineConfig()


def _report_ok(report, expected) -> bool:
    if report.failed is not None:
        return False
    if validate_conversation(report.trace):
        return False
    if expected:
        if "final_phase" in expected and report.final_phase != expected["final_phase"]:
            return False
        if "recommendation_target" in expected:
            targets = {r.target for r in report.recommendations}
            if expected["recommendation_target"] not in targets:
                return False
    return True


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(_read(args.scenario))
        config = _resolve_config(args)
    except (OSError, CrisisMeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = RunEngine(scenario, config=config).run()
    serialized = serialize_report(report)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(serialized)
    else:
        sys.stdout.write(serialized)
    ok = _report_ok(report, scenario.expected)
    print(f"final phase: {report.final_phase}", file=sys.stderr)
    if report.failed:
        print(f"run failed at tick {report.failed['tick']}: {report.failed['error']}",
              file=sys.stderr)
    return 0 if ok else 1


def cmd_query(args) -> int:
    try:
        document = _read(args.store)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    store = TripleStore()
    try:
        load_document(store, document)
        result = evaluate(store, parse_query(args.query))
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CrisisMeshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(result.to_text())
    return 0


def cmd_sniff(args) -> int:
    try:
        report = parse_report(_read(args.report))
    except (OSError, CrisisMeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(sniffer_export(report.trace))
    return 0


def cmd_serve(args) -> int:
    from .gateway import build_app, load_credentials

    try:
        scenario = load_scenario(_read(args.scenario))
        config = _resolve_config(args)
        credentials = load_credentials(_read(args.credentials))
    except (OSError, CrisisMeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    engine = RunEngine(scenario, config=config,
                       pause_at_decision=not args.auto)
    app = build_app(engine, credentials)
    if args.report:
        gateway = app.state.gateway

        def _write_report_when_done():
            gateway.wait_until_done(timeout=args.report_timeout)
            if engine.finished:
                with open(args.report, "w", encoding="utf-8") as fh:
                    fh.write(serialize_report(engine.build_report()))

        import threading
        threading.Thread(target=_write_report_when_done, daemon=True).start()

    import uvicorn

    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crisismesh")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario deterministically")
    p_run.add_argument("scenario")
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--report", default=None, help="write the run report here")
    p_run.set_defaults(func=cmd_run)

    p_query = sub.add_parser("query", help="evaluate a query over a triple document")
    p_query.add_argument("store", help="triple document path")
    p_query.add_argument("query", help="query text")
    p_query.set_defaults(func=cmd_query)

    p_sniff = sub.add_parser("sniff", help="print the sequence diagram of a report")
    p_sniff.add_argument("report")
    p_sniff.set_defaults(func=cmd_sniff)

    p_serve = sub.add_parser("serve", help="serve a scenario through the gateway")
    p_serve.add_argument("scenario")
    p_serve.add_argument("--port", type=int, default=8321)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--credentials", required=True)
    p_serve.add_argument("--config", default=None)
    p_serve.add_argument("--auto", action="store_true",
                         help="decide automatically instead of pausing for input")
    p_serve.add_argument("--report", default=None)
    p_serve.add_argument("--report-timeout", type=float, default=60.0)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
