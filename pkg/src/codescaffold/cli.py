"""Command-line entry points.

``analyze`` scores a (target, candidate) pair and prints the similarity
report as JSON — the workhorse for corpus labeling. ``serve`` runs the HTTP
service.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import ParseError, Sample, Thresholds, classify_pair


def _load_sample(path: str) -> Sample:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    code = data.get("code", data.get("canonical_solution"))
    if not isinstance(data.get("statement"), str) or not isinstance(code, str):
        raise SystemExit(
            f"{path}: expected a JSON object with 'statement' and 'code' "
            "(or 'canonical_solution') string fields"
        )
    return Sample(statement=data["statement"], code=code)


def cmd_analyze(args) -> int:
    target = _load_sample(args.target)
    candidate = _load_sample(args.candidate)
    thresholds = Thresholds(tau_struct=args.tau_struct, tau_surf=args.tau_surf)
    try:
        report = classify_pair(target, candidate, thresholds)
    except ParseError as exc:
        print(json.dumps({"error": "parse", "origin": exc.origin, "line": exc.line,
                          "column": exc.column, "detail": exc.message}),
              file=sys.stderr)
        return 2
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .app import create_app
    from .config import ServiceConfig, load_config

    config = load_config(args.config) if args.config else ServiceConfig()
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codescaffold")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser(
        "analyze", help="classify a (target, candidate) pair into its quadrant"
    )
    analyze.add_argument("--target", required=True,
                         help="JSON file with statement + canonical_solution/code")
    analyze.add_argument("--candidate", required=True,
                         help="JSON file with statement + code")
    analyze.add_argument("--tau-struct", type=float, default=0.60, dest="tau_struct")
    analyze.add_argument("--tau-surf", type=float, default=0.35, dest="tau_surf")
    analyze.set_defaults(func=cmd_analyze)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", default=None, help="path to a JSON config file")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
