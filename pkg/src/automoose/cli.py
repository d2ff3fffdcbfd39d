"""Command line entry point: one subcommand per lifecycle stage.

Exit status 0 on success, 1 on domain errors, 2 on usage errors.  Every
subcommand is a thin adapter over the same service layer the tool server
exposes, and --json switches the output to the exact tool payloads.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional

from . import hit
from .architect import ArchitectError, parse_intent
from .orchestrator import reproduce_command
from .plan import plan_to_json
from .server.service import WorkflowService
from .server.tools import ToolError, canonical_json, handle_tool


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2))


def _service(args) -> WorkflowService:
    return WorkflowService(
        runs_dir=getattr(args, "runs_dir", None),
        backend=getattr(args, "backend", None),
    )


def cmd_plan(args) -> int:
    result = parse_intent(args.prompt)
    if result.rejection is not None:
        _print_json(result.rejection)
        return 1
    _print_json(plan_to_json(result.plan))
    return 0


def cmd_generate(args) -> int:
    params = {}
    for item in args.param or []:
        if "=" not in item:
            print(f"--param expects key=value, got {item!r}", file=sys.stderr)
            return 2
        key, value = item.split("=", 1)
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    if args.preset:
        from .plugins import registry_load

        presets = registry_load().get(args.plugin).metadata.presets
        if args.preset not in presets:
            print(f"unknown preset {args.preset!r}; available: {', '.join(sorted(presets))}",
                  file=sys.stderr)
            return 1
        params = {**presets[args.preset], **params}
    service = _service(args)
    payload = handle_tool(service, "generate_input",
                          {"params": params, "plugin": args.plugin}, True)
    if args.json:
        sys.stdout.write(canonical_json(payload).decode() + "\n")
    else:
        sys.stdout.write(payload["input_file"])
    return 0


def _tail_run(service: WorkflowService, run_id: str) -> int:
    offset = 0
    while True:
        chunk, offset_new = service.orchestrator.stream_log(run_id, offset, wait=0.5)
        if chunk:
            sys.stdout.write(chunk.decode("utf-8", errors="replace"))
            sys.stdout.flush()
        offset = offset_new
        record = service.orchestrator.get_record(run_id)
        if record.status in ("done", "failed", "stopped") and not chunk:
            print(f"[{record.status}] exit_code={record.exit_code} "
                  f"wall_time_s={record.wall_time_s}")
            return 0 if record.status == "done" else 1
        time.sleep(0.05)


def cmd_run(args) -> int:
    service = _service(args)
    text = Path(args.input).read_text()
    payload = handle_tool(service, "run_simulation",
                          {"input_file": text, "n_mpi": args.n_mpi}, True)
    run_id = payload["run_id"]
    print(f"run_id: {run_id}")
    if args.no_tail:
        service.orchestrator.wait(run_id)
        record = service.orchestrator.get_record(run_id)
        return 0 if record.status == "done" else 1
    return _tail_run(service, run_id)


def cmd_sweep(args) -> int:
    service = _service(args)
    base_params = {}
    if args.param_file:
        base_params = json.loads(Path(args.param_file).read_text())
    for item in args.param or []:
        key, value = item.split("=", 1)
        try:
            base_params[key] = json.loads(value)
        except json.JSONDecodeError:
            base_params[key] = value
    values = [json.loads(v) for v in args.values.split(",")]
    payload = handle_tool(service, "run_sweep", {
        "sweep_param": args.sweep_param,
        "values": values,
        "base_params": base_params,
    }, True)
    if args.json:
        sys.stdout.write(canonical_json(payload).decode() + "\n")
    else:
        print(f"sweep_id: {payload['sweep_id']}")
        for run_id in payload["run_ids"]:
            print(f"  {run_id}")
    if args.wait:
        service.orchestrator.wait_all(payload["run_ids"])
        states = [service.orchestrator.get_record(r).status for r in payload["run_ids"]]
        print("final states:", ", ".join(states))
        return 0 if all(s == "done" for s in states) else 1
    return 0


def cmd_status(args) -> int:
    service = _service(args)
    if args.run_id:
        payload = handle_tool(service, "get_run_status", {"run_id": args.run_id}, False)
    else:
        payload = handle_tool(service, "list_runs", {}, False)
    _print_json(payload)
    return 0


def cmd_results(args) -> int:
    service = _service(args)
    payload = handle_tool(service, "get_results", {"run_id": args.run_id}, False)
    if args.narrative and "interpretation_text" in payload:
        print(payload["interpretation_text"])
        print()
    if args.json:
        sys.stdout.write(canonical_json(payload).decode() + "\n")
    else:
        _print_json(payload)
    return 0


def cmd_diff(args) -> int:
    reference = hit.parse(Path(args.reference).read_text())
    candidate = hit.parse(Path(args.candidate).read_text())
    classes = hit.diff_classify(reference, candidate)
    width = max(len(name) for name in classes)
    for name, cls in classes.items():
        print(f"[{name}]".ljust(width + 3), cls.symbol, cls.value)
    counts = hit.diff_summary(classes)
    print(f"{counts['exact']} exact, {counts['equivalent']} equivalent, "
          f"{counts['differs']} differ")
    return 0


def cmd_report(args) -> int:
    from .report import write_report

    service = _service(args)
    payload = handle_tool(service, "get_results", {"run_id": args.run_id}, False)
    if payload.get("status") not in ("done",):
        print(f"run {args.run_id} is not done: {payload.get('status')}", file=sys.stderr)
        return 1
    out_dir = args.out or str(service.orchestrator.runs_dir / args.run_id / "report")
    for path in write_report(payload, out_dir):
        print(path)
    return 0


def cmd_reproduce(args) -> int:
    print(reproduce_command(args.run_dir))
    return 0


def cmd_serve(args) -> int:
    service = WorkflowService(runs_dir=args.runs_dir, backend=args.backend)
    if args.stdio:
        from .server.stdio import serve_stdio

        serve_stdio(service, execution_allowed=args.execution)
        return 0
    from .server.http import serve_http

    serve_http(port=args.http, service=service,
               execution_default=args.execution, static_dir=args.static_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="automoose",
        description="prompt -> input file -> sweep -> diagnosis -> kinetics workflow",
    )
    parser.add_argument("--runs-dir", default=None, help="run directory root")
    parser.add_argument("--backend", default=None, choices=("reference", "external"),
                        help="solver backend (default: reference)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="parse a prompt into a plan JSON")
    p.add_argument("prompt")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("generate", help="render an input file")
    p.add_argument("--plugin", default="grain_growth")
    p.add_argument("--preset", default=None)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="launch one simulation and tail its log")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-n", "--n-mpi", type=int, default=1)
    p.add_argument("--no-tail", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="fan out a parameter sweep")
    p.add_argument("--sweep-param", "--param-name", dest="sweep_param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--param-file", default=None)
    p.add_argument("--wait", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("status", help="run status or registry listing")
    p.add_argument("run_id", nargs="?")
    p.set_defaults(func=cmd_status)

    p = sub.add_parser("results", help="kinetics payload for a run or sweep")
    p.add_argument("run_id")
    p.add_argument("--narrative", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_results)

    p = sub.add_parser("diff", help="block-by-block input comparison")
    p.add_argument("reference")
    p.add_argument("candidate")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("report", help="write summary tables and figures")
    p.add_argument("run_id")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("reproduce", help="print the launch command for a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("serve", help="start the tool server")
    p.add_argument("--stdio", action="store_true")
    p.add_argument("--http", type=int, default=None, metavar="PORT")
    p.add_argument("--execution", action="store_true",
                   help="grant the execution capability to callers")
    p.add_argument("--static-dir", default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ToolError, ArchitectError, hit.HitParseError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
