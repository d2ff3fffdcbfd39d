"""The ten-tool surface: descriptors, argument checking, and dispatch.

Tool names and the read-only/execution split are part of the wire
contract.  Both transports serialize results through canonical_json so
identical calls produce byte-identical payloads.
"""

from __future__ import annotations

import json
from typing import Optional

from ..orchestrator import OrchestratorError, RunStateError, UnknownRunError
from ..plan import PlanError, SweepError
from ..plugins import PluginError
from ..results import ResultsError
from .service import WorkflowService

EXECUTION_TOOLS = ("run_simulation", "run_sweep", "stop_run")

_SCHEMAS = {
    "health_check": {
        "description": "Verify server and backend availability",
        "args": {},
        "required": (),
        "result": {"ok": "boolean", "backend": "string", "solver_path": "string", "runs_dir": "string"},
    },
    "list_plugins": {
        "description": "Enumerate registered plugins and their status",
        "args": {},
        "required": (),
        "result": {"plugins": "array"},
    },
    "generate_input": {
        "description": "Render a simulation input file via the plugin registry",
        "args": {"params": "object", "plugin": "string"},
        "required": ("params",),
        "result": {"input_file": "string"},
    },
    "run_simulation": {
        "description": "Launch a single simulation job; return run identifier",
        "args": {"input_file": "string", "n_mpi": "number", "run_id": "string"},
        "required": ("input_file",),
        "result": {"run_id": "string"},
    },
    "run_sweep": {
        "description": "Fan out a parametric sweep; return run identifiers",
        "args": {"sweep_param": "string", "values": "array", "base_params": "object"},
        "required": ("sweep_param", "values"),
        "result": {"run_ids": "array", "sweep_id": "string"},
    },
    "get_run_status": {
        "description": "Query the terminal or running state of a job",
        "args": {"run_id": "string"},
        "required": ("run_id",),
        "result": {"run_id": "string", "status": "string"},
    },
    "get_results": {
        "description": "Retrieve parsed postprocessor output and narrative",
        "args": {"run_id": "string"},
        "required": ("run_id",),
        "result": {"k_values": "object", "interpretation_text": "string"},
    },
    "list_runs": {
        "description": "List all runs with metadata summary",
        "args": {},
        "required": (),
        "result": {"runs": "array"},
    },
    "get_log_tail": {
        "description": "Return the tail of a solver log",
        "args": {"run_id": "string", "n": "number"},
        "required": ("run_id",),
        "result": {"run_id": "string", "lines": "array"},
    },
    "stop_run": {
        "description": "Send a termination signal to a running job",
        "args": {"run_id": "string"},
        "required": ("run_id",),
        "result": {"run_id": "string", "status": "string"},
    },
}

TOOL_NAMES = tuple(_SCHEMAS)

_TYPE_CHECKS = {
    "string": lambda v: isinstance(v, str),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
    "object": lambda v: isinstance(v, dict),
    "array": lambda v: isinstance(v, list),
}


class ToolError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message}


METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
PERMISSION_DENIED = -32001
DOMAIN_ERROR = -32000


def tool_descriptors() -> list[dict]:
    out = []
    for name, spec in _SCHEMAS.items():
        out.append({
            "name": name,
            "description": spec["description"],
            "permission": "execution" if name in EXECUTION_TOOLS else "read_only",
            "inputSchema": {
                "type": "object",
                "properties": {k: {"type": t} for k, t in spec["args"].items()},
                "required": list(spec["required"]),
            },
            "resultSchema": {
                "type": "object",
                "properties": {k: {"type": t} for k, t in spec["result"].items()},
            },
        })
    return out


def _check_args(name: str, args: dict) -> None:
    spec = _SCHEMAS[name]
    for required in spec["required"]:
        if required not in args:
            raise ToolError(INVALID_PARAMS, f"missing required argument '{required}'")
    for key, value in args.items():
        if key not in spec["args"]:
            raise ToolError(INVALID_PARAMS, f"unknown argument '{key}'")
        if not _TYPE_CHECKS[spec["args"][key]](value):
            raise ToolError(
                INVALID_PARAMS,
                f"argument '{key}' must be of type {spec['args'][key]}",
            )


def handle_tool(service: WorkflowService, name: str, args: Optional[dict],
                execution_allowed: bool = False) -> dict:
    """Dispatch one tool call; raises ToolError with a wire-level code."""
    if name not in _SCHEMAS:
        raise ToolError(METHOD_NOT_FOUND, f"no tool named '{name}'")
    if name in EXECUTION_TOOLS and not execution_allowed:
        raise ToolError(
            PERMISSION_DENIED,
            f"tool '{name}' requires the execution capability",
        )
    args = dict(args or {})
    _check_args(name, args)
    try:
        handler = getattr(service, name)
        return handler(**args)
    except (PluginError, OrchestratorError, ResultsError,
            FileNotFoundError) as exc:
        raise ToolError(DOMAIN_ERROR, str(exc)) from exc
    except (PlanError, SweepError, ValueError) as exc:
        raise ToolError(DOMAIN_ERROR, str(exc)) from exc


def canonical_json(payload) -> bytes:
    """The single serialization both transports emit, byte for byte."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
