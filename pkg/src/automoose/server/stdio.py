"""Newline-delimited JSON-RPC transport over stdin/stdout.

Implements the initialize / tools-list / tools-call subset: one JSON
envelope per line, an initialize handshake advertising all ten tool
descriptors, and result payloads serialized with the same canonical
encoder the HTTP transport uses.
"""

from __future__ import annotations

import json
import sys
from typing import Optional, TextIO

from .service import WorkflowService
from .tools import ToolError, canonical_json, handle_tool, tool_descriptors

PROTOCOL_VERSION = "2024-11-05"
SERVER_INFO = {"name": "automoose-tool-server", "version": "0.1.0"}


def _envelope(msg_id, result=None, error=None) -> dict:
    out = {"jsonrpc": "2.0", "id": msg_id}
    if error is not None:
        out["error"] = error
    else:
        out["result"] = result
    return out


def handle_message(service: WorkflowService, message: dict,
                   execution_allowed: bool) -> Optional[dict]:
    msg_id = message.get("id")
    method = message.get("method")
    params = message.get("params") or {}
    if method == "initialize":
        return _envelope(msg_id, {
            "protocolVersion": PROTOCOL_VERSION,
            "serverInfo": SERVER_INFO,
            "capabilities": {"tools": {}},
            "tools": tool_descriptors(),
        })
    if method == "tools/list":
        return _envelope(msg_id, {"tools": tool_descriptors()})
    if method == "tools/call":
        name = params.get("name")
        args = params.get("arguments") or {}
        try:
            payload = handle_tool(service, name, args, execution_allowed)
        except ToolError as exc:
            return _envelope(msg_id, error=exc.to_json())
        return _envelope(msg_id, {
            "payload": json.loads(canonical_json(payload).decode()),
        })
    if method == "shutdown":
        return None
    return _envelope(msg_id, error={
        "code": -32601, "message": f"unknown method '{method}'",
    })


def serve_stdio(service: Optional[WorkflowService] = None,
                execution_allowed: bool = False,
                stdin: Optional[TextIO] = None,
                stdout: Optional[TextIO] = None) -> None:
    """Process one JSON message per line until EOF or shutdown."""
    service = service or WorkflowService()
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            reply = _envelope(None, error={"code": -32700, "message": f"parse error: {exc}"})
            stdout.write(json.dumps(reply) + "\n")
            stdout.flush()
            continue
        reply = handle_message(service, message, execution_allowed)
        if reply is None:
            break
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
