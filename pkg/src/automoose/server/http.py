"""HTTP transport: POST /tools/<name>, SSE log streaming, health probe.

Execution-class tools require the execution capability, granted either
server-wide at startup or per request via the X-AutoMOOSE-Capability
header.  Log streaming is offset-based and backpressure-aware: a
subscriber that falls too far behind is skipped ahead with an explicit
gap marker event instead of stalling the producer.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import StreamingResponse

from ..orchestrator import UnknownRunError
from .service import WorkflowService
from .tools import ToolError, canonical_json, handle_tool

DEFAULT_TOOL_PORT = 8001
DEFAULT_BACKEND_PORT = 8000
ENV_TOOL_PORT = "AUTOMOOSE_TOOL_PORT"
ENV_HTTP_PORT = "AUTOMOOSE_HTTP_PORT"
CAPABILITY_HEADER = "x-automoose-capability"

# SSE backpressure: skip ahead when a subscriber lags by more than this
MAX_BACKLOG_BYTES = 256 * 1024
KEEP_AFTER_GAP = 16 * 1024


def _sse_event(event: str, data: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(data)}\n\n"


def create_app(service: Optional[WorkflowService] = None,
               execution_default: bool = False,
               static_dir: Optional[str] = None) -> FastAPI:
    service = service or WorkflowService()
    app = FastAPI(title="automoose tool server", version="0.1.0")
    app.state.service = service

    def _execution_allowed(request: Request) -> bool:
        header = request.headers.get(CAPABILITY_HEADER, "")
        return execution_default or header.strip().lower() == "execution"

    @app.get("/health")
    def health() -> Response:
        return Response(content=canonical_json(service.health_check()),
                        media_type="application/json")

    @app.post("/tools/{name}")
    async def call_tool(name: str, request: Request) -> Response:
        body = await request.body()
        try:
            args = json.loads(body) if body else {}
        except json.JSONDecodeError as exc:
            return Response(
                content=canonical_json({"error": {"code": -32700, "message": str(exc)}}),
                media_type="application/json", status_code=400,
            )
        try:
            payload = handle_tool(service, name, args, _execution_allowed(request))
        except ToolError as exc:
            status = {  # wire-level code -> HTTP status
                -32601: 404,
                -32602: 422,
                -32001: 403,
            }.get(exc.code, 400)
            return Response(content=canonical_json({"error": exc.to_json()}),
                            media_type="application/json", status_code=status)
        return Response(content=canonical_json(payload), media_type="application/json")

    @app.get("/runs/{run_id}/logs/stream")
    def stream_logs(run_id: str, offset: int = 0) -> Response:
        try:
            service.orchestrator.get_record(run_id)
        except UnknownRunError as exc:
            return Response(content=canonical_json({"error": {"code": -32000, "message": str(exc)}}),
                            media_type="application/json", status_code=404)

        def events():
            position = offset
            yield _sse_event("hello", {"run_id": run_id, "offset": position})
            idle_cycles = 0
            while True:
                chunk, size = service.orchestrator.stream_log(run_id, position, wait=0.25)
                if size - position > MAX_BACKLOG_BYTES:
                    dropped_to = size - KEEP_AFTER_GAP
                    yield _sse_event("gap", {"from": position, "to": dropped_to})
                    position = dropped_to
                    chunk, size = service.orchestrator.stream_log(run_id, position)
                if chunk:
                    yield _sse_event("log", {
                        "offset": size,
                        "chunk": chunk.decode("utf-8", errors="replace"),
                    })
                    position = size
                    idle_cycles = 0
                else:
                    idle_cycles += 1
                record = service.orchestrator.get_record(run_id)
                if record.status in ("done", "failed", "stopped") and position >= service.orchestrator.stream_log(run_id, 0)[1]:
                    yield _sse_event("end", {"status": record.status, "offset": position})
                    return
                if idle_cycles > 2400:  # ~10 minutes of silence
                    yield _sse_event("end", {"status": record.status, "offset": position})
                    return

        return StreamingResponse(events(), media_type="text/event-stream")

    @app.post("/plan")
    async def plan(request: Request) -> Response:
        body = await request.body()
        try:
            args = json.loads(body) if body else {}
            prompt = args["prompt"]
        except (json.JSONDecodeError, KeyError) as exc:
            return Response(content=canonical_json({"error": {"code": -32602, "message": f"body must carry 'prompt': {exc}"}}),
                            media_type="application/json", status_code=422)
        try:
            result = service.parse_prompt(prompt)
        except Exception as exc:
            return Response(content=canonical_json({"error": {"code": -32000, "message": str(exc)}}),
                            media_type="application/json", status_code=400)
        return Response(content=canonical_json(result), media_type="application/json")

    @app.post("/runs/{run_id}/confirm")
    async def confirm(run_id: str, request: Request) -> Response:
        body = await request.body()
        try:
            args = json.loads(body) if body else {}
        except json.JSONDecodeError as exc:
            return Response(content=canonical_json({"error": {"code": -32700, "message": str(exc)}}),
                            media_type="application/json", status_code=400)
        accept = bool(args.get("accept", False))
        try:
            result = service.confirm_correction(run_id, accept)
        except Exception as exc:
            return Response(content=canonical_json({"error": {"code": -32000, "message": str(exc)}}),
                            media_type="application/json", status_code=400)
        return Response(content=canonical_json(result), media_type="application/json")

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app


def serve_http(port: Optional[int] = None,
               service: Optional[WorkflowService] = None,
               execution_default: bool = False,
               static_dir: Optional[str] = None,
               host: str = "127.0.0.1") -> None:
    import os

    import uvicorn

    resolved = port or int(
        os.environ.get(ENV_TOOL_PORT)
        or os.environ.get(ENV_HTTP_PORT)
        or DEFAULT_TOOL_PORT
    )
    app = create_app(service, execution_default=execution_default, static_dir=static_dir)
    uvicorn.run(app, host=host, port=resolved, log_level="warning")
