"""Tool server: the ten lifecycle operations over stdio and HTTP/SSE."""

from .service import WorkflowService
from .tools import TOOL_NAMES, EXECUTION_TOOLS, handle_tool, tool_descriptors

__all__ = [
    "WorkflowService",
    "TOOL_NAMES",
    "EXECUTION_TOOLS",
    "handle_tool",
    "tool_descriptors",
]
