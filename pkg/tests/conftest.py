import socket
import threading
import time
from pathlib import Path

import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance-criterion test")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                lines.append((nodeid.split("::", 1)[1], label))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, label in sorted(lines):
            terminalreporter.write_line(f"{label}  {name}")

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "automoose" / "data"

# The four-temperature benchmark request, as a user would type it.
BENCHMARK_PROMPT = (
    "Run a grain growth simulation at T = {300, 450, 600, 750} K with "
    "sigma = 0.708 J/m^2, w_GB = 14 nm, M0 = 2.5e-6 m^4/(J s), Q = 0.23 eV. "
    "Use 15 Voronoi grains on a 1000x1000 nm^2 domain with a 12x12 mesh "
    "(uniform refinement level 3) and periodic boundary conditions."
)

# Published per-temperature rate constants (1/ns) and the human-written
# reference column they are compared against.
RATES_PRIMARY = [(450.0, 2.863e-6), (600.0, 23.51e-6), (750.0, 58.67e-6)]
RATES_HUMAN = [(450.0, 2.850e-6), (600.0, 18.40e-6), (750.0, 43.46e-6)]


@pytest.fixture()
def golden_generated() -> str:
    return (DATA_DIR / "generated_T450.i").read_text()


@pytest.fixture()
def golden_reference() -> str:
    return (DATA_DIR / "reference_human.i").read_text()


@pytest.fixture()
def small_params() -> dict:
    """A coarse, fast configuration for end-to-end plumbing tests."""
    return {
        "grain_num": 6, "op_num": 6, "nx": 24, "ny": 24, "uniform_refine": 0,
        "end_time": 150, "exodus": False, "file_base": "case",
    }


@pytest.fixture()
def service(tmp_path):
    from automoose.server.service import WorkflowService

    return WorkflowService(runs_dir=str(tmp_path / "runs"), auto_review=False)


@pytest.fixture()
def reviewing_service(tmp_path):
    from automoose.server.service import WorkflowService

    return WorkflowService(runs_dir=str(tmp_path / "runs"), auto_review=True)


def wait_for_status(orchestrator, run_id, statuses=("done", "failed", "stopped"),
                    timeout=120.0, settled=False):
    """Poll until the run reaches one of the given statuses."""
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        record = orchestrator.get_record(run_id)
        if record.status in statuses and (not settled or record.exit_code is not None):
            return record
        time.sleep(0.05)
    raise TimeoutError(f"run {run_id} stuck in {orchestrator.get_record(run_id).status}")


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture()
def http_server(service):
    """A live uvicorn server bound to an ephemeral port, torn down after."""
    import uvicorn

    from automoose.server.http import create_app

    port = free_port()
    app = create_app(service, execution_default=False)
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    import httpx

    base = f"http://127.0.0.1:{port}"
    for _ in range(200):
        try:
            httpx.get(f"{base}/health", timeout=1.0)
            break
        except Exception:
            time.sleep(0.05)
    else:
        raise RuntimeError("http server did not come up")
    yield base, service
    server.should_exit = True
    thread.join(timeout=5)


def make_sleeper(tmp_path: Path) -> str:
    """A fake external solver that sleeps for the T value in its input."""
    script = tmp_path / "sleeper.sh"
    script.write_text(
        "#!/bin/sh\n"
        "T=$(grep -oE 'T +=  *[0-9.]+' \"$2\" | head -1 | grep -oE '[0-9.]+$')\n"
        "sleep \"$T\"\n"
        "echo \"slept $T\"\n"
    )
    script.chmod(0o755)
    return str(script)
