"""Run launching, concurrent sweep dispatch, log streaming, and provenance.

Every run lives in a timestamped, self-contained directory: the input is
copied in before the process spawns (a mid-run crash still leaves a
parseable directory), stdout streams to ``run.log`` and an in-memory
buffer, and ``metadata.json``/``record.json`` carry enough to reproduce
the run from the directory alone.

The registry is a shared, internally synchronized map; each child process
is supervised by one monitor thread; all public operations may be called
concurrently.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import secrets
import shlex
import socket
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .plan import SimulationPlan, expand_sweep, plan_fields_flat

ENV_RUNS_DIR = "AUTOMOOSE_RUNS_DIR"
ENV_BACKEND = "AUTOMOOSE_BACKEND"
ENV_MOOSE_EXEC = "AUTOMOOSE_MOOSE_EXEC"

REFERENCE_SOLVER = "automoose-solver"
DEFAULT_MAX_RETRIES = 3

VALID_TRANSITIONS = {
    "queued": {"running", "failed"},
    "running": {"done", "failed", "stopped"},
    "failed": {"reviewing"},
    "reviewing": {"running", "failed"},
    "done": set(),
    "stopped": set(),
}


class OrchestratorError(RuntimeError):
    pass


class UnknownRunError(OrchestratorError):
    pass


class RunStateError(OrchestratorError):
    pass


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%f+00:00")


@dataclass
class RunRecord:
    run_id: str
    status: str = "queued"
    input_file: str = "sim.i"
    backend: str = "reference"
    n_mpi: int = 1
    command: str = ""
    moose_exec: str = REFERENCE_SOLVER
    exit_code: Optional[int] = None
    wall_time_s: float = 0.0
    hostname: str = field(default_factory=socket.gethostname)
    rand_seed: Optional[int] = None
    timestamp_utc: str = field(default_factory=_utcnow)
    finished_utc: Optional[str] = None
    retry_count: int = 0
    sweep_id: Optional[str] = None
    label: str = ""
    correction_history: list = field(default_factory=list)
    pending_confirmation: Optional[dict] = None

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "status": self.status,
            "input_file": self.input_file,
            "backend": self.backend,
            "n_mpi": self.n_mpi,
            "command": self.command,
            "moose_exec": self.moose_exec,
            "exit_code": self.exit_code,
            "wall_time_s": self.wall_time_s,
            "hostname": self.hostname,
            "rand_seed": self.rand_seed,
            "timestamp_utc": self.timestamp_utc,
            "finished_utc": self.finished_utc,
            "retry_count": self.retry_count,
            "sweep_id": self.sweep_id,
            "label": self.label,
            "correction_history": self.correction_history,
            "pending_confirmation": self.pending_confirmation,
        }


class LogBuffer:
    """Append-only, byte-faithful log store, resumable by offset."""

    def __init__(self):
        self._chunks: list[bytes] = []
        self._size = 0
        self._lock = threading.Condition()

    def append(self, data: bytes) -> None:
        with self._lock:
            self._chunks.append(data)
            self._size += len(data)
            self._lock.notify_all()

    @property
    def size(self) -> int:
        with self._lock:
            return self._size

    def read_from(self, offset: int) -> tuple[bytes, int]:
        with self._lock:
            whole = b"".join(self._chunks)
        return whole[offset:], len(whole)

    def wait_beyond(self, offset: int, timeout: float) -> bool:
        with self._lock:
            if self._size > offset:
                return True
            self._lock.wait(timeout)
            return self._size > offset

    def tail_lines(self, n: int) -> list[str]:
        if n <= 0:
            return []
        whole = b"".join(self._chunks).decode("utf-8", errors="replace")
        lines = whole.splitlines()
        return lines[-n:]


@dataclass
class _Run:
    record: RunRecord
    directory: Path
    log: LogBuffer = field(default_factory=LogBuffer)
    process: Optional[subprocess.Popen] = None
    monitor: Optional[threading.Thread] = None
    started: float = 0.0
    done_event: threading.Event = field(default_factory=threading.Event)
    plan: Optional[SimulationPlan] = None


class Orchestrator:
    """Owns the run registry and the spawned solver processes."""

    def __init__(self, runs_dir: Optional[str] = None,
                 backend: Optional[str] = None,
                 moose_exec: Optional[str] = None,
                 max_workers: Optional[int] = None,
                 on_failure: Optional[Callable[[str], None]] = None):
        self.runs_dir = Path(runs_dir or os.environ.get(ENV_RUNS_DIR, "./runs"))
        # deployment-level override; when unset, each plan's backend decides
        self.backend_override = backend or os.environ.get(ENV_BACKEND)
        self.moose_exec = moose_exec or os.environ.get(ENV_MOOSE_EXEC, "")
        self.max_workers = max_workers
        self.on_failure = on_failure
        self._runs: dict[str, _Run] = {}
        self._lock = threading.Lock()
        self._load_existing_runs()

    # -- registry ---------------------------------------------------------

    def _load_existing_runs(self) -> None:
        """Rehydrate terminal runs from disk so a fresh process (CLI
        invocation, restarted server) can query and analyze them."""
        if not self.runs_dir.is_dir():
            return
        for record_path in sorted(self.runs_dir.glob("*/record.json")):
            try:
                doc = json.loads(record_path.read_text())
                record = RunRecord(**doc)
            except (ValueError, TypeError):
                continue
            run = _Run(record=record, directory=record_path.parent)
            log_path = record_path.parent / "run.log"
            if log_path.exists():
                run.log.append(log_path.read_bytes())
            if record.status in ("done", "failed", "stopped"):
                run.done_event.set()
            self._runs[record.run_id] = run

    def _get(self, run_id: str) -> _Run:
        with self._lock:
            if run_id not in self._runs:
                raise UnknownRunError(f"unknown run_id {run_id!r}")
            return self._runs[run_id]

    def list_runs(self) -> list[dict]:
        with self._lock:
            runs = list(self._runs.values())
        return [r.record.to_json() for r in sorted(runs, key=lambda r: r.record.run_id)]

    def get_record(self, run_id: str) -> RunRecord:
        return self._get(run_id).record

    def run_directory(self, run_id: str) -> Path:
        return self._get(run_id).directory

    def _transition(self, run: _Run, status: str) -> None:
        with self._lock:
            current = run.record.status
            if status not in VALID_TRANSITIONS.get(current, set()):
                raise RunStateError(f"illegal transition {current} -> {status}")
            run.record.status = status
        self._write_record(run)

    # -- directory & provenance -------------------------------------------

    def _new_run_id(self, label: str) -> str:
        stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S")
        return f"{stamp}-{label}-{secrets.token_hex(2)}"

    def _make_directory(self, run_id: str) -> Path:
        path = self.runs_dir / run_id
        suffix = 0
        while path.exists():
            suffix += 1
            path = self.runs_dir / f"{run_id}.{suffix}"
        path.mkdir(parents=True)
        return path

    def _write_record(self, run: _Run) -> None:
        with (run.directory / "record.json").open("w") as f:
            json.dump(run.record.to_json(), f, indent=2)
            f.write("\n")

    def _write_metadata(self, run: _Run) -> None:
        meta = {
            "run_id": run.record.run_id,
            "moose_exec": run.record.moose_exec,
            "hostname": run.record.hostname,
            "n_mpi": run.record.n_mpi,
            "backend": run.record.backend,
            "rand_seed": run.record.rand_seed,
            "wall_time_s": run.record.wall_time_s,
            "timestamp_utc": run.record.timestamp_utc,
            "plan": plan_fields_flat(run.plan) if run.plan is not None else None,
        }
        with (run.directory / "metadata.json").open("w") as f:
            json.dump(meta, f, indent=2)
            f.write("\n")

    # -- command construction ----------------------------------------------

    def _executable(self, backend: str) -> str:
        if backend == "reference":
            return REFERENCE_SOLVER
        if backend == "external":
            if not self.moose_exec:
                raise OrchestratorError(
                    f"external backend requires {ENV_MOOSE_EXEC} or moose_exec="
                )
            return self.moose_exec
        raise OrchestratorError(f"unknown backend {backend!r}")

    @staticmethod
    def build_command(executable: str, input_file: str, n_mpi: int) -> str:
        base = f"{executable} -i {input_file}"
        if n_mpi > 1:
            return f"mpiexec -n {n_mpi} {base}"
        return base

    # -- launching ----------------------------------------------------------

    def launch_input(self, input_text: str, label: str = "run", n_mpi: int = 1,
                     backend: Optional[str] = None, run_id: Optional[str] = None,
                     plan: Optional[SimulationPlan] = None,
                     sweep_id: Optional[str] = None,
                     rand_seed: Optional[int] = None) -> str:
        """Write the input, create the run directory, spawn, return run_id."""
        backend = backend or self.backend_override or "reference"
        executable = self._executable(backend)
        run_id = run_id or self._new_run_id(label)
        directory = self._make_directory(run_id)
        run_id = directory.name  # collision suffixing keeps run_ids unique
        (directory / "sim.i").write_text(input_text)
        record = RunRecord(
            run_id=run_id,
            input_file="sim.i",
            backend=backend,
            n_mpi=n_mpi,
            moose_exec=executable,
            command=self.build_command(executable, "sim.i", n_mpi),
            rand_seed=rand_seed,
            sweep_id=sweep_id,
            label=label,
        )
        run = _Run(record=record, directory=directory, plan=plan)
        with self._lock:
            self._runs[run_id] = run
        self._write_record(run)
        self._write_metadata(run)
        self._spawn(run)
        return run_id

    def launch_run(self, plan: SimulationPlan, backend: Optional[str] = None,
                   label: Optional[str] = None, sweep_id: Optional[str] = None) -> str:
        """Generate the input for a plan and launch it."""
        from .plan import params_for_plugin
        from .plugins import registry_load

        plan.validate()
        plugin = registry_load().get("grain_growth")
        input_text = plugin.generate_input(params_for_plugin(plan))
        return self.launch_input(
            input_text,
            label=label or plan.outputs.file_base,
            n_mpi=plan.run.n_mpi,
            backend=backend or self.backend_override or plan.run.backend,
            plan=plan,
            sweep_id=sweep_id,
            rand_seed=plan.physics.rand_seed,
        )

    def _spawn(self, run: _Run) -> None:
        argv = shlex.split(run.record.command)
        try:
            process = subprocess.Popen(
                argv,
                cwd=run.directory,
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
                start_new_session=True,  # stop_run signals the whole group
            )
        except OSError as exc:
            run.log.append(f"failed to launch: {exc}\n".encode())
            (run.directory / "run.log").write_bytes(b"".join(run.log._chunks))
            with self._lock:
                run.record.status = "failed"
                run.record.exit_code = 127
                run.record.finished_utc = _utcnow()
            self._write_record(run)
            run.done_event.set()
            return
        run.process = process
        run.started = time.monotonic()
        self._transition(run, "running")
        monitor = threading.Thread(target=self._monitor, args=(run,), daemon=True)
        run.monitor = monitor
        monitor.start()

    def _monitor(self, run: _Run) -> None:
        assert run.process is not None
        log_path = run.directory / "run.log"
        with log_path.open("ab") as log_file:
            for chunk in iter(lambda: run.process.stdout.readline(), b""):
                run.log.append(chunk)
                log_file.write(chunk)
                log_file.flush()
        exit_code = run.process.wait()
        wall = time.monotonic() - run.started
        with self._lock:
            run.record.exit_code = exit_code
            run.record.wall_time_s = round(wall, 6)
            run.record.finished_utc = _utcnow()
            stopping = run.record.status == "stopped"
        if not stopping:
            self._transition(run, "done" if exit_code == 0 else "failed")
        else:
            self._write_record(run)
        self._write_metadata(run)
        if exit_code != 0 and not stopping and self.on_failure is not None:
            try:
                self.on_failure(run.record.run_id)
            except Exception as exc:  # review hook must never kill the monitor
                run.log.append(f"review hook error: {exc}\n".encode())
        run.done_event.set()

    # -- sweep ----------------------------------------------------------------

    def dispatch_sweep(self, plans: list[SimulationPlan],
                       backend: Optional[str] = None) -> list[str]:
        """Launch all cases concurrently under a bounded worker pool.

        A single launch failure does not abort the siblings; the failed
        case surfaces through its own run record.
        """
        if not plans:
            raise OrchestratorError("dispatch_sweep needs at least one plan")
        sweep_id = f"sweep-{_dt.datetime.now(_dt.timezone.utc).strftime('%Y%m%dT%H%M%S')}-{secrets.token_hex(2)}"
        bound = self.max_workers or len(plans)
        gate = threading.Semaphore(bound)
        run_ids: list[Optional[str]] = [None] * len(plans)
        errors: list[Optional[str]] = [None] * len(plans)
        threads = []

        def worker(index: int, plan: SimulationPlan) -> None:
            with gate:
                try:
                    run_ids[index] = self.launch_run(plan, backend=backend, sweep_id=sweep_id)
                except Exception as exc:
                    errors[index] = str(exc)

        for i, plan in enumerate(plans):
            t = threading.Thread(target=worker, args=(i, plan), daemon=True)
            threads.append(t)
            t.start()
        for t in threads:
            t.join()
        launched = [rid for rid in run_ids if rid is not None]
        if not launched:
            raise OrchestratorError(f"every sweep case failed to launch: {errors}")
        return launched

    def expand_and_dispatch(self, plan: SimulationPlan,
                            backend: Optional[str] = None) -> list[str]:
        return self.dispatch_sweep(expand_sweep(plan), backend=backend)

    # -- monitoring, logs, stopping -------------------------------------------

    def wait(self, run_id: str, timeout: Optional[float] = None) -> RunRecord:
        run = self._get(run_id)
        run.done_event.wait(timeout)
        return run.record

    def wait_all(self, run_ids: list[str], timeout: Optional[float] = None) -> None:
        deadline = None if timeout is None else time.monotonic() + timeout
        for run_id in run_ids:
            remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
            self._get(run_id).done_event.wait(remaining)

    def route_exit(self, run_id: str) -> str:
        """Map a terminated run onto its disposition token."""
        record = self._get(run_id).record
        if record.exit_code is None:
            raise RunStateError(f"run {run_id} has not terminated")
        if record.status == "stopped":
            return "stopped"
        return "analyze" if record.exit_code == 0 else "review"

    def stream_log(self, run_id: str, from_offset: int = 0,
                   wait: float = 0.0) -> tuple[bytes, int]:
        run = self._get(run_id)
        if wait > 0:
            run.log.wait_beyond(from_offset, wait)
        return run.log.read_from(from_offset)

    def get_log_tail(self, run_id: str, n: int = 50) -> list[str]:
        return self._get(run_id).log.tail_lines(n)

    def stop_run(self, run_id: str) -> dict:
        run = self._get(run_id)
        with self._lock:
            if run.record.status != "running" or run.process is None:
                raise RunStateError(f"run {run_id} is not running")
            run.record.status = "stopped"
        self._write_record(run)
        self._signal_group(run.process, 15)
        try:
            run.process.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._signal_group(run.process, 9)
        run.done_event.wait(timeout=5)
        return {"run_id": run_id, "status": "stopped"}

    @staticmethod
    def _signal_group(process: subprocess.Popen, sig: int) -> None:
        try:
            os.killpg(os.getpgid(process.pid), sig)
        except (ProcessLookupError, PermissionError):
            try:
                process.send_signal(sig)
            except ProcessLookupError:
                pass

    # -- retry support ----------------------------------------------------------

    def mark_reviewing(self, run_id: str) -> None:
        self._transition(self._get(run_id), "reviewing")

    def relaunch(self, run_id: str, new_input_text: str) -> None:
        """Re-execute a reviewed run in place with a corrected input."""
        run = self._get(run_id)
        with self._lock:
            if run.record.status != "reviewing":
                raise RunStateError(f"run {run_id} is not in review")
            run.record.retry_count += 1
            run.record.exit_code = None
            run.record.finished_utc = None
        (run.directory / "sim.i").write_text(new_input_text)
        run.log.append(f"--- retry {run.record.retry_count} ---\n".encode())
        run.done_event.clear()
        self._write_record(run)
        self._spawn(run)

    def mark_failed(self, run_id: str) -> None:
        run = self._get(run_id)
        with self._lock:
            run.record.status = "failed"
        self._write_record(run)

    def record_correction(self, run_id: str, entry: dict) -> None:
        run = self._get(run_id)
        with self._lock:
            run.record.correction_history.append(entry)
        self._write_record(run)

    def set_pending_confirmation(self, run_id: str, diagnosis: Optional[dict]) -> None:
        run = self._get(run_id)
        with self._lock:
            run.record.pending_confirmation = diagnosis
        self._write_record(run)


# ---------------------------------------------------------------------------
# Reproduction from a run directory alone
# ---------------------------------------------------------------------------

def reproduce_command(run_dir: str) -> str:
    """Reconstruct the exact launch command from directory contents only.

    Paths inside the command are relative, so a relocated copy of the
    directory reproduces the identical run.
    """
    record_path = Path(run_dir) / "record.json"
    record = json.loads(record_path.read_text())
    return Orchestrator.build_command(
        record["moose_exec"], record["input_file"], int(record["n_mpi"])
    )


def reproduce_run(run_dir: str) -> int:
    """Re-execute a run in place; returns the exit code."""
    command = reproduce_command(run_dir)
    proc = subprocess.run(shlex.split(command), cwd=run_dir,
                          stdout=subprocess.PIPE, stderr=subprocess.STDOUT)
    return proc.returncode
