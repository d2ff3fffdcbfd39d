"""Workflow service: one object owning the registry, orchestrator, and the
automatic review loop, shared by every transport."""

from __future__ import annotations

import shutil
import threading
from pathlib import Path
from typing import Optional

from .. import hit, reviewer
from ..orchestrator import DEFAULT_MAX_RETRIES, Orchestrator
from ..plan import SimulationPlan, plan_from_json
from ..plugins import PluginStubError, registry_load
from ..results import results_payload


class WorkflowService:
    def __init__(self, runs_dir: Optional[str] = None,
                 backend: Optional[str] = None,
                 moose_exec: Optional[str] = None,
                 max_retries: int = DEFAULT_MAX_RETRIES,
                 auto_review: bool = True):
        self.registry = registry_load()
        self.max_retries = max_retries
        self.orchestrator = Orchestrator(
            runs_dir=runs_dir,
            backend=backend,
            moose_exec=moose_exec,
            on_failure=self._on_failure if auto_review else None,
        )
        self._review_active: set[str] = set()
        self._review_lock = threading.Lock()
        self._plans: dict[str, SimulationPlan] = {}

    # -- autonomous correction loop ---------------------------------------

    def _on_failure(self, run_id: str) -> None:
        with self._review_lock:
            if run_id in self._review_active:
                return
            self._review_active.add(run_id)
        thread = threading.Thread(target=self._review, args=(run_id,), daemon=True)
        thread.start()

    def _review(self, run_id: str) -> None:
        try:
            reviewer.retry_loop(
                self.orchestrator, run_id,
                max_retries=self.max_retries,
                plan=self._plans.get(run_id),
            )
        finally:
            with self._review_lock:
                self._review_active.discard(run_id)

    def confirm_correction(self, run_id: str, accept: bool) -> dict:
        """Resolve a pending low-confidence diagnosis."""
        record = self.orchestrator.get_record(run_id)
        if record.pending_confirmation is None:
            raise reviewer.ReviewerError(f"run {run_id} has no pending confirmation")
        diagnosis_doc = record.pending_confirmation
        self.orchestrator.set_pending_confirmation(run_id, None)
        if not accept:
            self.orchestrator.mark_failed(run_id)
            return {"run_id": run_id, "resolution": "rejected", "status": "failed"}
        run_dir = self.orchestrator.run_directory(run_id)
        doc = hit.parse((run_dir / "sim.i").read_text())
        if diagnosis_doc["diagnosis"] != "UNKNOWN":
            diagnosis = reviewer.Diagnosis(
                failure_class=diagnosis_doc["diagnosis"],
                confidence=diagnosis_doc["confidence"],
                explanation=diagnosis_doc["explanation"],
                corrected_params=diagnosis_doc.get("corrected_params") or {},
                detail=diagnosis_doc.get("detail"),
            )
            _, doc = reviewer.propose_correction(diagnosis, self._plans.get(run_id), doc)
        self.orchestrator.relaunch(run_id, hit.render(doc))
        return {"run_id": run_id, "resolution": "accepted", "status": "running"}

    # -- auxiliary surfaces ---------------------------------------------------

    def parse_prompt(self, prompt: str) -> dict:
        """Intent parsing for the console: plan JSON or structured rejection."""
        from ..architect import parse_intent
        from ..plan import plan_to_json

        result = parse_intent(prompt, self.registry)
        if result.rejection is not None:
            return {"rejection": result.rejection}
        return {"plan": plan_to_json(result.plan)}

    # -- tool backends ------------------------------------------------------

    def health_check(self) -> dict:
        solver_path = shutil.which("automoose-solver")
        backend = self.orchestrator.backend_override or "reference"
        ok = backend == "reference" and solver_path is not None
        reason = None
        if backend == "external":
            ok = bool(self.orchestrator.moose_exec) and Path(self.orchestrator.moose_exec).exists()
            if not ok:
                reason = "external backend executable not configured"
        elif solver_path is None:
            reason = "reference solver not on PATH"
        return {
            "ok": ok,
            "backend": backend,
            "solver_path": self.orchestrator.moose_exec if backend == "external" else solver_path,
            "runs_dir": str(self.orchestrator.runs_dir),
            **({"reason": reason} if reason else {}),
        }

    def list_plugins(self) -> dict:
        return {"plugins": self.registry.catalog()}

    def generate_input(self, params: dict, plugin: str = "grain_growth") -> dict:
        entry = self.registry.get(plugin)
        try:
            text = entry.generate_input(dict(params))
        except PluginStubError as exc:
            raise PluginStubError(
                f"plugin '{plugin}' is a stub: {exc}"
            ) from exc
        return {"input_file": text}

    def run_simulation(self, input_file: str, n_mpi: int = 1,
                       run_id: Optional[str] = None) -> dict:
        if "\n" in input_file or input_file.lstrip().startswith("["):
            text = input_file
        else:
            path = Path(input_file)
            if not path.exists():
                raise FileNotFoundError(f"input file {input_file!r} not found")
            text = path.read_text()
        rid = self.orchestrator.launch_input(text, n_mpi=n_mpi, run_id=run_id)
        return {"run_id": rid}

    def run_sweep(self, sweep_param: str, values: list, base_params: dict) -> dict:
        base = dict(base_params)
        doc = {
            "formulation": base.pop("formulation", "GBEvolution"),
            "dim": base.pop("dim", 2),
            "periodic": base.pop("periodic", True),
            "adaptivity": base.pop("adaptivity", True),
            "sweep": {"param": sweep_param, "values": list(values)},
            "params": base,
        }
        plan = plan_from_json(doc)
        run_ids = self.orchestrator.expand_and_dispatch(plan)
        for rid in run_ids:
            self._plans[rid] = None  # populated by launch_run records
        sweep_id = self.orchestrator.get_record(run_ids[0]).sweep_id
        return {"run_ids": run_ids, "sweep_id": sweep_id}

    def get_run_status(self, run_id: str) -> dict:
        return self.orchestrator.get_record(run_id).to_json()

    def get_results(self, run_id: str) -> dict:
        return results_payload(self.orchestrator, run_id)

    def list_runs(self) -> dict:
        return {"runs": self.orchestrator.list_runs()}

    def get_log_tail(self, run_id: str, n: int = 50) -> dict:
        return {"run_id": run_id, "lines": self.orchestrator.get_log_tail(run_id, n)}

    def stop_run(self, run_id: str) -> dict:
        return self.orchestrator.stop_run(run_id)
