"""Failure-log classification, targeted corrections, and the retry loop.

Classification is an ordered first-match rule list over the log tail;
every known class carries a fixed confidence and maps to one corrective
edit.  Corrections never touch physics fields (boundary energy, interface
width, mobility, activation energy, temperature), only numerical or
structural ones, and no correction is applied below the confidence gate.
"""

from __future__ import annotations

import copy
import datetime as _dt
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from . import hit
from .orchestrator import DEFAULT_MAX_RETRIES, Orchestrator
from .plan import SimulationPlan

CONFIDENCE_GATE = 0.7

FAILURE_CLASSES = (
    "TIMESTEP_TOO_LARGE",
    "MESH_RESOLUTION",
    "CONVERGENCE_FAILED",
    "NaN_DETECTED",
    "MPI_DEADLOCK",
    "DUPLICATE_OBJECT",
    "DUPLICATE_KEY",
    "UNUSED_PARAMETER",
    "UNKNOWN",
)


class ReviewerError(RuntimeError):
    pass


@dataclass(frozen=True)
class Diagnosis:
    failure_class: str
    confidence: float
    explanation: str
    corrected_params: dict = field(default_factory=dict)
    detail: Optional[str] = None   # e.g. the offending parameter path

    def __post_init__(self):
        if self.failure_class == "UNKNOWN":
            assert self.confidence == 0.0 and not self.corrected_params
        if self.failure_class not in FAILURE_CLASSES:
            raise ReviewerError(f"unknown failure class {self.failure_class!r}")

    def to_json(self) -> dict:
        return {
            "diagnosis": self.failure_class,
            "confidence": self.confidence,
            "explanation": self.explanation,
            "corrected_params": self.corrected_params,
            "detail": self.detail,
        }


_UNUSED_RE = re.compile(r"unused parameter '([^']+)'")
_DUPKEY_RE = re.compile(r"Duplicate key '([^']+)'")
_TIMESTEP_MARKERS = ("dt", "timestep", "time step", "cutback")


def classify_failure(log_tail: list[str]) -> Diagnosis:
    """First matching rule wins; always returns a class (UNKNOWN if none)."""
    if not log_tail:
        raise ReviewerError("empty log tail")
    text = "\n".join(log_tail)
    lower = text.lower()

    if "already exists" in text and "may not add" in text:
        return Diagnosis(
            "DUPLICATE_OBJECT", 0.95,
            "an object name is registered twice; the duplicate registration must be removed",
        )
    m = _DUPKEY_RE.search(text)
    if m:
        return Diagnosis(
            "DUPLICATE_KEY", 0.95,
            f"parameter '{m.group(1)}' appears more than once in its block",
            detail=m.group(1),
        )
    m = _UNUSED_RE.search(text)
    if m:
        return Diagnosis(
            "UNUSED_PARAMETER", 0.95,
            f"parameter '{m.group(1)}' is not recognised and must be removed",
            corrected_params={},
            detail=m.group(1),
        )
    if "NaN" in text:
        return Diagnosis(
            "NaN_DETECTED", 0.95,
            "non-finite values in the solution fields; verify positive physical "
            "parameters, then halve the timestep",
            corrected_params={"dt": 0.5},
        )
    if "diverged" in lower:
        if any(marker in lower for marker in _TIMESTEP_MARKERS):
            return Diagnosis(
                "TIMESTEP_TOO_LARGE", 0.9,
                "solve diverged with timestep markers present; cut the timestep back",
                corrected_params={"dt": 0.5, "dt_max": 0.5, "nl_max_its": 20},
            )
        return Diagnosis(
            "CONVERGENCE_FAILED", 0.9,
            "solve diverged; relax the nonlinear tolerance",
            corrected_params={"nl_rel_tol": 1e-6},
        )
    if "deadlock" in lower or ("mpi" in lower and ("hang" in lower or "abort" in lower)):
        return Diagnosis(
            "MPI_DEADLOCK", 0.9,
            "parallel communication stalled; fall back to a single rank",
            corrected_params={"n_mpi": 1},
        )
    if "under-resolve" in lower or "mesh resolution" in lower or "interface-resolution" in lower:
        return Diagnosis(
            "MESH_RESOLUTION", 0.9,
            "the mesh under-resolves the diffuse interface; refine by 1.5x",
            corrected_params={"nx": 1.5, "ny": 1.5},
        )
    return Diagnosis("UNKNOWN", 0.0, "no known failure signature matched")


# physics fields that corrections must never alter
_PHYSICS_KEYS = ("GBenergy", "wGB", "GBmob0", "Q", "T")


def _scale_param(block: hit.Block, key: str, factor: float) -> Optional[float]:
    value = block.get(key)
    if value is None:
        return None
    new = float(value) * factor
    block.set(key, repr(new))
    return new


def propose_correction(
    diagnosis: Diagnosis,
    plan: Optional[SimulationPlan],
    doc: hit.HitDocument,
) -> tuple[Optional[SimulationPlan], hit.HitDocument]:
    """Apply the class's corrective edit to the plan and document copy.

    Raises on UNKNOWN: the caller must escalate to the user instead of
    guessing.  Returns the corrected (plan, document) pair; the inputs
    are never mutated.
    """
    if diagnosis.failure_class == "UNKNOWN":
        raise ReviewerError("cannot correct an UNKNOWN failure; escalate to the user")
    doc = copy.deepcopy(doc)
    cls = diagnosis.failure_class
    solver = plan.solver if plan is not None else None

    if cls in ("TIMESTEP_TOO_LARGE", "NaN_DETECTED"):
        if cls == "NaN_DETECTED" and plan is not None:
            plan.physics.params.validate()  # physics must already be positive
        executioner = doc.block("Executioner")
        stepper = executioner.child("TimeStepper") if executioner else None
        if stepper is not None:
            _scale_param(stepper, "dt", 0.5)
            _scale_param(stepper, "dt_max", 0.5)
        if cls == "TIMESTEP_TOO_LARGE" and executioner is not None:
            executioner.set("nl_max_its", "20")
        if solver is not None:
            new_solver = replace(
                solver,
                dt_initial=solver.dt_initial * 0.5,
                dt_max=solver.dt_max * 0.5 if solver.dt_max is not None else None,
                nl_max_its=20 if cls == "TIMESTEP_TOO_LARGE" else solver.nl_max_its,
            )
            plan = replace(plan, solver=new_solver)
    elif cls == "MESH_RESOLUTION":
        mesh = doc.block("Mesh")
        if mesh is not None:
            for key in ("nx", "ny"):
                value = mesh.get(key)
                if value is not None:
                    mesh.set(key, str(-(-int(float(value)) * 3 // 2)))  # ceil(1.5x)
        if plan is not None:
            new_mesh = replace(
                plan.mesh,
                nx=-(-plan.mesh.nx * 3 // 2),
                ny=-(-plan.mesh.ny * 3 // 2),
            )
            plan = replace(plan, mesh=new_mesh)
    elif cls == "CONVERGENCE_FAILED":
        executioner = doc.block("Executioner")
        if executioner is not None:
            executioner.set("nl_rel_tol", "1e-06")
        if plan is not None:
            plan = replace(plan, solver=replace(plan.solver, nl_rel_tol=1e-6))
    elif cls == "MPI_DEADLOCK":
        if plan is not None:
            plan = replace(plan, run=replace(plan.run, n_mpi=1))
    elif cls == "DUPLICATE_OBJECT":
        # remove the duplicate registration from the non-canonical registry
        user_objects = doc.block("UserObjects")
        postprocessors = doc.block("Postprocessors")
        if user_objects is not None and postprocessors is not None:
            canonical = {c.name for c in user_objects.children}
            postprocessors.items = [
                item
                for item in postprocessors.items
                if not (isinstance(item, hit.Block) and item.name in canonical)
            ]
    elif cls == "DUPLICATE_KEY":
        # the parsed document already kept first occurrences only, so a
        # re-render drops later duplicates; nothing further to edit
        pass
    elif cls == "UNUSED_PARAMETER":
        if diagnosis.detail:
            leaf = diagnosis.detail.rsplit("/", 1)[-1]
            for block in doc.blocks:
                if block.remove(leaf):
                    break
    return plan, doc


def assert_physics_untouched(before: hit.HitDocument, after: hit.HitDocument) -> None:
    """Guard used by tests and the retry loop: corrections keep physics."""
    for doc_block in before.blocks:
        if doc_block.name != "Materials":
            continue
        after_block = after.block("Materials")
        for child in doc_block.children:
            after_child = after_block.child(child.name) if after_block else None
            for key in _PHYSICS_KEYS:
                if child.get(key) is not None:
                    assert after_child is not None and after_child.get(key) == child.get(key), (
                        f"correction altered physics field {key}"
                    )


def retry_loop(
    orchestrator: Orchestrator,
    run_id: str,
    max_retries: int = DEFAULT_MAX_RETRIES,
    plan: Optional[SimulationPlan] = None,
    confidence_gate: float = CONFIDENCE_GATE,
) -> str:
    """Classify -> correct -> regenerate -> relaunch until exit 0 or exhausted.

    Low-confidence or UNKNOWN diagnoses surface as a pending-confirmation
    state with zero modifications.  Every cycle appends to the run's
    correction history; each cycle strictly changes the input document.
    Returns the final disposition: done | failed | pending_confirmation.
    """
    for cycle in range(1, max_retries + 1):
        record = orchestrator.get_record(run_id)
        if record.status == "done":
            return "done"
        if record.status != "failed":
            raise ReviewerError(f"retry_loop expects a failed run, got {record.status}")
        orchestrator.mark_reviewing(run_id)
        tail = orchestrator.get_log_tail(run_id, 50)
        diagnosis = classify_failure(tail)
        if diagnosis.failure_class == "UNKNOWN" or diagnosis.confidence < confidence_gate:
            orchestrator.set_pending_confirmation(run_id, diagnosis.to_json())
            return "pending_confirmation"
        run_dir = orchestrator.run_directory(run_id)
        before = hit.parse((run_dir / "sim.i").read_text())
        plan, corrected = propose_correction(diagnosis, plan, before)
        assert_physics_untouched(before, corrected)
        new_text = hit.render(corrected)
        if new_text == hit.render(before) and diagnosis.failure_class != "DUPLICATE_KEY":
            # a correction that changes nothing would loop forever
            orchestrator.set_pending_confirmation(run_id, diagnosis.to_json())
            return "pending_confirmation"
        orchestrator.record_correction(run_id, {
            "cycle": cycle,
            "class": diagnosis.failure_class,
            "confidence": diagnosis.confidence,
            "corrected_params": diagnosis.corrected_params,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        })
        orchestrator.relaunch(run_id, new_text)
        record = orchestrator.wait(run_id)
        if record.exit_code == 0:
            return "done"
    orchestrator.mark_failed(run_id)
    return "failed"
