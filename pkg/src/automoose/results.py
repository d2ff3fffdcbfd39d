"""Post-run analysis: CSV ingestion, per-run metrics, sweep aggregation.

Assembles the structured results payload (rate constants, fit quality,
Arrhenius recovery, narrative text, anomaly flag) from run directories,
and exposes it in the same shape over the tool server and the CLI.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

from . import kinetics
from .orchestrator import Orchestrator
from .plugins import registry_load


class ResultsError(RuntimeError):
    pass


def read_csv_columns(path: Path) -> dict[str, list[float]]:
    with path.open() as f:
        reader = csv.reader(f)
        header = next(reader)
        columns: dict[str, list[float]] = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                columns[name].append(float(cell))
    return columns


def _find_csv(run_dir: Path) -> Optional[Path]:
    candidates = sorted(run_dir.glob("*.csv"))
    return candidates[0] if candidates else None


def run_metrics(run_dir: Path) -> dict:
    """Plugin-parsed observables for one completed run directory."""
    csv_path = _find_csv(run_dir)
    if csv_path is None:
        raise ResultsError(f"no CSV output in {run_dir}")
    plugin = registry_load().get("grain_growth")
    columns = read_csv_columns(csv_path)
    return plugin.parse_results(columns)


def _temperature_of(record: dict, run_dir: Path) -> Optional[float]:
    meta_path = run_dir / "metadata.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        plan = meta.get("plan") or {}
        if "T" in plan:
            return float(plan["T"])
    return None


def single_run_payload(orchestrator: Orchestrator, run_id: str) -> dict:
    record = orchestrator.get_record(run_id)
    if record.status != "done":
        return {"run_id": run_id, "status": record.status}
    run_dir = orchestrator.run_directory(run_id)
    metrics = run_metrics(run_dir)
    fit = kinetics.CoarseningFit(
        rate_constant=metrics["k"],
        initial_count=metrics["N0"],
        r_squared=metrics["R2"],
        n_points=metrics["n_points"],
        suppressed=metrics["suppressed"],
    )
    temperature = _temperature_of(record.to_json(), run_dir)
    duration = metrics["time"][-1] - metrics["time"][0] if metrics["time"] else None
    text = kinetics.narrate(
        fit,
        temperature=temperature,
        initial_count=metrics["N0"],
        final_count=metrics["N_final"],
        duration=duration,
    )
    label = record.label or run_id
    payload = kinetics.sweep_results_payload(
        {label: {"k": metrics["k"] if not metrics["suppressed"] else None,
                 "R2": metrics["R2"]}},
        arrhenius=None,
        interpretation=text,
    )
    payload.update({
        "run_id": run_id,
        "status": record.status,
        "series": {"time": metrics["time"], "grain_count": metrics["grain_count"]},
        "N0": metrics["N0"],
        "N_final": metrics["N_final"],
        "suppressed": metrics["suppressed"],
    })
    if "peak_num_dofs" in metrics:
        payload["peak_num_dofs"] = metrics["peak_num_dofs"]
    return payload


def sweep_payload(orchestrator: Orchestrator, sweep_id: str) -> dict:
    members = [r for r in orchestrator.list_runs() if r["sweep_id"] == sweep_id]
    if not members:
        raise ResultsError(f"unknown sweep_id {sweep_id!r}")
    per_case: dict[str, dict] = {}
    series: dict[str, dict] = {}
    pairs: list[tuple[float, float]] = []
    input_q: Optional[float] = None
    statuses = {m["run_id"]: m["status"] for m in members}
    if any(status != "done" for status in statuses.values()):
        return {"sweep_id": sweep_id, "status": "incomplete", "runs": statuses}
    sample_fit = None
    for member in members:
        run_dir = orchestrator.run_directory(member["run_id"])
        metrics = run_metrics(run_dir)
        temperature = _temperature_of(member, run_dir)
        label = member["label"] or member["run_id"]
        per_case[label] = {
            "k": metrics["k"] if not metrics["suppressed"] else None,
            "R2": metrics["R2"],
            "T": temperature,
            "N0": metrics["N0"],
            "N_final": metrics["N_final"],
            "suppressed": metrics["suppressed"],
            "run_id": member["run_id"],
        }
        series[label] = {"time": metrics["time"], "grain_count": metrics["grain_count"]}
        if temperature is not None and not metrics["suppressed"] and metrics["k"] > 0:
            pairs.append((temperature, metrics["k"]))
        meta = json.loads((run_dir / "metadata.json").read_text())
        plan = meta.get("plan") or {}
        if "Q" in plan:
            input_q = float(plan["Q"])
        if sample_fit is None or not metrics["suppressed"]:
            sample_fit = kinetics.CoarseningFit(
                rate_constant=metrics["k"],
                initial_count=metrics["N0"],
                r_squared=metrics["R2"],
                n_points=metrics["n_points"],
                suppressed=metrics["suppressed"],
            )
    arrhenius = kinetics.fit_arrhenius(sorted(pairs)) if len(pairs) >= 2 else None
    text = kinetics.narrate(
        sample_fit,
        arrhenius=arrhenius,
        input_activation_energy=input_q,
    )
    payload = kinetics.sweep_results_payload(per_case, arrhenius, text)
    payload.update({
        "sweep_id": sweep_id,
        "status": "done",
        "cases": per_case,
        "series": series,
        "input_Q": input_q,
    })
    if arrhenius is not None:
        payload["arrhenius"] = {
            "slope_K": arrhenius.slope,
            "Q_fit_eV": arrhenius.activation_energy,
            "k0": arrhenius.prefactor,
            "R2": arrhenius.r_squared,
        }
    return payload


def results_payload(orchestrator: Orchestrator, run_or_sweep_id: str) -> dict:
    """Dispatch on run vs sweep identifiers; unfinished runs report status."""
    if run_or_sweep_id.startswith("sweep-"):
        return sweep_payload(orchestrator, run_or_sweep_id)
    return single_run_payload(orchestrator, run_or_sweep_id)
