"""Figure and table rendering for completed runs and sweeps.

Writes the kinetics summary as delimited text alongside matplotlib
figures: grain-count trajectories with their 1/N fit overlays, and the
Arrhenius plot annotated with the recovered activation energy.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .constants import BOLTZMANN_EV


def _fit_overlay(times: list[float], k: float, n0: float) -> list[float]:
    return [1.0 / (1.0 / n0 + k * t) for t in times]


def write_report(payload: dict, out_dir: str) -> list[str]:
    """Render summary.csv, results.json, kinetics.png, and (for sweeps
    with an Arrhenius fit) arrhenius.png; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    results_path = out / "results.json"
    results_path.write_text(json.dumps(payload, indent=2) + "\n")
    written.append(str(results_path))

    cases = payload.get("cases")
    if cases is None:
        label = payload.get("run_id", "run")
        cases = {label: {
            "k": next(iter(payload.get("k_values", {}).values()), None),
            "R2": next(iter(payload.get("R2_values", {}).values()), None),
            "T": None,
            "N0": payload.get("N0"),
            "N_final": payload.get("N_final"),
            "suppressed": payload.get("suppressed", False),
        }}
    series = payload.get("series", {})
    if series and "time" in series:  # single-run shape
        series = {next(iter(cases)): series}

    summary_path = out / "summary.csv"
    with summary_path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["case", "T_K", "k_per_ns", "R2", "N0", "N_final", "suppressed"])
        for label, case in sorted(cases.items()):
            writer.writerow([
                label,
                case.get("T"),
                case.get("k"),
                case.get("R2"),
                case.get("N0"),
                case.get("N_final"),
                case.get("suppressed"),
            ])
    written.append(str(summary_path))

    if series:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for label, data in sorted(series.items()):
            times = data["time"]
            counts = data["grain_count"]
            line, = ax.plot(times, counts, "o", ms=3, label=label)
            case = cases.get(label, {})
            if case.get("k") and case.get("N0"):
                ax.plot(times, _fit_overlay(times, case["k"], case["N0"]),
                        "--", color=line.get_color(), lw=1)
        ax.set_xlabel("time (ns)")
        ax.set_ylabel("grain count N(t)")
        ax.legend(fontsize=8)
        ax.set_title("Grain coarsening with 1/N fit overlays")
        fig.tight_layout()
        kinetics_path = out / "kinetics.png"
        fig.savefig(kinetics_path, dpi=120)
        plt.close(fig)
        written.append(str(kinetics_path))

    arr = payload.get("arrhenius")
    if arr:
        pairs = [
            (case["T"], case["k"])
            for case in cases.values()
            if case.get("T") and case.get("k")
        ]
        if len(pairs) >= 2:
            fig, ax = plt.subplots(figsize=(5.5, 4.5))
            xs = [1.0 / t for t, _ in sorted(pairs)]
            ys = [math.log(k) for _, k in sorted(pairs)]
            ax.plot(xs, ys, "s", ms=6)
            q = arr["Q_fit_eV"]
            k0 = arr["k0"]
            fit_y = [math.log(k0) - q / BOLTZMANN_EV * x for x in xs]
            ax.plot(xs, fit_y, "-", lw=1)
            ax.set_xlabel("1/T (1/K)")
            ax.set_ylabel("ln k")
            ax.set_title(f"Arrhenius fit: Q = {q:.3f} eV, R$^2$ = {arr['R2']:.3f}")
            fig.tight_layout()
            arrhenius_path = out / "arrhenius.png"
            fig.savefig(arrhenius_path, dpi=120)
            plt.close(fig)
            written.append(str(arrhenius_path))
    return written
