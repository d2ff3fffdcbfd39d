"""Input-file driver and command line for the embedded solver.

Reads the generated input dialect, applies the same validation the
external binary would abort on (duplicate keys, duplicate object
registrations, unused parameters), converts the material parameters to
reduced eV/nm/ns units, integrates, and writes ``<file_base>.csv`` plus
optional plain-text field snapshots.  Exit code 0 on success, 1 with a
verbatim diagnostic on any injected or genuine fault.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .. import hit
from ..constants import JOULE_TO_EV, LENGTH_SCALE, TIME_SCALE
from ..plan import PhysicsParams, bridge_coefficients
from .core import (
    FieldState,
    SolverConfig,
    SolverFault,
    count_grains,
    effective_dt,
    init_state,
    step,
)

CENSUS_THRESHOLD = 0.5
CENSUS_MIN_CELLS = 4


class InputFault(RuntimeError):
    """Validation failure; the message is the verbatim diagnostic."""


def _mpi_rank() -> int:
    for var in ("OMPI_COMM_WORLD_RANK", "PMI_RANK", "PMIX_RANK", "SLURM_PROCID"):
        value = os.environ.get(var)
        if value is not None:
            try:
                return int(value)
            except ValueError:
                pass
    return 0


def _number(text: str) -> float:
    return float(text.strip().strip("'"))


def _boolean(text: Optional[str], default: bool = False) -> bool:
    if text is None:
        return default
    return text.strip().lower() in ("true", "1", "yes", "on")


def reduced_material(T: float, wGB: float, GBmob0: float, Q: float, GBenergy: float):
    """GBEvolution-equivalent unit reduction, then the parameter bridge.

    Input units pass through the file verbatim (energy per m^2, mobility
    in m^4/(J s)); the material converts them to the eV/nm/ns system the
    grid integrates in, exactly as the external material model does.
    """
    mobility_factor = TIME_SCALE / (JOULE_TO_EV * LENGTH_SCALE**4)
    reduced = PhysicsParams(
        gb_energy=GBenergy * JOULE_TO_EV * LENGTH_SCALE**2,
        interface_width=wGB,
        mobility_prefactor=GBmob0 * mobility_factor,
        activation_energy=Q,
        temperature=T,
    )
    return bridge_coefficients(reduced)


def config_from_document(doc: hit.HitDocument) -> SolverConfig:
    mesh = doc.block("Mesh")
    if mesh is None:
        raise InputFault("missing [Mesh] block")
    if mesh.get("elem_type") == "HEX8" or mesh.get("dim") == "3":
        raise InputFault("the embedded reference solver supports 2D QUAD4 meshes only")
    refine = int(_number(mesh.get("uniform_refine") or "0"))
    nx = int(_number(mesh.get("nx") or "0")) * 2**refine
    ny = int(_number(mesh.get("ny") or "0")) * 2**refine
    extent_x = _number(mesh.get("xmax") or "0")
    extent_y = _number(mesh.get("ymax") or "0")
    if nx <= 0 or ny <= 0 or extent_x <= 0 or extent_y <= 0:
        raise InputFault("[Mesh] must define positive nx, ny, xmax, ymax")

    materials = doc.block("Materials")
    material = None
    if materials is not None:
        for child in materials.children:
            if child.get("type") == "GBEvolution":
                material = child
                break
    if material is None:
        raise InputFault("the embedded reference solver requires a GBEvolution material")
    bridge = reduced_material(
        T=_number(material.get("T")),
        wGB=_number(material.get("wGB")),
        GBmob0=_number(material.get("GBmob0")),
        Q=_number(material.get("Q")),
        GBenergy=_number(material.get("GBenergy")),
    )

    executioner = doc.block("Executioner")
    if executioner is None:
        raise InputFault("missing [Executioner] block")
    end_time = _number(executioner.get("end_time") or "0")
    stepper = executioner.child("TimeStepper")
    dt = _number(stepper.get("dt")) if stepper is not None and stepper.get("dt") else 25.0

    global_params = doc.block("GlobalParams")
    op_num = int(_number(global_params.get("op_num"))) if global_params is not None else 0

    user_objects = doc.block("UserObjects")
    grain_num, rand_seed = op_num, 42
    if user_objects is not None:
        voronoi = user_objects.child("voronoi")
        if voronoi is not None:
            grain_num = int(_number(voronoi.get("grain_num")))
            rand_seed = int(_number(voronoi.get("rand_seed") or "42"))
    if op_num <= 0:
        op_num = grain_num

    harness = doc.block("TestHarness")
    fail_mode = "none"
    strict_dt = False
    output_interval = 0
    coloring = "bt" if grain_num == op_num else "jp"
    if harness is not None:
        fail_mode = (harness.get("fail_mode") or "none").strip()
        strict_dt = _boolean(harness.get("strict_dt"))
        if harness.get("output_interval"):
            output_interval = int(_number(harness.get("output_interval")))
        if harness.get("coloring"):
            coloring = harness.get("coloring").strip()

    return SolverConfig(
        kinetic_coefficient=bridge.kinetic_coefficient,
        free_energy_weight=bridge.free_energy_weight,
        gradient_coefficient=bridge.gradient_coefficient,
        dt=dt,
        end_time=end_time,
        output_interval=output_interval,
        strict_dt=strict_dt,
        fail_mode=fail_mode,
        rand_seed=rand_seed,
        grain_num=grain_num,
        op_num=op_num,
        coloring=coloring,
        nx=nx,
        ny=ny,
        extent_x=extent_x,
        extent_y=extent_y,
    )


def _apply_validation(doc: hit.HitDocument) -> None:
    from ..plugins.grain_growth import SCHEMA

    for diag in doc.diagnostics:
        if diag.code == "DUPLICATE_KEY":
            raise InputFault(diag.message)
    for issue in hit.validate(doc, SCHEMA):
        if issue.code == "DUPLICATE_OBJECT":
            name = issue.path.rsplit("/", 1)[-1]
            raise InputFault(
                f"A GrainTracker '{name}' already exists.\n"
                "You may not add a Postprocessor by the same name."
            )
        if issue.code == "UNUSED_PARAMETER":
            raise InputFault(f"unused parameter '{issue.path}'")
        if issue.code in ("MISSING_REQUIRED", "BAD_CROSS_REFERENCE"):
            raise InputFault(f"{issue.code}: {issue.message}")


def _apply_fail_mode(cfg: SolverConfig) -> None:
    if cfg.fail_mode == "none":
        return
    if cfg.fail_mode == "duplicate_object":
        raise InputFault(
            "A GrainTracker 'grain_tracker' already exists.\n"
            "You may not add a Postprocessor by the same name."
        )
    if cfg.fail_mode == "duplicate_key":
        raise InputFault("Duplicate key 'solve_type' in [Executioner]")
    if cfg.fail_mode == "unused_parameter":
        raise InputFault("unused parameter 'Outputs/exodus/interval'")
    if cfg.fail_mode == "force_nan":
        raise SolverFault("Floating point fault: NaN injected by test harness")
    raise InputFault(f"unknown fail_mode '{cfg.fail_mode}'")


def _print_flush(*args) -> None:
    print(*args, flush=True)  # keep the log live through pipes


def run_from_input(input_path: str, out_dir: Optional[str] = None,
                   log=_print_flush) -> int:
    """Execute one input file; returns the process exit code."""
    out = Path(out_dir) if out_dir else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    rank = _mpi_rank()
    if rank > 0:
        log(f"rank {rank}: reference solver is serial; rank 0 performs the run")
        return 0
    try:
        text = Path(input_path).read_text()
    except OSError as exc:
        log(f"cannot read input file: {exc}")
        return 1
    try:
        doc = hit.parse(text)
    except hit.HitParseError as exc:
        log(f"input parse error: {exc}")
        return 1

    try:
        _apply_validation(doc)
        cfg = config_from_document(doc)
        _apply_fail_mode(cfg)
    except (InputFault, ValueError) as exc:
        log(str(exc))
        return 1
    except SolverFault as exc:
        log(str(exc))
        return 1

    outputs = doc.block("Outputs")
    file_base = (outputs.get("file_base") if outputs else None) or "out"
    write_csv = _boolean(outputs.get("csv"), True) if outputs else True
    write_snapshots = _boolean(outputs.get("exodus"), False) if outputs else False

    try:
        dt = effective_dt(cfg)
    except SolverFault as exc:
        log(str(exc))
        return 1
    n_steps = int(np.floor(cfg.end_time / dt + 1e-9))
    interval = cfg.output_interval or max(1, n_steps // 400)

    log(f"reference solver: grid {cfg.nx}x{cfg.ny}, h={cfg.spacing:g}, "
        f"op_num={cfg.op_num}, grains={cfg.grain_num}, seed={cfg.rand_seed}")
    log(f"coefficients: L={cfg.kinetic_coefficient:.6g} mu={cfg.free_energy_weight:.6g} "
        f"kappa={cfg.gradient_coefficient:.6g}")
    log(f"dt={dt!r} ns ({'strict' if cfg.strict_dt else 'stability-capped'}), "
        f"end_time={cfg.end_time!r}, steps={n_steps}, output every {interval}")

    num_elements = cfg.nx * cfg.ny
    num_dofs = num_elements * cfg.op_num
    csv_path = out / f"{file_base}.csv"
    csv_file = csv_path.open("w") if write_csv else None

    def emit_row(state: FieldState) -> int:
        census = count_grains(state, CENSUS_THRESHOLD, CENSUS_MIN_CELLS)
        if csv_file:
            csv_file.write(
                f"{state.time!r},{census.grain_count},{dt!r},{num_dofs},{num_elements}\n"
            )
            csv_file.flush()
        if write_snapshots:
            snapshot = np.argmax(state.eta, axis=0)
            np.savetxt(out / f"snapshot_{state.step_index}.txt", snapshot, fmt="%d")
        log(f"Time Step {state.step_index}, time = {state.time!r}, dt = {dt!r} "
            f"| grain_count = {census.grain_count}")
        return census.grain_count

    try:
        state = init_state(cfg)
    except ValueError as exc:
        if csv_file:
            csv_file.close()
        log(str(exc))
        return 1

    if csv_file:
        csv_file.write("time,grain_count,dt,num_dofs,num_elements\n")
    try:
        emit_row(state)
        for _ in range(n_steps):
            state = step(state, cfg)
            if state.step_index % interval == 0 or state.step_index == n_steps:
                count = emit_row(state)
    except SolverFault as exc:
        log(str(exc))
        return 1
    finally:
        if csv_file:
            csv_file.close()
    final = count_grains(state, CENSUS_THRESHOLD, CENSUS_MIN_CELLS)
    log(f"Run complete: steps={state.step_index} final_time={state.time!r} "
        f"final_grain_count={final.grain_count}")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="automoose-solver",
        description="Embedded 2D Allen-Cahn grain growth solver",
    )
    parser.add_argument("-i", "--input", required=True, help="input file (.i)")
    parser.add_argument("--out-dir", default=None, help="output directory (default: cwd)")
    args = parser.parse_args(argv)
    code = run_from_input(args.input, args.out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
