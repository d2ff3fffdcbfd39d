"""Grain growth plugin: input generation and results parsing.

``generate_input`` composes six internal sub-generators over a growing
input document, executed in dependency order with explicit data handoffs
(mesh first, then global variable declarations, kernels, materials and
user objects, postprocessors, executioner).  The assembled block layout
matches the reference benchmark file byte-for-byte under the canonical
renderer, so the output doubles as the golden fixture for fidelity tests.
"""

from __future__ import annotations

from automoose import hit, kinetics
from automoose.hit import Block, HitDocument, Param
from automoose.plugins import PluginContractError


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_whole(value) -> str:
    # integral floats print without the trailing .0 (mesh extents, times, T)
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return _fmt(value)


PARAM_SPECS = {
    "formulation": {"default": "GBEvolution", "description": "GBEvolution or LinearizedInterface"},
    "dim": {"default": 2, "description": "spatial dimension (2 -> QUAD4, 3 -> HEX8)"},
    "nx": {"default": 12, "description": "mesh elements along x"},
    "ny": {"default": 12, "description": "mesh elements along y"},
    "nz": {"default": 12, "description": "mesh elements along z (3D only)"},
    "xmax": {"default": 1000, "description": "domain extent along x (nm)"},
    "ymax": {"default": 1000, "description": "domain extent along y (nm)"},
    "zmax": {"default": 1000, "description": "domain extent along z (nm, 3D only)"},
    "uniform_refine": {"default": 3, "description": "uniform refinement level"},
    "grain_num": {"default": 15, "description": "number of initial grains"},
    "op_num": {"default": None, "description": "order parameter count (defaults to grain_num)"},
    "ic_type": {"default": "Voronoi", "description": "Voronoi or Random initial condition"},
    "coloring": {"default": "bt", "description": "grain coloring algorithm: jp or bt"},
    "rand_seed": {"default": 42, "description": "random seed for the initial condition"},
    "T": {"default": 450, "description": "temperature (K)"},
    "wGB": {"default": 14.0, "description": "grain boundary interface width (nm)"},
    "GBmob0": {"default": 2.5e-6, "description": "mobility prefactor"},
    "Q": {"default": 0.23, "description": "activation energy (eV)"},
    "GBenergy": {"default": 0.708, "description": "grain boundary energy"},
    "bound_value": {"default": None, "description": "linearized-interface bound (required for that formulation)"},
    "periodic": {"default": True, "description": "periodic boundary conditions"},
    "end_time": {"default": 4000, "description": "simulation end time (ns)"},
    "dt": {"default": 25, "description": "initial timestep (ns)"},
    "dt_max": {"default": None, "description": "adaptive stepper ceiling (optional)"},
    "l_tol": {"default": 1e-4, "description": "linear solve tolerance"},
    "l_max_its": {"default": 30, "description": "linear iteration cap"},
    "nl_max_its": {"default": 20, "description": "nonlinear iteration cap"},
    "nl_rel_tol": {"default": 1e-8, "description": "nonlinear relative tolerance"},
    "cutback_factor": {"default": 0.5, "description": "adaptive stepper cutback"},
    "growth_factor": {"default": 1.1, "description": "adaptive stepper growth"},
    "optimal_iterations": {"default": 8, "description": "adaptive stepper iteration target"},
    "adaptivity": {"default": True, "description": "emit the mesh adaptivity sub-block"},
    "csv": {"default": True, "description": "write CSV postprocessor output"},
    "exodus": {"default": True, "description": "write field trajectory output"},
    "checkpoint": {"default": False, "description": "emit checkpoint output (HPC preset)"},
    "terminator_threshold": {"default": None, "description": "halt when grain count falls below this"},
    "file_base": {"default": "grain_growth", "description": "output file base name"},
    "n_mpi": {"default": 1, "description": "MPI rank count for the runner"},
}

PRESETS = {
    # lightweight 2D smoke test
    "2d_test": {"grain_num": 10, "op_num": 10, "nx": 12, "ny": 12, "uniform_refine": 0,
                "end_time": 500, "exodus": False},
    # the four-temperature publication benchmark geometry
    "2d_benchmark": {"grain_num": 15, "op_num": 15, "nx": 12, "ny": 12, "uniform_refine": 3},
    # embedded-solver kinetics benchmark (96x96 effective grid)
    "2d_embedded": {"grain_num": 12, "op_num": 12, "nx": 12, "ny": 12, "uniform_refine": 3,
                    "exodus": False},
    # finer mesh for resolution studies
    "2d_fine": {"grain_num": 15, "op_num": 15, "nx": 50, "ny": 50, "uniform_refine": 2},
    # many-grain 2D statistics run
    "2d_large": {"grain_num": 100, "op_num": 20, "coloring": "jp", "nx": 100, "ny": 100,
                 "uniform_refine": 1, "xmax": 4000, "ymax": 4000},
    # small 3D validation case
    "3d_test": {"dim": 3, "grain_num": 20, "op_num": 20, "nx": 16, "ny": 16, "nz": 16,
                "xmax": 400, "ymax": 400, "zmax": 400, "uniform_refine": 0},
    # production 3D HPC configuration
    "3d_hpc": {"dim": 3, "grain_num": 6000, "op_num": 28, "coloring": "jp",
               "nx": 180, "ny": 180, "nz": 180, "xmax": 6000, "ymax": 6000, "zmax": 6000,
               "uniform_refine": 0, "n_mpi": 32, "checkpoint": True,
               "terminator_threshold": 1000},
}

PLUGIN = {
    "label": "grain_growth",
    "executable_key": "phase_field",
    "params": PARAM_SPECS,
    "presets": PRESETS,
    "sweepable": ("T", "grain_num", "Q", "GBenergy", "GBmob0", "op_num"),
    "result_keys": ("time", "grain_count", "dt", "num_dofs", "num_elements"),
    "system_prompt": (
        "Grain growth formulation selector. Extract temperature, grain boundary "
        "energy, interface width, mobility prefactor, activation energy, grain "
        "count, domain, mesh, refinement level, and boundary conditions from the "
        "request; any braced value list on a sweepable parameter becomes the "
        "sweep. Unspecified fields take the defaults in the params table."
    ),
    "keywords": ("grain growth", "gbevolution", "linearized interface"),
    "status": "active",
    "formulations": ("GBEvolution", "LinearizedInterface"),
}

# Only the 2D presets are solvable by the embedded reference backend.
EMBEDDED_SOLVABLE_PRESETS = ("2d_test", "2d_benchmark", "2d_embedded", "2d_fine", "2d_large")

FROM_PROMPT = "from prompt"


def fill_defaults(params: dict) -> dict:
    unknown = set(params) - set(PARAM_SPECS)
    if unknown:
        raise PluginContractError(f"unknown parameters: {', '.join(sorted(unknown))}")
    full = {name: spec["default"] for name, spec in PARAM_SPECS.items()}
    full.update(params)
    if full["op_num"] is None:
        full["op_num"] = full["grain_num"]
    return full


def _check(params: dict) -> None:
    if params["op_num"] > params["grain_num"]:
        raise PluginContractError(
            f"op_num ({params['op_num']}) must not exceed grain_num ({params['grain_num']})"
        )
    if params["formulation"] not in ("GBEvolution", "LinearizedInterface"):
        raise PluginContractError(f"unknown formulation {params['formulation']!r}")
    if params["formulation"] == "LinearizedInterface" and params["bound_value"] is None:
        raise PluginContractError("LinearizedInterface requires bound_value")
    if params["dim"] not in (2, 3):
        raise PluginContractError(f"dim must be 2 or 3, got {params['dim']!r}")


def _gen_mesh(p: dict) -> Block:
    b = Block("Mesh")
    b.items.append(Param("type", "GeneratedMesh"))
    b.items.append(Param("dim", _fmt(p["dim"])))
    b.items.append(Param("nx", _fmt(p["nx"]), FROM_PROMPT))
    b.items.append(Param("ny", _fmt(p["ny"]), FROM_PROMPT))
    if p["dim"] == 3:
        b.items.append(Param("nz", _fmt(p["nz"]), FROM_PROMPT))
    b.items.append(Param("xmax", _fmt_whole(p["xmax"]), FROM_PROMPT))
    b.items.append(Param("ymax", _fmt_whole(p["ymax"]), FROM_PROMPT))
    if p["dim"] == 3:
        b.items.append(Param("zmax", _fmt_whole(p["zmax"]), FROM_PROMPT))
    b.items.append(Param("elem_type", "HEX8" if p["dim"] == 3 else "QUAD4"))
    b.items.append(Param("uniform_refine", _fmt(p["uniform_refine"]), FROM_PROMPT))
    b.items.append(Param("parallel_type", "distributed" if p["dim"] == 3 else "replicated"))
    return b


def _gen_variables(p: dict) -> tuple[Block, Block, Block]:
    gp = Block("GlobalParams")
    gp.items.append(Param("op_num", _fmt(p["op_num"]), FROM_PROMPT))
    gp.items.append(Param("var_name_base", "gr"))

    ics = Block("ICs")
    outer = Block("PolycrystalICs")
    if p["ic_type"] == "Voronoi":
        inner = Block("PolycrystalColoringIC")
        inner.items.append(Param("polycrystal_ic_uo", "voronoi"))
    else:
        inner = Block("PolycrystalRandomIC")
        inner.items.append(Param("random_type", "discrete"))
    outer.items.append(inner)
    ics.items.append(outer)

    aux = Block("AuxVariables")
    bnds = Block("bnds")
    bnds.items.append(Param("order", "FIRST"))
    bnds.items.append(Param("family", "LAGRANGE"))
    aux.items.append(bnds)
    for name in ("unique_grains", "var_indices"):
        v = Block(name)
        v.items.append(Param("order", "CONSTANT"))
        v.items.append(Param("family", "MONOMIAL"))
        aux.items.append(v)
    return gp, ics, aux


def _gen_kernels(p: dict) -> tuple[Block, Block]:
    modules = Block("Modules")
    phase_field = Block("PhaseField")
    if p["formulation"] == "GBEvolution":
        phase_field.items.append(Block("GrainGrowth"))
    else:
        linearized = Block("GrainGrowthLinearizedInterface")
        linearized.items.append(Param("bound_value", _fmt(p["bound_value"])))
        phase_field.items.append(linearized)
    modules.items.append(phase_field)

    aux = Block("AuxKernels")
    bnds = Block("bnds_aux")
    bnds.items.append(Param("type", "BndsCalcAux"))
    bnds.items.append(Param("variable", "bnds"))
    bnds.items.append(Param("execute_on", "'initial timestep_end'"))
    aux.items.append(bnds)
    for name, display in (("unique_grains", "UNIQUE_REGION"), ("var_indices", "VARIABLE_COLORING")):
        k = Block(name)
        k.items.append(Param("type", "FeatureFloodCountAux"))
        k.items.append(Param("variable", name))
        k.items.append(Param("field_display", display))
        k.items.append(Param("execute_on", "'initial timestep_end'"))
        k.items.append(Param("flood_counter", "grain_tracker"))
        aux.items.append(k)
    return modules, aux


def _gen_materials(p: dict) -> tuple[Block, Block]:
    materials = Block("Materials")
    if p["formulation"] == "GBEvolution":
        # physical parameters pass through verbatim; the material model
        # derives its phase-field coefficients internally
        mat = Block("CuGrGr")
        mat.items.append(Param("type", "GBEvolution"))
        mat.items.append(Param("T", _fmt_whole(p["T"]), FROM_PROMPT))
        mat.items.append(Param("wGB", _fmt(float(p["wGB"])), FROM_PROMPT))
        mat.items.append(Param("GBmob0", _fmt(float(p["GBmob0"])), FROM_PROMPT))
        mat.items.append(Param("Q", _fmt(float(p["Q"])), FROM_PROMPT))
        mat.items.append(Param("GBenergy", _fmt(float(p["GBenergy"])), FROM_PROMPT))
        materials.items.append(mat)
    else:
        from automoose.plan import PhysicsParams, bridge_coefficients

        bridge = bridge_coefficients(PhysicsParams(
            gb_energy=float(p["GBenergy"]),
            interface_width=float(p["wGB"]),
            mobility_prefactor=float(p["GBmob0"]),
            activation_energy=float(p["Q"]),
            temperature=float(p["T"]),
        ))
        mat = Block("LinearizedGB")
        mat.items.append(Param("type", "GenericConstantMaterial"))
        mat.items.append(Param("prop_names", "'L kappa_op'"))
        mat.items.append(Param(
            "prop_values",
            f"'{bridge.kinetic_coefficient!r} {bridge.gradient_coefficient!r}'",
        ))
        materials.items.append(mat)

    uo = Block("UserObjects")
    if p["ic_type"] == "Voronoi":
        voronoi = Block("voronoi")
        voronoi.items.append(Param("type", "PolycrystalVoronoi"))
        voronoi.items.append(Param("grain_num", _fmt(p["grain_num"]), FROM_PROMPT))
        voronoi.items.append(Param("rand_seed", _fmt(p["rand_seed"]), FROM_PROMPT))
        voronoi.items.append(Param("int_width", _fmt_whole(float(p["wGB"]) / 2.0)))
        uo.items.append(voronoi)
    tracker = Block("grain_tracker")
    tracker.items.append(Param("type", "GrainTracker"))
    tracker.items.append(Param("threshold", "0.1"))
    tracker.items.append(Param("compute_halo_maps", "true"))
    if p["ic_type"] == "Voronoi":
        tracker.items.append(Param("polycrystal_ic_uo", "voronoi"))
    uo.items.append(tracker)
    if p["terminator_threshold"] is not None:
        term = Block("terminator")
        term.items.append(Param("type", "Terminator"))
        term.items.append(Param("expression", f"'grain_tracker < {_fmt(p['terminator_threshold'])}'"))
        uo.items.append(term)
    return materials, uo


def _gen_postprocessors(p: dict) -> Block:
    pp = Block("Postprocessors")
    dt = Block("dt")
    dt.items.append(Param("type", "TimestepSize"))
    pp.items.append(dt)
    n_el = Block("n_elements")
    n_el.items.append(Param("type", "NumElements"))
    n_el.items.append(Param("execute_on", "timestep_end"))
    pp.items.append(n_el)
    dofs = Block("DOFs")
    dofs.items.append(Param("type", "NumDOFs"))
    pp.items.append(dofs)
    return pp


def _gen_executioner(p: dict) -> tuple[Block, Block, Block]:
    ex = Block("Executioner")
    ex.items.append(Param("type", "Transient"))
    ex.items.append(Param("scheme", "bdf2"))
    ex.items.append(Param("solve_type", "PJFNK"))
    ex.items.append(Param("petsc_options_iname", "'-pc_type'"))
    ex.items.append(Param("petsc_options_value", "'asm'"))
    ex.items.append(Param("l_tol", _fmt(float(p["l_tol"]))))
    ex.items.append(Param("l_max_its", _fmt(p["l_max_its"])))
    ex.items.append(Param("nl_max_its", _fmt(p["nl_max_its"])))
    ex.items.append(Param("nl_rel_tol", _fmt(float(p["nl_rel_tol"]))))
    ex.items.append(Param("end_time", _fmt_whole(p["end_time"]), FROM_PROMPT))
    stepper = Block("TimeStepper")
    stepper.items.append(Param("type", "IterationAdaptiveDT"))
    stepper.items.append(Param("cutback_factor", _fmt(float(p["cutback_factor"]))))
    stepper.items.append(Param("dt", _fmt_whole(p["dt"])))
    if p["dt_max"] is not None:
        stepper.items.append(Param("dt_max", _fmt_whole(p["dt_max"])))
    stepper.items.append(Param("growth_factor", _fmt(float(p["growth_factor"]))))
    stepper.items.append(Param("optimal_iterations", _fmt(p["optimal_iterations"])))
    ex.items.append(stepper)
    if p["adaptivity"]:
        adaptivity = Block("Adaptivity")
        adaptivity.items.append(Param("initial_adaptivity", "2"))
        adaptivity.items.append(Param("refine_fraction", "0.7"))
        adaptivity.items.append(Param("coarsen_fraction", "0.1"))
        adaptivity.items.append(Param("max_h_level", "4"))
        ex.items.append(adaptivity)

    bcs = Block("BCs")
    if p["periodic"]:
        periodic = Block("Periodic")
        all_block = Block("All")
        all_block.items.append(Param("auto_direction", "'x y'" if p["dim"] == 2 else "'x y z'", FROM_PROMPT))
        periodic.items.append(all_block)
        bcs.items.append(periodic)

    outputs = Block("Outputs")
    outputs.items.append(Param("file_base", p["file_base"]))
    if p["exodus"]:
        outputs.items.append(Param("exodus", "true"))
    if p["csv"]:
        outputs.items.append(Param("csv", "true"))
    if p["checkpoint"]:
        outputs.items.append(Param("checkpoint", "true"))
        outputs.items.append(Param("nemesis", "true"))
        perf = Block("perf_graph")
        perf.items.append(Param("type", "PerfGraphOutput"))
        outputs.items.append(perf)
    console = Block("console")
    console.items.append(Param("type", "Console"))
    outputs.items.append(console)
    return ex, bcs, outputs


def build_document(params: dict) -> HitDocument:
    p = fill_defaults(params)
    _check(p)
    mesh = _gen_mesh(p)
    global_params, ics, aux_vars = _gen_variables(p)
    modules, aux_kernels = _gen_kernels(p)
    materials, user_objects = _gen_materials(p)
    postprocessors = _gen_postprocessors(p)
    executioner, bcs, outputs = _gen_executioner(p)
    blocks = [
        mesh, global_params, user_objects, ics, modules,
        aux_vars, aux_kernels, materials,
    ]
    if bcs.items:
        blocks.append(bcs)
    blocks += [postprocessors, executioner, outputs]
    return HitDocument(blocks=blocks)


def generate_input(params: dict) -> str:
    """Render a complete input file from a parameter map.

    Pure function: identical maps produce identical bytes.
    """
    return hit.render(build_document(params))


def parse_results(columns: dict) -> dict:
    """Extract coarsening observables from parsed CSV columns.

    Requires ``time`` and ``grain_count``; the input mapping is never
    mutated.  The coarsening fit itself is delegated to the kinetics
    module.
    """
    for required in ("time", "grain_count"):
        if required not in columns:
            raise PluginContractError(f"missing required column '{required}'")
    times = list(columns["time"])
    counts = list(columns["grain_count"])
    fit = kinetics.fit_coarsening(times, counts)
    metrics = {
        "time": times,
        "grain_count": counts,
        "N0": counts[0] if counts else None,
        "N_final": counts[-1] if counts else None,
        "k": fit.rate_constant,
        "R2": fit.r_squared,
        "suppressed": fit.suppressed,
        "n_points": fit.n_points,
        "kinetics_anomaly": fit.anomaly,
    }
    if "num_dofs" in columns and len(columns["num_dofs"]):
        metrics["peak_num_dofs"] = max(columns["num_dofs"])
    if "wall_time_s" in columns and len(columns["wall_time_s"]):
        wall = list(columns["wall_time_s"])
        metrics["wall_time_stats"] = {"total": sum(wall), "max": max(wall)}
    return metrics


SCHEMA = hit.InputSchema(
    blocks={
        "Mesh": hit.BlockSchema(required_keys=frozenset({"type", "dim", "nx", "ny"})),
        "GlobalParams": hit.BlockSchema(required_keys=frozenset({"op_num"})),
        "UserObjects": hit.BlockSchema(
            object_registry="objects",
            cross_refs={"polycrystal_ic_uo": "objects"},
        ),
        "Postprocessors": hit.BlockSchema(object_registry="objects"),
        "ICs": hit.BlockSchema(cross_refs={"polycrystal_ic_uo": "objects"}),
        "AuxKernels": hit.BlockSchema(cross_refs={"flood_counter": "objects"}),
        "Outputs": hit.BlockSchema(
            unused_keys={"interval": "Outputs/exodus/interval"},
        ),
        "Executioner": hit.BlockSchema(required_keys=frozenset({"type"})),
    },
    known_block_names=frozenset({
        "Mesh", "GlobalParams", "Variables", "ICs", "AuxVariables", "Kernels",
        "AuxKernels", "Modules", "Materials", "UserObjects", "Postprocessors",
        "Executioner", "BCs", "Adaptivity", "Outputs", "TestHarness",
    }),
)
