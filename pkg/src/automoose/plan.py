"""Simulation plan: the shared state object passed between pipeline stages.

Holds the physical parameter set, the Moelans parameter bridge, Arrhenius
mobility, mesh-resolution checks, sweep expansion, and the JSON wire shape
used by the intent parser and the tool server.

All types are immutable value objects and every operation is a pure
function, so plans can be shared freely across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .constants import BOLTZMANN_EV

# Parameter names accepted for sweeps, with the aliases used by prompts
# and by the tool surface.
SWEEPABLE_PARAMS = ("T", "grain_num", "Q", "gb_energy", "mobility_prefactor", "op_num")

SWEEP_ALIASES = {
    "T": "T",
    "temperature": "T",
    "grain_num": "grain_num",
    "num_grains": "grain_num",
    "grains": "grain_num",
    "Q": "Q",
    "activation_energy": "Q",
    "gb_energy": "gb_energy",
    "GBenergy": "gb_energy",
    "sigma": "gb_energy",
    "mobility_prefactor": "mobility_prefactor",
    "GBmob0": "mobility_prefactor",
    "M0": "mobility_prefactor",
    "op_num": "op_num",
}


class PlanError(ValueError):
    """Domain error raised for invalid plan or parameter values."""


class SweepError(PlanError):
    """Raised for an unknown or malformed sweep specification."""

    def __init__(self, message: str, legal_names: tuple[str, ...] = SWEEPABLE_PARAMS):
        super().__init__(f"{message}; legal sweep parameters: {', '.join(legal_names)}")
        self.legal_names = legal_names


def canonical_sweep_param(name: str) -> str:
    """Map a sweep parameter alias onto its canonical name, or raise."""
    if name in SWEEP_ALIASES:
        return SWEEP_ALIASES[name]
    raise SweepError(f"unknown sweep parameter {name!r}")


@dataclass(frozen=True)
class PhysicsParams:
    """Measurable grain-boundary parameters fed to the material model."""

    gb_energy: float = 0.708          # sigma, energy per area (pass-through units)
    interface_width: float = 14.0     # w_GB, length
    mobility_prefactor: float = 2.5e-6
    activation_energy: float = 0.23   # Q, eV
    temperature: float = 450.0        # T, K
    free_energy_weight_gamma: float = 1.5

    def validate(self) -> None:
        for name in ("gb_energy", "interface_width", "mobility_prefactor", "temperature"):
            if getattr(self, name) <= 0:
                raise PlanError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.activation_energy < 0:
            raise PlanError(f"activation_energy must be >= 0, got {self.activation_energy!r}")


@dataclass(frozen=True)
class BridgeCoefficients:
    """Phase-field coefficients derived from the measurable set."""

    kinetic_coefficient: float   # L
    free_energy_weight: float    # mu
    gradient_coefficient: float  # kappa


def mobility_at(p: PhysicsParams, temperature: Optional[float] = None) -> float:
    """Arrhenius grain-boundary mobility M0 * exp(-Q / (kB T))."""
    T = p.temperature if temperature is None else temperature
    if T <= 0:
        raise PlanError(f"temperature must be > 0, got {T!r}")
    if p.mobility_prefactor <= 0:
        raise PlanError(f"mobility_prefactor must be > 0, got {p.mobility_prefactor!r}")
    return p.mobility_prefactor * math.exp(-p.activation_energy / (BOLTZMANN_EV * T))


def bridge_coefficients(p: PhysicsParams) -> BridgeCoefficients:
    """Moelans parameter bridge: (sigma, w_GB, M_GB) -> (L, mu, kappa)."""
    p.validate()
    m_gb = mobility_at(p)
    return BridgeCoefficients(
        kinetic_coefficient=4.0 * m_gb / (3.0 * p.interface_width),
        free_energy_weight=6.0 * p.gb_energy / p.interface_width,
        gradient_coefficient=0.75 * p.gb_energy * p.interface_width,
    )


@dataclass(frozen=True)
class Domain:
    extent_x: float = 1000.0
    extent_y: float = 1000.0
    extent_z: float = 0.0


@dataclass(frozen=True)
class Mesh:
    nx: int = 12
    ny: int = 12
    nz: int = 0
    element_type: str = "QUAD4"   # QUAD4 (2D) or HEX8 (3D)
    uniform_refine: int = 3


@dataclass(frozen=True)
class Physics:
    params: PhysicsParams = field(default_factory=PhysicsParams)
    formulation: str = "GBEvolution"  # or LinearizedInterface
    grain_num: int = 15
    op_num: int = 15
    ic_type: str = "Voronoi"          # Voronoi or Random
    coloring: str = "bt"              # jp or bt
    rand_seed: int = 42


@dataclass(frozen=True)
class SolverSettings:
    nl_rel_tol: float = 1e-8
    l_tol: float = 1e-4
    nl_max_its: int = 20
    l_max_its: int = 30
    dt_initial: float = 25.0
    dt_max: Optional[float] = None
    end_time: float = 4000.0
    cutback_factor: float = 0.5
    growth_factor: float = 1.1
    optimal_iterations: int = 8
    adaptivity: bool = True


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple = ()

    def validate(self) -> None:
        canonical_sweep_param(self.parameter)
        if len(self.values) < 1:
            raise SweepError("sweep needs at least one value")
        if len(set(self.values)) != len(self.values):
            raise SweepError("sweep values must be distinct")


@dataclass(frozen=True)
class RunSettings:
    n_mpi: int = 1
    sweep: Optional[SweepSpec] = None
    backend: str = "reference"  # reference or external


@dataclass(frozen=True)
class Outputs:
    csv: bool = True
    exodus: bool = True
    file_base: str = "grain_growth"


@dataclass(frozen=True)
class SimulationPlan:
    domain: Domain = field(default_factory=Domain)
    mesh: Mesh = field(default_factory=Mesh)
    physics: Physics = field(default_factory=Physics)
    boundary: str = "periodic"  # periodic or dirichlet
    solver: SolverSettings = field(default_factory=SolverSettings)
    run: RunSettings = field(default_factory=RunSettings)
    outputs: Outputs = field(default_factory=Outputs)

    @property
    def dim(self) -> int:
        return 3 if self.mesh.element_type == "HEX8" else 2

    def validate(self) -> None:
        self.physics.params.validate()
        if self.physics.op_num > self.physics.grain_num:
            raise PlanError(
                f"op_num ({self.physics.op_num}) must not exceed "
                f"grain_num ({self.physics.grain_num})"
            )
        if not 0 < self.solver.cutback_factor < 1:
            raise PlanError(f"cutback_factor must be in (0, 1), got {self.solver.cutback_factor!r}")
        if self.solver.end_time <= 0:
            raise PlanError(f"end_time must be > 0, got {self.solver.end_time!r}")
        if self.mesh.element_type not in ("QUAD4", "HEX8"):
            raise PlanError(f"unknown element_type {self.mesh.element_type!r}")
        if self.mesh.element_type == "HEX8" and self.mesh.nz <= 0:
            raise PlanError("HEX8 mesh requires nz > 0")
        if self.mesh.element_type == "QUAD4" and self.mesh.nz:
            raise PlanError("QUAD4 mesh must not set nz")
        if self.boundary not in ("periodic", "dirichlet"):
            raise PlanError(f"unknown boundary {self.boundary!r}")
        if self.run.sweep is not None:
            self.run.sweep.validate()


def effective_mesh_spacing(plan: SimulationPlan) -> tuple[float, bool]:
    """Effective spacing h after uniform refinement, plus the resolution flag.

    The interface-resolution rule h <= w_GB/4 is reported, not enforced:
    the reference benchmark itself violates it while running fine, so the
    caller decides whether to treat a False flag as fatal.
    """
    h = plan.domain.extent_x / (plan.mesh.nx * 2 ** plan.mesh.uniform_refine)
    return h, h <= plan.physics.params.interface_width / 4.0


def _set_swept_field(plan: SimulationPlan, param: str, value) -> SimulationPlan:
    physics = plan.physics
    if param == "T":
        physics = replace(physics, params=replace(physics.params, temperature=value))
    elif param == "Q":
        physics = replace(physics, params=replace(physics.params, activation_energy=value))
    elif param == "gb_energy":
        physics = replace(physics, params=replace(physics.params, gb_energy=value))
    elif param == "mobility_prefactor":
        physics = replace(physics, params=replace(physics.params, mobility_prefactor=value))
    elif param == "grain_num":
        physics = replace(physics, grain_num=value)
    elif param == "op_num":
        physics = replace(physics, op_num=value)
    else:
        raise SweepError(f"unknown sweep parameter {param!r}")
    return replace(plan, physics=physics)


def _value_label(param: str, value) -> str:
    text = f"{value:g}" if isinstance(value, float) else str(value)
    return f"{param}{text}".replace(".", "p").replace("-", "m")


def expand_sweep(plan: SimulationPlan) -> list[SimulationPlan]:
    """Expand a swept plan into one independent case per sweep value.

    Every non-swept field is preserved bit-for-bit; each case gets the
    swept field set, a distinguishing file_base suffix, and no sweep of
    its own.  A plan without a sweep expands to [plan].
    """
    spec = plan.run.sweep
    if spec is None:
        return [plan]
    spec.validate()
    param = canonical_sweep_param(spec.parameter)
    cases = []
    for value in spec.values:
        case = _set_swept_field(plan, param, value)
        case = replace(
            case,
            run=replace(case.run, sweep=None),
            outputs=replace(case.outputs, file_base=f"{plan.outputs.file_base}_{_value_label(param, value)}"),
        )
        cases.append(case)
    return cases


# ---------------------------------------------------------------------------
# JSON wire shape: {"formulation", "dim", "sweep", "adaptivity", "periodic",
# "params": {flat map}} as produced by the intent parser.
# ---------------------------------------------------------------------------

def plan_to_json(plan: SimulationPlan) -> dict:
    p = plan.physics.params
    params: dict[str, Any] = {
        "T": p.temperature,
        "GBenergy": p.gb_energy,
        "wGB": p.interface_width,
        "GBmob0": p.mobility_prefactor,
        "Q": p.activation_energy,
        "gamma": p.free_energy_weight_gamma,
        "grain_num": plan.physics.grain_num,
        "op_num": plan.physics.op_num,
        "ic_type": plan.physics.ic_type,
        "coloring": plan.physics.coloring,
        "rand_seed": plan.physics.rand_seed,
        "nx": plan.mesh.nx,
        "ny": plan.mesh.ny,
        "xmax": plan.domain.extent_x,
        "ymax": plan.domain.extent_y,
        "uniform_refine": plan.mesh.uniform_refine,
        "nl_rel_tol": plan.solver.nl_rel_tol,
        "l_tol": plan.solver.l_tol,
        "nl_max_its": plan.solver.nl_max_its,
        "l_max_its": plan.solver.l_max_its,
        "dt": plan.solver.dt_initial,
        "end_time": plan.solver.end_time,
        "cutback_factor": plan.solver.cutback_factor,
        "growth_factor": plan.solver.growth_factor,
        "optimal_iterations": plan.solver.optimal_iterations,
        "n_mpi": plan.run.n_mpi,
        "backend": plan.run.backend,
        "csv": plan.outputs.csv,
        "exodus": plan.outputs.exodus,
        "file_base": plan.outputs.file_base,
    }
    if plan.solver.dt_max is not None:
        params["dt_max"] = plan.solver.dt_max
    if plan.dim == 3:
        params["nz"] = plan.mesh.nz
        params["zmax"] = plan.domain.extent_z
    return {
        "formulation": plan.physics.formulation,
        "dim": plan.dim,
        "sweep": (
            {"param": plan.run.sweep.parameter, "values": list(plan.run.sweep.values)}
            if plan.run.sweep is not None
            else None
        ),
        "adaptivity": plan.solver.adaptivity,
        "periodic": plan.boundary == "periodic",
        "params": params,
    }


def plan_from_json(doc: dict) -> SimulationPlan:
    params = dict(doc.get("params", {}))
    dim = int(doc.get("dim", 2))
    sweep_doc = doc.get("sweep")
    sweep = None
    if sweep_doc:
        sweep = SweepSpec(
            parameter=canonical_sweep_param(sweep_doc["param"]),
            values=tuple(sweep_doc["values"]),
        )
    physics = Physics(
        params=PhysicsParams(
            gb_energy=float(params.get("GBenergy", 0.708)),
            interface_width=float(params.get("wGB", 14.0)),
            mobility_prefactor=float(params.get("GBmob0", 2.5e-6)),
            activation_energy=float(params.get("Q", 0.23)),
            temperature=float(params.get("T", 450)),
            free_energy_weight_gamma=float(params.get("gamma", 1.5)),
        ),
        formulation=doc.get("formulation", "GBEvolution"),
        grain_num=int(params.get("grain_num", 15)),
        op_num=int(params.get("op_num", params.get("grain_num", 15))),
        ic_type=params.get("ic_type", "Voronoi"),
        coloring=params.get("coloring", "bt"),
        rand_seed=int(params.get("rand_seed", 42)),
    )
    plan = SimulationPlan(
        domain=Domain(
            extent_x=float(params.get("xmax", 1000.0)),
            extent_y=float(params.get("ymax", 1000.0)),
            extent_z=float(params.get("zmax", 0.0)) if dim == 3 else 0.0,
        ),
        mesh=Mesh(
            nx=int(params.get("nx", 12)),
            ny=int(params.get("ny", 12)),
            nz=int(params.get("nz", 12)) if dim == 3 else 0,
            element_type="HEX8" if dim == 3 else "QUAD4",
            uniform_refine=int(params.get("uniform_refine", 3)),
        ),
        physics=physics,
        boundary="periodic" if doc.get("periodic", True) else "dirichlet",
        solver=SolverSettings(
            nl_rel_tol=float(params.get("nl_rel_tol", 1e-8)),
            l_tol=float(params.get("l_tol", 1e-4)),
            nl_max_its=int(params.get("nl_max_its", 20)),
            l_max_its=int(params.get("l_max_its", 30)),
            dt_initial=float(params.get("dt", 25.0)),
            dt_max=float(params["dt_max"]) if "dt_max" in params else None,
            end_time=float(params.get("end_time", 4000.0)),
            cutback_factor=float(params.get("cutback_factor", 0.5)),
            growth_factor=float(params.get("growth_factor", 1.1)),
            optimal_iterations=int(params.get("optimal_iterations", 8)),
            adaptivity=bool(doc.get("adaptivity", True)),
        ),
        run=RunSettings(
            n_mpi=int(params.get("n_mpi", 1)),
            sweep=sweep,
            backend=params.get("backend", "reference"),
        ),
        outputs=Outputs(
            csv=bool(params.get("csv", True)),
            exodus=bool(params.get("exodus", True)),
            file_base=params.get("file_base", "grain_growth"),
        ),
    )
    plan.validate()
    return plan


def plan_to_json_text(plan: SimulationPlan) -> str:
    return json.dumps(plan_to_json(plan), indent=2)


def plan_fields_flat(plan: SimulationPlan) -> dict:
    """Flatten every plan field for provenance records."""
    doc = plan_to_json(plan)
    flat = {k: v for k, v in doc.items() if k != "params"}
    flat.update(doc["params"])
    return flat


def params_for_plugin(plan: SimulationPlan) -> dict:
    """Map a plan onto the flat parameter dict the plugin contract takes."""
    doc = plan_to_json(plan)
    params = dict(doc["params"])
    params.pop("gamma", None)
    params.pop("backend", None)
    params["formulation"] = doc["formulation"]
    params["dim"] = doc["dim"]
    params["periodic"] = doc["periodic"]
    params["adaptivity"] = doc["adaptivity"]
    return params
