"""Deterministic intent parser: constrained natural-language prompt -> plan.

The grammar is a fixed pattern table, not NLP: each parameter has an alias
set followed by ``=`` and a number or a braced value list; units are
tolerated and ignored.  Unicode and ASCII spellings are both accepted.  A
prompt that is already a valid plan-shaped JSON document is ingested
directly, which lets programmatic clients skip prose.  An LLM-backed
parser can be slotted in behind the same IntentResult contract.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from typing import Optional

from .plan import (
    Domain,
    Mesh,
    Physics,
    PhysicsParams,
    RunSettings,
    SimulationPlan,
    SweepSpec,
    plan_from_json,
)
from .plugins import PluginRegistry, registry_load

NUMBER = r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?"

# alias pattern -> canonical parameter name; longest/most specific first
PARAM_ALIASES = [
    (r"(?:σ|\bsigma\b|\bGBenergy\b|\bgb_energy\b)", "gb_energy"),
    (r"(?:\bw_?GB\b|\binterface\s+width\b)", "interface_width"),
    (r"(?:\bM0\b|M₀|\bGBmob0\b|\bmobility\s+prefactor\b)", "mobility_prefactor"),
    (r"(?:\bQ\b|\bactivation\s+energy\b)", "activation_energy"),
    (r"(?:\bT\b|\btemperature\b)", "temperature"),
    (r"(?:\bop_num\b)", "op_num"),
    (r"(?:\bgrain_num\b|\bnum_grains\b)", "grain_num"),
    (r"(?:\bend[\s_]time\b)", "end_time"),
]

# canonical parameter name -> sweep parameter name (None: not sweepable)
SWEEP_NAME = {
    "temperature": "T",
    "grain_num": "grain_num",
    "activation_energy": "Q",
    "gb_energy": "gb_energy",
    "mobility_prefactor": "mobility_prefactor",
    "op_num": "op_num",
}

_SUPERSCRIPTS = str.maketrans("⁰¹²³⁴⁵⁶⁷⁸⁹⁻", "0123456789-")


class ArchitectError(ValueError):
    pass


@dataclass(frozen=True)
class IntentResult:
    """Either a resolved plan or a structured rejection, never both."""

    plan: Optional[SimulationPlan] = None
    rejection: Optional[dict] = None

    def __post_init__(self):
        if (self.plan is None) == (self.rejection is None):
            raise ArchitectError("exactly one of plan/rejection must be set")


def _normalise(text: str) -> str:
    # scientific notation written as a product: 2.5x10^-6, 2.5×10⁻⁶
    text = text.replace("×", "x")
    text = re.sub(
        r"10\^?([⁰¹²³⁴-⁹⁻]+)",
        lambda m: "10^" + m.group(1).translate(_SUPERSCRIPTS),
        text,
    )
    text = re.sub(rf"({NUMBER})\s*x\s*10\^?(\{{)?([-+]?\d+)(?(2)\}})", r"\1e\3", text)
    return text


def _parse_number(token: str):
    if re.fullmatch(r"[-+]?\d+", token):
        return int(token)
    return float(token)


def _find_scalar_or_list(text: str, alias_pattern: str):
    """Return ('list', values) or ('scalar', value) or None for one alias set."""
    braced = re.search(alias_pattern + r"\s*=\s*\{([^}]*)\}", text)
    if braced:
        tokens = [t.strip() for t in braced.group(1).split(",") if t.strip()]
        values = []
        for t in tokens:
            m = re.fullmatch(NUMBER, t)
            if not m:
                raise ArchitectError(f"cannot parse sweep value {t!r}")
            values.append(_parse_number(t))
        return "list", values
    scalar = re.search(alias_pattern + rf"\s*=\s*({NUMBER})", text)
    if scalar:
        return "scalar", _parse_number(scalar.group(1))
    return None


def _detect_formulation(text: str, registry: PluginRegistry):
    lower = text.lower()
    grain = registry.plugins.get("grain_growth")
    if grain is not None:
        if "linearized interface" in lower:
            return "grain_growth", "LinearizedInterface"
        if "grain growth" in lower:
            return "grain_growth", "GBEvolution"
    for name, plugin in sorted(registry.plugins.items()):
        if name == "grain_growth":
            continue
        for keyword in plugin.metadata.keywords:
            if keyword in lower:
                return name, None  # recognised but stub -> rejection
    return None, None


def parse_intent(prompt: str, registry: Optional[PluginRegistry] = None) -> IntentResult:
    """Parse a prompt into a plan or a structured unsupported-physics rejection."""
    if not prompt or not prompt.strip():
        raise ArchitectError("empty prompt")
    registry = registry or registry_load()

    stripped = prompt.strip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ArchitectError(f"prompt looks like JSON but does not parse: {exc}") from exc
        return IntentResult(plan=plan_from_json(doc))

    plugin_name, formulation = _detect_formulation(prompt, registry)
    if plugin_name is None or formulation is None:
        return IntentResult(rejection={
            "code": "unsupported_physics",
            "available_plugins": registry.catalog(),
        })

    text = _normalise(prompt)

    scalars: dict = {}
    sweep: Optional[SweepSpec] = None
    for alias_pattern, name in PARAM_ALIASES:
        found = _find_scalar_or_list(text, alias_pattern)
        if found is None:
            continue
        kind, value = found
        if kind == "list":
            if name not in SWEEP_NAME:
                raise ArchitectError(f"{name} is not sweepable")
            if sweep is not None:
                raise ArchitectError("multiple sweep parameters")
            sweep = SweepSpec(parameter=SWEEP_NAME[name], values=tuple(value))
        else:
            scalars[name] = value

    grains = re.search(r"(\d+)\s+(Voronoi|random)\s+grains", text, re.IGNORECASE)
    if grains:
        scalars["grain_num"] = int(grains.group(1))
        scalars["ic_type"] = "Voronoi" if grains.group(2).lower() == "voronoi" else "Random"
    else:
        grains = re.search(r"(\d+)\s+grains", text)
        if grains:
            scalars["grain_num"] = int(grains.group(1))

    mesh = re.search(r"(\d+)\s*x\s*(\d+)(?:\s*x\s*(\d+))?\s+mesh", text, re.IGNORECASE)
    domain = re.search(rf"({NUMBER})\s*x\s*({NUMBER})(?:\s*x\s*({NUMBER}))?\s*nm", text)
    refine = re.search(r"refinement\s+level\s+(\d+)", text, re.IGNORECASE)
    seed = re.search(r"seed\s*=\s*(\d+)", text, re.IGNORECASE)

    dim = 2
    if re.search(r"\b3D\b|\bHEX8\b", text, re.IGNORECASE):
        dim = 3
    elif re.search(r"\b2D\b|\bQUAD4\b", text, re.IGNORECASE):
        dim = 2

    boundary = "periodic"
    if re.search(r"dirichlet", text, re.IGNORECASE):
        boundary = "dirichlet"

    defaults = SimulationPlan()
    grain_num = scalars.get("grain_num", defaults.physics.grain_num)
    op_num = scalars.get("op_num", grain_num)
    base_temperature = scalars.get("temperature")
    if base_temperature is None and sweep is not None and sweep.parameter == "T":
        base_temperature = sweep.values[0]
    if base_temperature is None:
        base_temperature = defaults.physics.params.temperature

    physics = Physics(
        params=PhysicsParams(
            gb_energy=scalars.get("gb_energy", defaults.physics.params.gb_energy),
            interface_width=scalars.get("interface_width", defaults.physics.params.interface_width),
            mobility_prefactor=scalars.get("mobility_prefactor", defaults.physics.params.mobility_prefactor),
            activation_energy=scalars.get("activation_energy", defaults.physics.params.activation_energy),
            temperature=base_temperature,
        ),
        formulation=formulation,
        grain_num=grain_num,
        op_num=op_num,
        ic_type=scalars.get("ic_type", defaults.physics.ic_type),
        coloring="bt" if op_num == grain_num else "jp",
        rand_seed=int(seed.group(1)) if seed else defaults.physics.rand_seed,
    )
    plan = SimulationPlan(
        domain=Domain(
            extent_x=_parse_number(domain.group(1)) if domain else defaults.domain.extent_x,
            extent_y=_parse_number(domain.group(2)) if domain else defaults.domain.extent_y,
            extent_z=(_parse_number(domain.group(3)) if domain and domain.group(3) else 0.0)
            if dim == 3 else 0.0,
        ),
        mesh=Mesh(
            nx=int(mesh.group(1)) if mesh else defaults.mesh.nx,
            ny=int(mesh.group(2)) if mesh else defaults.mesh.ny,
            nz=(int(mesh.group(3)) if mesh and mesh.group(3) else defaults.mesh.nx) if dim == 3 else 0,
            element_type="HEX8" if dim == 3 else "QUAD4",
            uniform_refine=int(refine.group(1)) if refine else defaults.mesh.uniform_refine,
        ),
        physics=physics,
        boundary=boundary,
        solver=replace(
            defaults.solver,
            end_time=float(scalars.get("end_time", defaults.solver.end_time)),
        ),
        run=RunSettings(sweep=sweep),
    )
    plan.validate()
    return IntentResult(plan=plan)
