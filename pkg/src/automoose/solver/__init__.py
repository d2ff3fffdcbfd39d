"""Embedded 2D multi-order-parameter Allen-Cahn solver.

Stands in for the external finite-element binary: same command line
(``automoose-solver -i input.i``), same CSV schema, same exit-code and
diagnostic conventions, but integrates explicitly on a periodic
finite-difference grid so the full workflow is verifiable at desk scale.
"""

from .core import (
    FieldState,
    GrainCensus,
    SolverConfig,
    SolverFault,
    count_grains,
    free_energy,
    init_state,
    stability_cap,
    step,
)
from .ic import voronoi_ic
from .coloring import ColoringError, color_grains
from .main import run_from_input

__all__ = [
    "FieldState",
    "GrainCensus",
    "SolverConfig",
    "SolverFault",
    "ColoringError",
    "color_grains",
    "count_grains",
    "free_energy",
    "init_state",
    "run_from_input",
    "stability_cap",
    "step",
    "voronoi_ic",
]
