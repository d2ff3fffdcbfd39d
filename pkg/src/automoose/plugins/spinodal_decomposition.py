"""Spinodal decomposition plugin stub (Cahn-Hilliard formulation).

Registered so the intent parser can name it in rejections; input
generation is not implemented yet.
"""

from automoose.plugins import PluginStubError

PLUGIN = {
    "label": "spinodal_decomposition",
    "executable_key": "phase_field",
    "params": {},
    "presets": {},
    "sweepable": (),
    "result_keys": (),
    "system_prompt": "Spinodal decomposition (Cahn-Hilliard) selector; not yet implemented.",
    "keywords": ("spinodal decomposition", "spinodal", "cahn-hilliard"),
    "status": "stub",
    "formulations": (),
}


def generate_input(params):
    raise PluginStubError("spinodal_decomposition is a stub")


def parse_results(columns):
    raise PluginStubError("spinodal_decomposition is a stub")
